"""Two-way regular path queries: automata and breadth-first product search.

An expression is compiled to an epsilon-free automaton whose letters are
(edge type, forward?) pairs.  Evaluation walks the product of that automaton
with the graph breadth-first from an anchored endpoint, so the first time an
object is reached in a final state the recorded parents spell a shortest
witness.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .context import Witness
from .dgql.ast import Alt, Concat, Eps, Inv, Star, Sym
from .dgql.desugar import expand_rpq
from .errors import UnboundEndpointsError


@dataclass
class RpqAutomaton:
    start: int
    finals: frozenset
    # state -> tuple of ((type, forward), next state)
    transitions: dict = field(default_factory=dict)

    @property
    def states(self) -> int:
        return len(self.transitions)

    def accepts(self, word) -> bool:
        current = {self.start}
        for letter in word:
            current = {q2 for q in current for a, q2 in self.transitions[q] if a == letter}
            if not current:
                return False
        return bool(current & self.finals)

    def letters(self) -> set:
        return {a for moves in self.transitions.values() for a, _ in moves}


# -- compilation ------------------------------------------------------------------------

def push_inverses(expr, inverted: bool = False):
    """Move inverses down to the symbols: ^(a/b) = ^b/^a, ^(a|b) = ^a|^b,
    ^(r*) = (^r)*, ^^r = r.  Symbols come back as (const, forward)."""
    if isinstance(expr, Eps):
        return expr
    if isinstance(expr, Sym):
        return ("sym", expr.type, not inverted)
    if isinstance(expr, Inv):
        return push_inverses(expr.expr, not inverted)
    if isinstance(expr, Alt):
        return Alt(push_inverses(expr.left, inverted), push_inverses(expr.right, inverted))
    if isinstance(expr, Concat):
        left, right = push_inverses(expr.left, inverted), push_inverses(expr.right, inverted)
        return Concat(right, left) if inverted else Concat(left, right)
    if isinstance(expr, Star):
        return Star(push_inverses(expr.expr, inverted))
    raise TypeError(f"unexpected rpq node {expr!r}")


class _Thompson:
    def __init__(self, resolve):
        self.resolve = resolve
        self.eps: list[list[int]] = []
        self.moves: list[list] = []

    def state(self) -> int:
        self.eps.append([])
        self.moves.append([])
        return len(self.eps) - 1

    def build(self, expr) -> tuple[int, int]:
        s, e = self.state(), self.state()
        if isinstance(expr, tuple):
            _, const, forward = expr
            letter = self.resolve(const)
            if letter is not None:
                self.moves[s].append(((letter, forward), e))
        elif isinstance(expr, Eps):
            self.eps[s].append(e)
        elif isinstance(expr, Concat):
            s1, e1 = self.build(expr.left)
            s2, e2 = self.build(expr.right)
            self.eps[s].append(s1)
            self.eps[e1].append(s2)
            self.eps[e2].append(e)
        elif isinstance(expr, Alt):
            for part in (expr.left, expr.right):
                s1, e1 = self.build(part)
                self.eps[s].append(s1)
                self.eps[e1].append(e)
        else:  # Star
            s1, e1 = self.build(expr.expr)
            self.eps[s] += [s1, e]
            self.eps[e1] += [s1, e]
        return s, e


def _closure(eps, state) -> set:
    seen = {state}
    stack = [state]
    while stack:
        for nxt in eps[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _letter_key(letter):
    const, forward = letter
    return (repr(const), not forward)


def compile_rpq(expr, resolve=lambda const: const) -> RpqAutomaton:
    """Compile an rpq expression.  ``resolve`` maps a type constant to the
    letter used in transitions (an ObjectId when evaluating against a store)
    or None when the type does not exist."""
    builder = _Thompson(resolve)
    start, end = builder.build(push_inverses(expand_rpq(expr)))
    n = len(builder.eps)
    closures = [_closure(builder.eps, q) for q in range(n)]
    finals = {q for q in range(n) if end in closures[q]}
    moves = {q: {(a, p) for r in closures[q] for a, p in builder.moves[r]} for q in range(n)}
    return _minimize(_trim(start, finals, moves))


def _trim(start, finals, moves) -> RpqAutomaton:
    reach = {start}
    stack = [start]
    while stack:
        for _, p in moves[stack.pop()]:
            if p not in reach:
                reach.add(p)
                stack.append(p)
    back = {q: set() for q in moves}
    for q, out in moves.items():
        for _, p in out:
            back[p].add(q)
    useful = {q for q in finals if q in reach}
    stack = list(useful)
    while stack:
        for q in back[stack.pop()]:
            if q in reach and q not in useful:
                useful.add(q)
                stack.append(q)
    keep = useful | {start}
    kept = {q: {(a, p) for a, p in moves[q] if p in useful} for q in keep}
    return _renumber(start, finals & keep, kept)


def _renumber(start, finals, moves) -> RpqAutomaton:
    order = {start: 0}
    queue = deque([start])
    while queue:
        q = queue.popleft()
        for a, p in sorted(moves[q], key=lambda m: (_letter_key(m[0]), m[1])):
            if p not in order:
                order[p] = len(order)
                queue.append(p)
    transitions = {}
    for q, i in order.items():
        out = {(a, order[p]) for a, p in moves[q]}
        transitions[i] = tuple(sorted(out, key=lambda m: (_letter_key(m[0]), m[1])))
    return RpqAutomaton(0, frozenset(order[q] for q in finals if q in order), transitions)


def _minimize(aut: RpqAutomaton) -> RpqAutomaton:
    """Merge bisimilar states (same finality, same letters into the same
    blocks); the accepted language is unchanged."""
    block = {q: int(q in aut.finals) for q in aut.transitions}
    while True:
        signatures = {}
        for q, moves in aut.transitions.items():
            sig = (block[q], frozenset((a, block[p]) for a, p in moves))
            signatures.setdefault(sig, []).append(q)
        if len(signatures) == len(set(block.values())):
            break
        block = {q: i for i, members in enumerate(signatures.values()) for q in members}
    moves = {}
    for q, out in aut.transitions.items():
        moves.setdefault(block[q], set()).update((a, block[p]) for a, p in out)
    finals = {block[q] for q in aut.finals}
    return _renumber(block[aut.start], finals, moves)


# -- adjacency over a store --------------------------------------------------------------

class StoreAdjacency:
    """Neighbors through the two type-leading edge permutations."""

    def __init__(self, db, stats=None):
        self.forward = db.tree("type_source_target_eid")
        self.inverse = db.tree("type_target_source_eid")
        self.is_object = db.is_object
        self.stats = stats

    def neighbors(self, obj, etype, forward: bool):
        tree = self.forward if forward else self.inverse
        if self.stats is not None:
            self.stats.seeks += 1
        for _, _, other, eid in tree.range((etype, obj)):
            yield eid, other


class GraphAdjacency:
    """The same interface over an in-memory graph."""

    def __init__(self, graph):
        self.index: dict = {}
        for eid, (s, t, o) in sorted(graph.gamma.items()):
            self.index.setdefault((t, s, True), []).append((eid, o))
            self.index.setdefault((t, o, False), []).append((eid, s))
        self.is_object = graph.is_object

    def neighbors(self, obj, etype, forward: bool):
        return iter(self.index.get((etype, obj, forward), ()))


# -- search -------------------------------------------------------------------------------

def eval_path(start, automaton: RpqAutomaton, adjacency, want_witness: bool = False):
    """Yield (end object, witness or None) for every object reachable from
    ``start`` by a matching path, each end once, in BFS order."""
    if start is None:
        raise UnboundEndpointsError("path search needs a bound start object")
    if not adjacency.is_object(start):
        return
    root = (start, automaton.start)
    parents = {root: None}
    queue = deque([root])
    emitted = set()
    if automaton.start in automaton.finals:
        emitted.add(start)
        yield start, (Witness((start,), ()) if want_witness else None)
    transitions, finals = automaton.transitions, automaton.finals
    while queue:
        node = queue.popleft()
        obj, state = node
        for (etype, forward), nxt in transitions[state]:
            for eid, other in adjacency.neighbors(obj, etype, forward):
                key = (other, nxt)
                if key in parents:
                    continue
                parents[key] = (node, eid, forward)
                queue.append(key)
                if nxt in finals and other not in emitted:
                    emitted.add(other)
                    yield other, (_witness(parents, key) if want_witness else None)


def _witness(parents, key) -> Witness:
    objects, steps = [key[0]], []
    while parents[key] is not None:
        key, eid, forward = parents[key]
        objects.append(key[0])
        steps.append((eid, forward))
    return Witness(tuple(reversed(objects)), tuple(reversed(steps)))


def reachable_pairs(expr, objects, adjacency, resolve=lambda c: c) -> set:
    """All (start, end) pairs by anchored search from every object."""
    automaton = compile_rpq(expr, resolve)
    return {(s, e) for s in objects for e, _ in eval_path(s, automaton, adjacency)}


__all__ = [
    "GraphAdjacency", "RpqAutomaton", "StoreAdjacency", "compile_rpq", "eval_path", "push_inverses",
    "reachable_pairs",
]
