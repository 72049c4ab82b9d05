"""Reference semantics: mappings, the mapping-set operators, rpq evaluation,
conditions and solution modifiers, plus a naive evaluator over the in-memory
graph that serves as ground truth for the engine.
"""

from __future__ import annotations

import collections.abc as abc
import operator
from collections import defaultdict
from dataclasses import dataclass

from .context import QueryContext, Witness, const_key
from .dgql.ast import (Alt, And, Compare, Concat, Conj, EdgeAtom, Eps, FormalQuery, Inv, LabelAtom, Not,
                       ObjectAtom, Opt, Optional_, Or, PathAtom, Plus, PropAtom, PropRef, Star, Sym, Var)
from .dgql.desugar import check_well_designed
from .errors import IncompatibleError


class Mapping(abc.Mapping):
    """Immutable, hashable partial function from variables to identifiers."""

    __slots__ = ("_data", "_hash")

    def __init__(self, data=()):
        self._data = dict(data)
        self._hash = None

    def __getitem__(self, var):
        return self._data[var]

    def __iter__(self):
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._data.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Mapping):
            return self._data == other._data
        return NotImplemented

    def __repr__(self) -> str:
        body = ", ".join(f"{v}: {o}" for v, o in sorted(self._data.items(), key=lambda kv: kv[0].name))
        return "{" + body + "}"

    def restrict(self, variables) -> "Mapping":
        return Mapping((v, o) for v, o in self._data.items() if v in variables)


def compatible(m1, m2) -> bool:
    if len(m2) < len(m1):
        m1, m2 = m2, m1
    return all(m2.get(v, o) == o for v, o in m1.items())


def merge(m1, m2) -> Mapping:
    if not compatible(m1, m2):
        raise IncompatibleError(f"mappings {m1!r} and {m2!r} disagree")
    data = dict(m1)
    data.update(m2)
    return Mapping(data)


def _uniform_domain(omega) -> frozenset | None:
    domains = {frozenset(m) for m in omega}
    return next(iter(domains)) if len(domains) == 1 else None


def join(omega1, omega2) -> set:
    if not omega1 or not omega2:
        return set()
    d1, d2 = _uniform_domain(omega1), _uniform_domain(omega2)
    if d1 is None or d2 is None:
        return {merge(a, b) for a in omega1 for b in omega2 if compatible(a, b)}
    shared = sorted(d1 & d2, key=lambda v: v.name)
    buckets = defaultdict(list)
    for b in omega2:
        buckets[tuple(b[v] for v in shared)].append(b)
    out = set()
    for a in omega1:
        for b in buckets.get(tuple(a[v] for v in shared), ()):
            data = dict(a)
            data.update(b)
            out.add(Mapping(data))
    return out


def union(omega1, omega2) -> set:
    return set(omega1) | set(omega2)


def difference(omega1, omega2) -> set:
    return {a for a in omega1 if not any(compatible(a, b) for b in omega2)}


def left_outer_join(omega1, omega2) -> set:
    return join(omega1, omega2) | difference(omega1, omega2)


# -- atoms and patterns -------------------------------------------------------------

def _unify(pairs, ctx: QueryContext) -> Mapping | None:
    data = {}
    for term, value in pairs:
        if isinstance(term, Var):
            if data.setdefault(term, value) != value:
                return None
        elif ctx.const_id(term) != value:
            return None
    return Mapping(data)


def _collect(rows, ctx) -> set:
    out = set()
    for pairs in rows:
        m = _unify(pairs, ctx)
        if m is not None:
            out.add(m)
    return out


def eval_atom(atom, graph, ctx: QueryContext | None = None) -> set:
    """All mappings over the atom's variables that satisfy it."""
    ctx = ctx or QueryContext(graph)
    if isinstance(atom, ObjectAtom):
        return _collect((((atom.term, o),) for o in graph.objects), ctx)
    if isinstance(atom, LabelAtom):
        label = ctx.string_id(atom.label)
        rows = (((atom.term, obj),) for obj, labels in graph.labels.items() if label in labels)
        return _collect(rows, ctx)
    if isinstance(atom, PropAtom):
        key = ctx.string_id(atom.key)
        rows = (((atom.term, obj), (atom.value, value))
                for (obj, k), value in graph.props.items() if k == key)
        return _collect(rows, ctx)
    if isinstance(atom, EdgeAtom):
        rows = (((atom.source, s), (atom.type, t), (atom.target, o), (atom.edge, eid))
                for eid, (s, t, o) in graph.gamma.items())
        return _collect(rows, ctx)
    return _eval_path_atom(atom, graph, ctx)


def _eval_path_atom(atom: PathAtom, graph, ctx) -> set:
    if atom.var is None:
        return _collect((((atom.source, a), (atom.target, b)) for a, b in eval_rpq(atom.rpq, graph, ctx)), ctx)
    dist = rpq_distances(atom.rpq, graph, ctx)
    out = set()
    for (a, b) in dist:
        m = _unify(((atom.source, a), (atom.target, b)), ctx)
        if m is not None:
            w = rpq_witness(atom.rpq, a, b, graph, ctx)
            out.add(merge(m, {atom.var: ctx.witness_id(w)}))
    return out


def eval_bgp(atoms, graph, output=None, ctx: QueryContext | None = None) -> set:
    """Conjunction of atoms (edges, labels, properties, objects), projected
    to ``output`` when given."""
    ctx = ctx or QueryContext(graph)
    omega = {Mapping()}
    for atom in atoms:
        omega = join(omega, eval_atom(atom, graph, ctx))
    if output is not None:
        omega = {m.restrict(set(output)) for m in omega}
    return omega


def eval_navigational(output, atoms, paths, graph, ctx: QueryContext | None = None) -> set:
    ctx = ctx or QueryContext(graph)
    omega = eval_bgp(atoms, graph, ctx=ctx)
    for p in paths:
        omega = join(omega, eval_atom(p, graph, ctx))
    if output is not None:
        omega = {m.restrict(set(output)) for m in omega}
    return omega


def eval_pattern(pattern, graph, ctx: QueryContext | None = None) -> set:
    ctx = ctx or QueryContext(graph)
    if isinstance(pattern, Conj):
        return eval_bgp(pattern.atoms, graph, ctx=ctx)
    if isinstance(pattern, Opt):
        return left_outer_join(eval_pattern(pattern.left, graph, ctx), eval_pattern(pattern.right, graph, ctx))
    raise TypeError(f"not a pattern: {pattern!r}")


# -- regular path queries --------------------------------------------------------------

def _edges_of_type(graph, ctx, const):
    t = ctx.const_id(const)
    return [(s, o) for s, tt, o in graph.gamma.values() if tt == t]


def eval_rpq(expr, graph, ctx: QueryContext | None = None) -> set:
    """Pairs of objects connected by a path matching ``expr``."""
    return set(rpq_distances(expr, graph, ctx))


def rpq_distances(expr, graph, ctx: QueryContext | None = None) -> dict:
    """Shortest matching path length for every pair in the rpq's evaluation."""
    ctx = ctx or QueryContext(graph)
    cache = ctx.cache.setdefault("rpq", {})
    if expr not in cache:
        cache[expr] = _distances(expr, graph, ctx)
    return cache[expr]


def _distances(expr, graph, ctx) -> dict:
    if isinstance(expr, Eps):
        return {(o, o): 0 for o in graph.objects}
    if isinstance(expr, Sym):
        return {pair: 1 for pair in _edges_of_type(graph, ctx, expr.type)}
    if isinstance(expr, Optional_):
        return rpq_distances(Alt(Eps(), expr.expr), graph, ctx)
    if isinstance(expr, Plus):
        return rpq_distances(Concat(expr.expr, Star(expr.expr)), graph, ctx)
    if isinstance(expr, Inv):
        return {(b, a): d for (a, b), d in rpq_distances(expr.expr, graph, ctx).items()}
    if isinstance(expr, Alt):
        out = dict(rpq_distances(expr.left, graph, ctx))
        for pair, d in rpq_distances(expr.right, graph, ctx).items():
            if d < out.get(pair, d + 1):
                out[pair] = d
        return out
    if isinstance(expr, Concat):
        return _compose(rpq_distances(expr.left, graph, ctx), rpq_distances(expr.right, graph, ctx))
    if isinstance(expr, Star):
        step = rpq_distances(expr.expr, graph, ctx)
        closure = {(o, o): 0 for o in graph.objects}
        # Bellman-Ford style relaxation: each round extends paths by one step.
        while True:
            grown = _compose(closure, step)
            changed = False
            for pair, d in grown.items():
                if d < closure.get(pair, d + 1):
                    closure[pair] = d
                    changed = True
            if not changed:
                return closure
    raise TypeError(f"not an rpq expression: {expr!r}")


def _compose(left: dict, right: dict) -> dict:
    by_start = defaultdict(list)
    for (a, b), d in right.items():
        by_start[a].append((b, d))
    out = {}
    for (a, mid), d1 in left.items():
        for b, d2 in by_start.get(mid, ()):
            d = d1 + d2
            if d < out.get((a, b), d + 1):
                out[(a, b)] = d
    return out


def rpq_witness(expr, a, b, graph, ctx: QueryContext | None = None) -> Witness:
    """A shortest path from ``a`` to ``b`` matching ``expr``, rebuilt from
    the distance tables (independent of any automaton)."""
    ctx = ctx or QueryContext(graph)
    dist = rpq_distances(expr, graph, ctx)
    if (a, b) not in dist:
        raise ValueError("pair is not in the evaluation of the expression")
    if isinstance(expr, Eps):
        return Witness((a,), ())
    if isinstance(expr, Sym):
        t = ctx.const_id(expr.type)
        eid = min(e for e, (s, tt, o) in graph.gamma.items() if (s, tt, o) == (a, t, b))
        return Witness((a, b), ((eid, True),))
    if isinstance(expr, Optional_):
        return rpq_witness(Alt(Eps(), expr.expr), a, b, graph, ctx)
    if isinstance(expr, Plus):
        return rpq_witness(Concat(expr.expr, Star(expr.expr)), a, b, graph, ctx)
    if isinstance(expr, Inv):
        return rpq_witness(expr.expr, b, a, graph, ctx).reversed()
    if isinstance(expr, Alt):
        left = rpq_distances(expr.left, graph, ctx).get((a, b))
        if left == dist[(a, b)]:
            return rpq_witness(expr.left, a, b, graph, ctx)
        return rpq_witness(expr.right, a, b, graph, ctx)
    if isinstance(expr, Concat):
        d1, d2 = rpq_distances(expr.left, graph, ctx), rpq_distances(expr.right, graph, ctx)
        mid = min(m for (x, m), d in d1.items() if x == a and d + d2.get((m, b), dist[(a, b)] + 1) == dist[(a, b)])
        return _concat(rpq_witness(expr.left, a, mid, graph, ctx), rpq_witness(expr.right, mid, b, graph, ctx))
    # Star: peel one nonempty chunk to an object other than ``a``.
    if a == b:
        return Witness((a,), ())
    step = rpq_distances(expr.expr, graph, ctx)
    total = dist[(a, b)]
    mid = min(m for (x, m), d in step.items()
              if x == a and m != a and d + dist.get((m, b), total + 1) == total)
    return _concat(rpq_witness(expr.expr, a, mid, graph, ctx), rpq_witness(expr, mid, b, graph, ctx))


def _concat(w1: Witness, w2: Witness) -> Witness:
    return Witness(w1.objects + w2.objects[1:], w1.steps + w2.steps)


# -- conditions ---------------------------------------------------------------------------

_OPS = {"==": operator.eq, "!=": operator.ne, "<": operator.lt, "<=": operator.le,
        ">": operator.gt, ">=": operator.ge}


def _side_key(side, mapping, ctx: QueryContext):
    """Order key of one comparison side, or None when undefined."""
    if isinstance(side, Var):
        oid = mapping.get(side)
        return None if oid is None else ctx.value_key(oid)
    if isinstance(side, PropRef):
        obj = mapping.get(side.var)
        key = ctx.string_id(side.key)
        if obj is None or key is None:
            return None
        value = ctx.prop(obj, key)
        return None if value is None else ctx.value_key(value)
    return const_key(side)


def eval_condition(mapping, cond, ctx: QueryContext) -> bool:
    """Whether ``mapping`` satisfies ``cond``; an unbound variable or an
    undefined property makes a comparison false."""
    if cond is None:
        return True
    if isinstance(cond, Compare):
        left = _side_key(cond.left, mapping, ctx)
        right = _side_key(cond.right, mapping, ctx)
        if left is None or right is None:
            return False
        return _OPS[cond.op](left, right)
    if isinstance(cond, Not):
        return not eval_condition(mapping, cond.item, ctx)
    if isinstance(cond, And):
        return all(eval_condition(mapping, c, ctx) for c in cond.items)
    if isinstance(cond, Or):
        return any(eval_condition(mapping, c, ctx) for c in cond.items)
    raise TypeError(f"not a condition: {cond!r}")


# -- solution modifiers ------------------------------------------------------------------

def element_value(mapping, element, ctx: QueryContext):
    """Value of a selection element under a mapping; None for null."""
    if isinstance(element, Var):
        return mapping.get(element)
    obj = mapping.get(element.var)
    key = ctx.string_id(element.key)
    if obj is None or key is None:
        return None
    return ctx.prop(obj, key)


def element_name(element) -> str:
    return str(element)


def order_rows(items: list, order, ctx: QueryContext, mapping_of=lambda item: item[0],
               row_of=lambda item: item[1]) -> list:
    """Stable lexicographic sort on the order elements; remaining ties are
    broken by the projected row so output is deterministic."""
    keyed = sorted(items, key=lambda it: tuple(ctx.value_key(v) for v in row_of(it)))
    for element, descending in reversed(order):
        keyed.sort(key=lambda it: ctx.value_key(element_value(mapping_of(it), element, ctx)), reverse=descending)
    return keyed


@dataclass
class Solution:
    columns: tuple
    rows: list
    context: QueryContext

    def display_rows(self) -> list:
        return [tuple(self.context.display(v) for v in row) for row in self.rows]


def apply_modifiers(omega, query: FormalQuery, ctx: QueryContext) -> Solution:
    """Project (bag semantics), order, then limit."""
    items = [(m, tuple(element_value(m, e, ctx) for e in query.select)) for m in omega]
    if query.order:
        items = order_rows(items, query.order, ctx)
    rows = [row for _, row in items]
    if query.limit > 0:
        rows = rows[:query.limit]
    return Solution(tuple(element_name(e) for e in query.select), rows, ctx)


def oracle_evaluate(query: FormalQuery, graph) -> Solution:
    """Fully materialized evaluation straight from the definitions."""
    check_well_designed(query)
    ctx = QueryContext(graph)
    omega = eval_pattern(query.pattern, graph, ctx)
    kept = [m for m in omega if eval_condition(m, query.condition, ctx)]
    return apply_modifiers(kept, query, ctx)


__all__ = [
    "Mapping", "Solution", "apply_modifiers", "compatible", "difference", "element_value", "eval_atom",
    "eval_bgp", "eval_condition", "eval_navigational", "eval_pattern", "eval_rpq", "join", "left_outer_join",
    "merge", "oracle_evaluate", "order_rows", "rpq_distances", "rpq_witness", "union",
]
