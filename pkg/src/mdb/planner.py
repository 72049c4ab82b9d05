"""Query planning: logical operator tree, simplification, cost-based join
ordering, the worst-case optimal alternative, and physical plan emission.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .context import QueryContext
from .dgql.ast import (And, Compare, Conj, EdgeAtom, FormalQuery, LabelAtom, Literal, Name, ObjectAtom,
                       PathAtom, PropAtom, PropRef, Var, atom_text, pattern_vars, term_text)
from .errors import StrategyUnavailableError
from .exec import (BindingIterator, ExecStats, Filter, IndexScan, LeapfrogJoin, Limit, NestedLoopJoin,
                   OptionalJoin, PathScan, Project, Sort, Unit)
from .paths import StoreAdjacency, compile_rpq
from .storage.database import choose_permutation, permutations_of

STRATEGIES = ("auto", "lf", "nl")
SELINGER_LIMIT = 12  # DP over at most 2^12 subsets; greedy above
DISTINCT_FALLBACK = 10  # assumed distinct count when the catalog has none
ORDER_SEARCH_LIMIT = 20000  # nodes explored looking for a leapfrog variable order
MISSING = -1  # a constant absent from the database; matches no record


# -- logical plan -------------------------------------------------------------------------

@dataclass(frozen=True)
class OpMatch:
    atoms: tuple


@dataclass(frozen=True)
class OpOptional:
    left: object
    right: object


@dataclass(frozen=True)
class OpWhere:
    condition: object
    child: object


@dataclass(frozen=True)
class OpOrderBy:
    items: tuple
    child: object


@dataclass(frozen=True)
class OpSelect:
    elements: tuple
    limit: int
    child: object
    # (variable, constant) pairs fixed before matching starts
    seeds: tuple = ()


def _logical_pattern(pattern):
    if isinstance(pattern, Conj):
        return OpMatch(pattern.atoms)
    return OpOptional(_logical_pattern(pattern.left), _logical_pattern(pattern.right))


def build_logical(query: FormalQuery) -> OpSelect:
    node = _logical_pattern(query.pattern)
    if query.condition is not None:
        node = OpWhere(query.condition, node)
    if query.order:
        node = OpOrderBy(query.order, node)
    return OpSelect(query.select, query.limit, node)


def _unwrap(plan: OpSelect):
    order = where = None
    node = plan.child
    if isinstance(node, OpOrderBy):
        order, node = node, node.child
    if isinstance(node, OpWhere):
        where, node = node, node.child
    return order, where, node


def _mandatory(node) -> OpMatch:
    while isinstance(node, OpOptional):
        node = node.left
    return node


def _replace_mandatory(node, new: OpMatch):
    if isinstance(node, OpMatch):
        return new
    return replace(node, left=_replace_mandatory(node.left, new))


def _node_vars(node) -> set:
    if isinstance(node, OpMatch):
        return pattern_vars(Conj(node.atoms))
    return _node_vars(node.left) | _node_vars(node.right)


def simplify(plan: OpSelect) -> OpSelect:
    """Absorb top-level equality filters on mandatory variables: ``?v.k == c``
    becomes a property atom and ``?v == c`` fixes ``?v`` before matching."""
    order, where, pattern = _unwrap(plan)
    if where is None:
        return plan
    core = _mandatory(pattern)
    core_vars = _node_vars(core)
    items = list(where.condition.items) if isinstance(where.condition, And) else [where.condition]
    kept, atoms, seeds = [], list(core.atoms), list(plan.seeds)
    for item in items:
        absorbed = _absorb(item, core_vars)
        if absorbed is None:
            kept.append(item)
        elif isinstance(absorbed, PropAtom):
            if absorbed not in atoms:
                atoms.append(absorbed)
        elif absorbed not in seeds:
            seeds.append(absorbed)
    if len(kept) == len(items):
        return plan
    node = _replace_mandatory(pattern, OpMatch(tuple(atoms)))
    if kept:
        node = OpWhere(kept[0] if len(kept) == 1 else And(tuple(kept)), node)
    if order is not None:
        node = OpOrderBy(order.items, node)
    return OpSelect(plan.elements, plan.limit, node, tuple(seeds))


def _absorb(item, core_vars):
    if not isinstance(item, Compare) or item.op != "==":
        return None
    left, right = item.left, item.right
    if isinstance(left, (Name, Literal)):
        left, right = right, left
    if not isinstance(right, (Name, Literal)):
        return None
    if isinstance(left, PropRef) and left.var in core_vars:
        return PropAtom(left.var, left.key, right)
    if isinstance(left, Var) and left in core_vars:
        return (left, right)
    return None


def explain_logical(plan: OpSelect) -> list[str]:
    def walk(node, depth):
        pad = "  " * depth
        if isinstance(node, OpSelect):
            head = f"{pad}OpSelect({', '.join(str(e) for e in node.elements)})"
            if node.limit:
                head += f" LIMIT {node.limit}"
            if node.seeds:
                head += " FIX " + ", ".join(f"{v} = {term_text(c)}" for v, c in node.seeds)
            return [head] + walk(node.child, depth + 1)
        if isinstance(node, OpOrderBy):
            items = ", ".join(f"{'DESC' if d else 'ASC'}({e})" for e, d in node.items)
            return [f"{pad}OpOrderBy({items})"] + walk(node.child, depth + 1)
        if isinstance(node, OpWhere):
            return [f"{pad}OpWhere"] + walk(node.child, depth + 1)
        if isinstance(node, OpOptional):
            return [f"{pad}OpOptional"] + walk(node.left, depth + 1) + walk(node.right, depth + 1)
        return [f"{pad}OpMatch"] + [f"{pad}  {atom_text(a)}" for a in node.atoms]
    return walk(plan, 0)


# -- relational atoms and costs --------------------------------------------------------------

@dataclass(frozen=True)
class RelAtom:
    """A non-path atom as a row pattern over a stored relation."""
    relation: str
    cols: tuple  # Var or identifier per canonical column
    source: object = field(compare=False, default=None)

    def vars(self) -> list:
        seen = []
        for c in self.cols:
            if isinstance(c, Var) and c not in seen:
                seen.append(c)
        return seen

    def __str__(self) -> str:
        if self.source is not None:
            return atom_text(self.source)
        cols = ", ".join(str(c) if isinstance(c, Var) else ("?" if c == MISSING else f"#{c:x}")
                         for c in self.cols)
        return f"{self.relation}({cols})"


def relational(atom, ctx: QueryContext) -> RelAtom:
    def const(term):
        if isinstance(term, Var):
            return term
        oid = ctx.const_id(term)
        return MISSING if oid is None else oid

    def string(text):
        oid = ctx.string_id(text)
        return MISSING if oid is None else oid

    if isinstance(atom, ObjectAtom):
        cols = (const(atom.term),)
        rel = "objects"
    elif isinstance(atom, LabelAtom):
        cols, rel = (const(atom.term), string(atom.label)), "labels"
    elif isinstance(atom, PropAtom):
        cols, rel = (const(atom.term), string(atom.key), const(atom.value)), "properties"
    elif isinstance(atom, EdgeAtom):
        cols = tuple(const(t) for t in (atom.source, atom.type, atom.target, atom.edge))
        rel = "edges"
    else:
        raise TypeError(f"path atoms have no relational form: {atom!r}")
    return RelAtom(rel, cols, atom)


_ANCHOR = {"edges": (1, "per_type"), "labels": (1, "per_label"), "properties": (1, "per_property")}


def _distinct(catalog, relation: str, col: int) -> float:
    counts = catalog.distinct.get(relation) or []
    if col < len(counts) and counts[col] > 0:
        return float(counts[col])
    return float(DISTINCT_FALLBACK)


def scan_estimate(atom: RelAtom, catalog, bound=frozenset()) -> float:
    """Expected rows of one atom with constants and ``bound`` variables
    fixed: the relation size (or the per-constant count for a type, label or
    key) divided by the distinct count of every other fixed column."""
    if MISSING in atom.cols:
        return 0.0
    n = float(catalog.cardinality(atom.relation))
    anchor = None
    if atom.relation in _ANCHOR:
        anchor, table = _ANCHOR[atom.relation]
        if not isinstance(atom.cols[anchor], Var):
            n = float(getattr(catalog, table).get(str(atom.cols[anchor]), 0))
        else:
            anchor = None
    seen = set()
    for i, term in enumerate(atom.cols):
        fixed = not isinstance(term, Var) or term in bound or term in seen
        if isinstance(term, Var):
            seen.add(term)
        if fixed and i != anchor:
            n /= _distinct(catalog, atom.relation, i)
    return max(n, 0.0)


def join_estimate(atoms, catalog, bound=frozenset()) -> float:
    """Cardinality of a set of atoms, independent of join order: product of
    scan estimates, divided for every shared variable by all but the
    smallest distinct count among its columns."""
    card = 1.0
    columns: dict = {}
    for atom in atoms:
        card *= scan_estimate(atom, catalog, bound)
        for i, term in enumerate(atom.cols):
            if isinstance(term, Var) and term not in bound:
                columns.setdefault(term, {}).setdefault(id(atom), _distinct(catalog, atom.relation, i))
    for per_atom in columns.values():
        ds = sorted(per_atom.values())
        for d in ds[1:]:
            card /= d
    if math.isnan(card):
        return 0.0
    return max(card, 0.0)


def plan_cost(order, catalog, bound=frozenset()) -> float:
    """Sum of estimated intermediate result sizes of a left-deep order."""
    return sum(join_estimate(order[:i], catalog, bound) for i in range(1, len(order) + 1))


def _candidates(atoms, chosen: list, remaining, bound) -> list:
    have = set(bound)
    for i in chosen:
        have.update(atoms[i].vars())
    if not chosen:
        return list(remaining)
    connected = [i for i in remaining if set(atoms[i].vars()) & have]
    return connected or list(remaining)


def plan_selinger(atoms, catalog, bound=frozenset()) -> list:
    """Optimal left-deep order (by ``plan_cost``) among orders that never
    take a cross product while a connected atom is available."""
    n = len(atoms)
    memo: dict = {}

    def card(mask):
        if mask not in memo:
            memo[mask] = join_estimate([atoms[i] for i in range(n) if mask >> i & 1], catalog, bound)
        return memo[mask]

    best = {0: (0.0, ())}
    for mask in range(1 << n):
        if mask not in best:
            continue
        cost, order = best[mask]
        remaining = [i for i in range(n) if not mask >> i & 1]
        for i in _candidates(atoms, list(order), remaining, bound):
            nxt = mask | (1 << i)
            entry = (cost + card(nxt), order + (i,))
            if nxt not in best or entry < best[nxt]:
                best[nxt] = entry
    return list(best[(1 << n) - 1][1])


def plan_greedy(atoms, catalog, bound=frozenset()) -> list:
    """Repeatedly append the allowed atom giving the smallest estimate; ties
    go to the earlier atom."""
    order: list = []
    remaining = list(range(len(atoms)))
    while remaining:
        options = _candidates(atoms, order, remaining, bound)
        pick = min(options, key=lambda i: (join_estimate([atoms[j] for j in order + [i]], catalog, bound), i))
        order.append(pick)
        remaining.remove(pick)
    return order


def join_order(atoms, catalog, bound=frozenset()) -> list:
    if len(atoms) <= SELINGER_LIMIT:
        return plan_selinger(atoms, catalog, bound)
    return plan_greedy(atoms, catalog, bound)


# -- worst-case optimal strategy ---------------------------------------------------------------

def served_orders(atom: RelAtom, bound=frozenset()) -> list:
    """(tree, perm, variable sequence) for every stored permutation that
    lists all fixed columns before the free variables."""
    out = []
    for name, perm in permutations_of(atom.relation):
        terms = [atom.cols[c] for c in perm]
        free = [isinstance(t, Var) and t not in bound for t in terms]
        first = free.index(True) if True in free else len(terms)
        if not all(free[first:]):
            continue
        seq = []
        for t in terms[first:]:
            if t not in seq:
                seq.append(t)
        out.append((name, perm, tuple(seq)))
    return out


def _consistent(seq, placed: list, placed_set) -> bool:
    mine = [v for v in placed if v in seq]
    return list(seq[:len(mine)]) == mine


def leapfrog_variable_order(atoms, catalog, bound=frozenset()):
    """A variable order every atom can follow, chosen by the heuristic:
    cheapest containing relation first, ties to the variable in more
    relations, then connected variables, single-relation variables last.
    Returns None when no order is servable by the stored permutations."""
    orders = [served_orders(a, bound) for a in atoms]
    if any(not o for o in orders):
        return None
    variables = []
    for a in atoms:
        for v in a.vars():
            if v not in bound and v not in variables:
                variables.append(v)
    cost = {v: min(scan_estimate(a, catalog, bound) for a in atoms if v in a.vars()) for v in variables}
    degree = {v: sum(1 for a in atoms if v in a.vars()) for v in variables}
    neighbours = {v: set() for v in variables}
    for a in atoms:
        vs = [v for v in a.vars() if v not in bound]
        for v in vs:
            neighbours[v].update(w for w in vs if w != v)

    budget = [ORDER_SEARCH_LIMIT]

    def rank(v, placed_set):
        connected = not placed_set or bool(neighbours[v] & placed_set)
        return (degree[v] == 1, not connected, cost[v], -degree[v], v.name)

    def search(placed, placed_set):
        if len(placed) == len(variables):
            return list(placed)
        for v in sorted((v for v in variables if v not in placed_set), key=lambda v: rank(v, placed_set)):
            budget[0] -= 1
            if budget[0] < 0:
                return None
            placed.append(v)
            placed_set.add(v)
            if all(any(_consistent(seq, placed, placed_set) for _, _, seq in opts) for opts in orders):
                found = search(placed, placed_set)
                if found is not None:
                    return found
            placed.pop()
            placed_set.discard(v)
        return None

    return search([], set())


def leapfrog_applicable(atoms, catalog=None, bound=frozenset()) -> bool:
    """No path atoms, and some variable order is servable by stored
    permutations."""
    if any(isinstance(a, PathAtom) for a in atoms):
        return False
    from .storage.catalog import Catalog
    return leapfrog_variable_order(atoms, catalog or Catalog(), bound) is not None


def _assign_perms(atoms, order, bound):
    specs = []
    for atom in atoms:
        for name, perm, seq in served_orders(atom, bound):
            if list(seq) == [v for v in order if v in seq]:
                specs.append((atom, name, perm))
                break
    return specs


# -- physical plan ----------------------------------------------------------------------------

@dataclass
class PlannedQuery:
    logical: OpSelect
    root: BindingIterator
    seeds: dict
    stats: ExecStats
    notes: list

    def explain(self) -> str:
        lines = ["Logical plan:"] + ["  " + l for l in explain_logical(self.logical)]
        lines += ["Physical plan:"] + ["  " + l for l in self.root.describe()]
        lines += [f"Note: {n}" for n in self.notes]
        return "\n".join(lines)


class _Emitter:
    def __init__(self, db, ctx: QueryContext, strategy: str, strict: bool, stats: ExecStats):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        self.db = db
        self.ctx = ctx
        self.strategy = strategy
        self.strict = strict
        self.stats = stats
        self.notes: list = []
        self.adjacency = StoreAdjacency(db, stats)

    def pattern(self, node, bound: frozenset) -> BindingIterator:
        if isinstance(node, OpMatch):
            return self.block(node.atoms, bound)
        left = self.pattern(node.left, bound)
        right = self.pattern(node.right, bound | frozenset(_node_vars(node.left)))
        return OptionalJoin(left, right)

    def block(self, atoms, bound: frozenset) -> BindingIterator:
        catalog = self.db.catalog
        rels = [relational(a, self.ctx) for a in atoms if not isinstance(a, PathAtom)]
        paths = [a for a in atoms if isinstance(a, PathAtom)]
        use_lf = False
        if self.strategy in ("auto", "lf"):
            order = None if paths else leapfrog_variable_order(rels, catalog, bound)
            if order is not None and rels:
                use_lf = True
            elif self.strategy == "lf":
                reason = "a path atom is present" if paths else "no variable order fits the stored permutations"
                if self.strict:
                    raise StrategyUnavailableError(f"leapfrog join unavailable: {reason}")
                self.notes.append(f"leapfrog join unavailable ({reason}); using nested loops")
        have = set(bound)
        if use_lf:
            node = LeapfrogJoin(_assign_perms(rels, order, bound), tuple(order), self.db.trees, self.stats)
            have.update(order)
        else:
            node = Unit()
            for i in join_order(rels, catalog, bound):
                atom = rels[i]
                fixed = {c for c, t in enumerate(atom.cols) if not isinstance(t, Var) or t in have}
                name, perm, k = choose_permutation(atom.relation, fixed)
                node = NestedLoopJoin(node, IndexScan(atom, name, perm, k, self.db.tree(name), self.stats),
                                      self.stats)
                have.update(atom.vars())
        for atom in self._path_order(paths, have):
            anchored = self._anchored(atom.source, have) or self._anchored(atom.target, have)
            node = NestedLoopJoin(node, self.path_scan(atom, candidates=not anchored), self.stats)
            have.update(v for v in (atom.source, atom.target, atom.var) if isinstance(v, Var))
        return node

    @staticmethod
    def _anchored(term, have) -> bool:
        return not isinstance(term, Var) or term in have

    def _path_order(self, paths, have):
        have = set(have)
        pending = list(paths)
        while pending:
            pick = next((p for p in pending if self._anchored(p.source, have) or self._anchored(p.target, have)),
                        pending[0])
            pending.remove(pick)
            have.update(v for v in (pick.source, pick.target) if isinstance(v, Var))
            yield pick

    def path_scan(self, atom: PathAtom, candidates: bool) -> PathScan:
        from .dgql.ast import Inv
        forward = compile_rpq(atom.rpq, self.ctx.const_id)
        backward = compile_rpq(Inv(atom.rpq), self.ctx.const_id)
        return PathScan(atom, forward, backward, self.adjacency, self.db.tree("objects"), self.ctx,
                        self.stats, candidates)


def plan_query(query: FormalQuery, db, ctx: QueryContext, strategy: str = "auto", strict: bool = False,
               sort_budget: int | None = None) -> PlannedQuery:
    stats = ExecStats()
    logical = simplify(build_logical(query))
    emitter = _Emitter(db, ctx, strategy, strict, stats)
    seeds = {}
    for var, const in logical.seeds:
        oid = ctx.const_id(const)
        if seeds.get(var, oid) != oid:
            oid = None
        seeds[var] = MISSING if oid is None else oid
    order, where, pattern = _unwrap(logical)
    node = emitter.pattern(pattern, frozenset(seeds))
    if where is not None:
        node = Filter(node, where.condition, ctx)
    if order is not None:
        node = Sort(node, order.items, logical.elements, ctx) if sort_budget is None else \
            Sort(node, order.items, logical.elements, ctx, sort_budget)
    if logical.limit > 0:
        node = Limit(node, logical.limit)
    root = Project(node, logical.elements, ctx, stats)
    return PlannedQuery(logical, root, seeds, stats, emitter.notes)


__all__ = [
    "DISTINCT_FALLBACK", "OpMatch", "OpOptional", "OpOrderBy", "OpSelect", "OpWhere", "PlannedQuery",
    "RelAtom", "SELINGER_LIMIT", "STRATEGIES", "build_logical", "explain_logical", "join_estimate",
    "join_order", "leapfrog_applicable", "leapfrog_variable_order", "plan_cost", "plan_greedy", "plan_query",
    "plan_selinger", "relational", "scan_estimate", "served_orders", "simplify",
]
