"""Iterator runtime.

Every operator implements the binding-iterator protocol: ``open(parent)``
starts a run that extends the parent mapping, ``next()`` returns the next
mapping or None once exhausted, and ``reset()`` rewinds to replay the same
run.  Internally each operator is a generator over ``run(parent)`` so
operators compose by pulling from each other one mapping at a time; only
``Sort`` materializes.

Mappings at runtime are plain dicts from variables to identifiers.
"""

from __future__ import annotations

import heapq
import os
import pickle
import tempfile
from dataclasses import dataclass

from .algebra import element_value, eval_condition
from .context import QueryContext
from .dgql.ast import Var, atom_text
from .errors import PermutationUnavailableError, UnboundEndpointsError
from .paths import eval_path

SORT_BUDGET = 1_000_000


@dataclass
class ExecStats:
    bindings: int = 0  # intermediate mappings produced by join operators
    seeks: int = 0
    rows: int = 0
    pages_read: int = 0
    page_requests: int = 0


class BindingIterator:
    """Base class; subclasses implement ``run`` and ``describe``."""

    def __init__(self):
        self._parent = None
        self._gen = None

    def open(self, parent=None) -> None:
        self._parent = dict(parent or {})
        self._gen = self.run(self._parent)

    def next(self):
        if self._gen is None:
            return None
        item = next(self._gen, None)
        if item is None:
            self._gen = None
        return item

    def reset(self) -> None:
        self.open(self._parent)

    def __iter__(self):
        while True:
            item = self.next()
            if item is None:
                return
            yield item

    def run(self, parent):
        raise NotImplementedError

    def describe(self) -> list[str]:
        raise NotImplementedError


def _indent(lines) -> list[str]:
    return ["  " + line for line in lines]


# -- scans and joins ----------------------------------------------------------------------

class Unit(BindingIterator):
    """Yields its parent mapping once."""

    def run(self, parent):
        yield dict(parent)

    def describe(self):
        return ["Unit"]


class IndexScan:
    """Range scan of one relation atom under a chosen permutation.

    ``cols`` are the atom's canonical column terms (Var or identifier);
    ``prefix_len`` leading columns of ``perm`` are bound when the scan runs.
    """

    def __init__(self, atom, tree_name: str, perm: tuple, prefix_len: int, tree, stats: ExecStats):
        self.atom = atom
        self.tree_name = tree_name
        self.perm = perm
        self.prefix_len = prefix_len
        self.tree = tree
        self.stats = stats
        self.terms = tuple(atom.cols[c] for c in perm)

    def extend(self, binding):
        key = []
        for term in self.terms[:self.prefix_len]:
            value = binding.get(term) if isinstance(term, Var) else term
            if value is None:
                raise PermutationUnavailableError(f"{self.tree_name}: column {term} is not bound")
            key.append(value)
        rest = self.terms[self.prefix_len:]
        start = self.prefix_len
        self.stats.seeks += 1
        for rec in self.tree.range(tuple(key)):
            out = dict(binding)
            for i, term in enumerate(rest, start):
                value = rec[i]
                if isinstance(term, Var):
                    if out.setdefault(term, value) != value:
                        break
                elif term != value:
                    break
            else:
                yield out

    def describe(self):
        return [f"IndexScan {self.atom} on {self.tree_name} (prefix {self.prefix_len})"]


class PathScan:
    """Extends a mapping with the endpoints (and witness) of a path atom."""

    def __init__(self, atom, forward, backward, adjacency, objects_tree, ctx: QueryContext,
                 stats: ExecStats, candidates: bool = False):
        self.atom = atom
        self.forward = forward
        self.backward = backward
        self.adjacency = adjacency
        self.objects_tree = objects_tree
        self.ctx = ctx
        self.stats = stats
        self.candidates = candidates

    def _value(self, term, binding):
        if isinstance(term, Var):
            return binding.get(term), True
        value = self.ctx.const_id(term)
        return value, value is not None

    def extend(self, binding):
        src, ok_s = self._value(self.atom.source, binding)
        dst, ok_d = self._value(self.atom.target, binding)
        if not (ok_s and ok_d):
            return
        if src is not None:
            yield from self._from(binding, src, dst, self.forward, False)
        elif dst is not None:
            yield from self._from(binding, dst, None, self.backward, True)
        elif self.candidates:
            for (obj,) in self.objects_tree.range(()):
                seeded = dict(binding)
                seeded[self.atom.source] = obj
                target, _ = self._value(self.atom.target, seeded)
                yield from self._from(seeded, obj, target, self.forward, False)
        else:
            raise UnboundEndpointsError(f"neither endpoint of {atom_text(self.atom)} is bound")

    def _from(self, binding, anchor, other, automaton, reverse):
        want = self.atom.var is not None
        free = self.atom.source if reverse else self.atom.target
        for end, witness in eval_path(anchor, automaton, self.adjacency, want):
            if other is not None and end != other:
                continue
            out = dict(binding)
            if other is None:
                out[free] = end
            if want:
                out[self.atom.var] = self.ctx.witness_id(witness.reversed() if reverse else witness)
            yield out
            if other is not None:
                return

    def describe(self):
        how = "candidates from Objects" if self.candidates else "anchored"
        return [f"PathScan {atom_text(self.atom)} ({how})"]


class NestedLoopJoin(BindingIterator):
    """Index-nested-loop join: every child mapping is extended by ``step``."""

    def __init__(self, child: BindingIterator, step, stats: ExecStats):
        super().__init__()
        self.child = child
        self.step = step
        self.stats = stats

    def run(self, parent):
        for outer in self.child.run(parent):
            for out in self.step.extend(outer):
                self.stats.bindings += 1
                yield out

    def describe(self):
        return ["NestedLoopJoin"] + _indent(self.child.describe()) + _indent(self.step.describe())


class TrieView:
    """One atom seen as a trie in the column order of its permutation."""

    def __init__(self, atom, tree_name: str, perm: tuple, tree, stats: ExecStats):
        self.atom = atom
        self.tree_name = tree_name
        self.perm = perm
        self.terms = tuple(atom.cols[c] for c in perm)
        self.tree = tree
        self.stats = stats
        self.cursor = tree.cursor()
        self.prefix: tuple = ()

    def next_term(self):
        d = len(self.prefix)
        return self.terms[d] if d < len(self.terms) else None

    def seek(self, key):
        """Smallest key >= ``key`` at the current level, or None."""
        self.stats.seeks += 1
        d = len(self.prefix)
        rec = self.cursor.seek(self.prefix + (key,))
        if rec is None or rec[:d] != self.prefix:
            return None
        return rec[d]

    def descend(self, value) -> bool:
        """Fix the next column to ``value``; False if no record has it."""
        if self.seek(value) != value:
            return False
        self.prefix = self.prefix + (value,)
        return True


def _leapfrog(views):
    """Values present at the current level of every view, ascending."""
    candidate = 0
    while True:
        agreed, i = 0, 0
        while agreed < len(views):
            key = views[i].seek(candidate)
            if key is None:
                return
            if key == candidate:
                agreed += 1
            else:
                candidate, agreed = key, 1
            i = (i + 1) % len(views)
        yield candidate
        candidate += 1


class LeapfrogJoin(BindingIterator):
    """Worst-case optimal join: one nested loop per variable, each level
    intersecting every atom that has that variable next."""

    def __init__(self, specs, order: tuple, trees: dict, stats: ExecStats):
        super().__init__()
        self.specs = specs  # (RelAtom, tree name, perm)
        self.order = order
        self.trees = trees
        self.stats = stats

    def run(self, parent):
        views = [TrieView(atom, name, perm, self.trees[name], self.stats) for atom, name, perm in self.specs]
        binding = dict(parent)
        for view in views:
            if not self._settle(view, binding):
                return
        for var in self.order:
            if var in binding:
                raise PermutationUnavailableError(f"variable {var} is bound before the join")
        yield from self._level(0, views, binding)

    def _settle(self, view, binding) -> bool:
        """Descend through columns whose value is already known."""
        while True:
            term = view.next_term()
            if term is None:
                return True
            if isinstance(term, Var):
                if term not in binding:
                    return True
                value = binding[term]
            else:
                value = term
            if not view.descend(value):
                return False

    def _level(self, depth, views, binding):
        if depth == len(self.order):
            yield dict(binding)
            return
        var = self.order[depth]
        parts = [v for v in views if v.next_term() == var]
        if not parts:
            raise PermutationUnavailableError(f"no atom can bind {var} at depth {depth}")
        saved = [v.prefix for v in views]
        for value in _leapfrog(parts):
            self.stats.bindings += 1
            binding[var] = value
            if all(self._settle(v, binding) for v in parts):
                yield from self._level(depth + 1, views, binding)
            for v, prefix in zip(views, saved):
                v.prefix = prefix
        binding.pop(var, None)

    def describe(self):
        order = ", ".join(str(v) for v in self.order)
        lines = [f"LeapfrogJoin order [{order}]"]
        for atom, name, _ in self.specs:
            lines.append(f"  {atom} on {name}")
        return lines


class OptionalJoin(BindingIterator):
    """Left outer join evaluated sideways: the right plan runs once per left
    mapping with that mapping as its parent."""

    def __init__(self, left: BindingIterator, right: BindingIterator):
        super().__init__()
        self.left = left
        self.right = right

    def run(self, parent):
        for outer in self.left.run(parent):
            matched = False
            for out in self.right.run(outer):
                matched = True
                yield out
            if not matched:
                yield outer

    def describe(self):
        return ["OptionalJoin"] + _indent(self.left.describe()) + _indent(self.right.describe())


# -- solution modifiers ---------------------------------------------------------------------

class Filter(BindingIterator):
    def __init__(self, child: BindingIterator, condition, ctx: QueryContext):
        super().__init__()
        self.child = child
        self.condition = condition
        self.ctx = ctx

    def run(self, parent):
        for m in self.child.run(parent):
            if eval_condition(m, self.condition, self.ctx):
                yield m

    def describe(self):
        return ["Filter"] + _indent(self.child.describe())


class SortKey:
    """Comparable key: order values (each ascending or descending) followed
    by the projected row as a tie-breaker."""

    __slots__ = ("values", "descending", "row")

    def __init__(self, values, descending, row):
        self.values = values
        self.descending = descending
        self.row = row

    def __lt__(self, other) -> bool:
        for a, b, desc in zip(self.values, other.values, self.descending):
            if a != b:
                return (a > b) if desc else (a < b)
        return self.row < other.row

    def __eq__(self, other) -> bool:
        return self.values == other.values and self.row == other.row

    def __reduce__(self):
        return SortKey, (self.values, self.descending, self.row)


class Sort(BindingIterator):
    """Materializing sort; spills sorted runs to temporary files once more
    than ``budget`` mappings are buffered."""

    def __init__(self, child: BindingIterator, order, select, ctx: QueryContext, budget: int = SORT_BUDGET):
        super().__init__()
        self.child = child
        self.order = order
        self.select = select
        self.ctx = ctx
        self.budget = budget
        self.spilled_runs = 0

    def key(self, m) -> SortKey:
        ctx = self.ctx
        values = tuple(ctx.value_key(element_value(m, e, ctx)) for e, _ in self.order)
        row = tuple(ctx.value_key(element_value(m, e, ctx)) for e in self.select)
        return SortKey(values, tuple(desc for _, desc in self.order), row)

    def run(self, parent):
        buffer, runs = [], []
        try:
            for m in self.child.run(parent):
                buffer.append((self.key(m), m))
                if len(buffer) >= self.budget:
                    runs.append(self._spill(buffer))
                    buffer = []
            buffer.sort(key=lambda item: item[0])
            if not runs:
                for _, m in buffer:
                    yield m
                return
            streams = [self._read(path) for path in runs] + [iter(buffer)]
            for _, m in heapq.merge(*streams, key=lambda item: item[0]):
                yield m
        finally:
            for path in runs:
                try:
                    os.unlink(path)
                except OSError:
                    pass

    def _spill(self, buffer) -> str:
        buffer.sort(key=lambda item: item[0])
        fd, path = tempfile.mkstemp(prefix="mdb-sort-", suffix=".run")
        with os.fdopen(fd, "wb") as fh:
            for item in buffer:
                pickle.dump(item, fh, protocol=pickle.HIGHEST_PROTOCOL)
        self.spilled_runs += 1
        return path

    @staticmethod
    def _read(path):
        with open(path, "rb") as fh:
            while True:
                try:
                    yield pickle.load(fh)
                except EOFError:
                    return

    def describe(self):
        items = ", ".join(f"{'DESC' if d else 'ASC'}({e})" for e, d in self.order)
        return [f"Sort {items}"] + _indent(self.child.describe())


class Limit(BindingIterator):
    def __init__(self, child: BindingIterator, n: int):
        super().__init__()
        self.child = child
        self.n = n

    def run(self, parent):
        if self.n <= 0:
            return
        for i, m in enumerate(self.child.run(parent), 1):
            yield m
            if i >= self.n:
                return

    def describe(self):
        return [f"Limit {self.n}"] + _indent(self.child.describe())


class Project(BindingIterator):
    """Turns mappings into rows (tuples of identifiers, None for null)."""

    def __init__(self, child: BindingIterator, select, ctx: QueryContext, stats: ExecStats):
        super().__init__()
        self.child = child
        self.select = select
        self.ctx = ctx
        self.stats = stats

    def run(self, parent):
        for m in self.child.run(parent):
            self.stats.rows += 1
            yield tuple(element_value(m, e, self.ctx) for e in self.select)

    def describe(self):
        cols = ", ".join(str(e) for e in self.select)
        return [f"Project {cols}"] + _indent(self.child.describe())


__all__ = [
    "BindingIterator", "ExecStats", "Filter", "IndexScan", "LeapfrogJoin", "Limit", "NestedLoopJoin",
    "OptionalJoin", "PathScan", "Project", "Sort", "SortKey", "TrieView", "Unit",
]
