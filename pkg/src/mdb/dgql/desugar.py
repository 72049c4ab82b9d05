"""Surface syntax -> formal query, plus the well-designedness check."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import UnknownVariableError, WellDesignednessError
from .ast import (Alt, Chain, Concat, Conj, EdgeAtom, EdgePattern, Eps, FormalQuery, Group, LabelAtom,
                  ObjectAtom, Opt, Optional_, PathAtom, PathPattern, Plus, PropAtom, Query, Star, Sym, Var,
                  condition_vars, element_var, pattern_text, pattern_vars)


def expand_rpq(expr):
    """Rewrite r? as (eps | r) and r+ as r/r*, recursively."""
    if isinstance(expr, (Sym, Eps)):
        return expr
    if isinstance(expr, Optional_):
        return Alt(Eps(), expand_rpq(expr.expr))
    if isinstance(expr, Plus):
        inner = expand_rpq(expr.expr)
        return Concat(inner, Star(inner))
    if isinstance(expr, (Concat, Alt)):
        return type(expr)(expand_rpq(expr.left), expand_rpq(expr.right))
    return type(expr)(expand_rpq(expr.expr))


def _surface_vars(query: Query) -> list[Var]:
    """User variables in order of first appearance in MATCH."""
    seen: dict[Var, None] = {}

    def add(term):
        if isinstance(term, Var):
            seen.setdefault(term)

    def group(g: Group):
        for chain in g.chains:
            for i, node in enumerate(chain.nodes):
                add(node.term)
                for _, value in node.props:
                    add(value)
                if i < len(chain.links):
                    link = chain.links[i]
                    add(link.var)
                    if isinstance(link, EdgePattern):
                        add(link.type)
        for opt in g.optionals:
            group(opt)

    group(query.match)
    return list(seen)


class _Fresh:
    def __init__(self, used: set[str]):
        self.used = used
        self.counters: dict[str, int] = {}

    def __call__(self, prefix: str) -> Var:
        n = self.counters.get(prefix, 0)
        while f"_{prefix}{n}" in self.used:
            n += 1
        self.counters[prefix] = n + 1
        name = f"_{prefix}{n}"
        self.used.add(name)
        return Var(name)


def _all_var_names(query: Query) -> set[str]:
    names = {v.name for v in _surface_vars(query)}
    names.update(v.name for v in condition_vars(query.where))
    for element in (query.select or ()):
        names.add(element_var(element).name)
    for item in query.order_by:
        names.add(element_var(item.element).name)
    return names


def _chain_atoms(chain: Chain, fresh: _Fresh) -> list:
    terms = [node.term if node.term is not None else fresh("n") for node in chain.nodes]
    node_atoms, link_atoms = [], []
    for term, node in zip(terms, chain.nodes):
        for label in node.labels:
            node_atoms.append(LabelAtom(term, label))
        for key, value in node.props:
            node_atoms.append(PropAtom(term, key, value))
        if not chain.links and not node.labels and not node.props:
            node_atoms.append(ObjectAtom(term))
    for i, link in enumerate(chain.links):
        source, target = terms[i], terms[i + 1]
        if isinstance(link, PathPattern):
            link_atoms.append(PathAtom(source, expand_rpq(link.rpq), target, link.var))
            continue
        edge = link.var if link.var is not None else fresh("c")
        etype = link.type if link.type is not None else fresh("t")
        link_atoms.append(EdgeAtom(source, etype, target, edge))
        for key, value in link.props:
            link_atoms.append(PropAtom(edge, key, value))
    return node_atoms + link_atoms


def _group_pattern(group: Group, fresh: _Fresh):
    atoms = []
    for chain in group.chains:
        atoms.extend(_chain_atoms(chain, fresh))
    pattern = Conj(tuple(atoms))
    for opt in group.optionals:
        pattern = Opt(pattern, _group_pattern(opt, fresh))
    return pattern


def desugar(query: Query) -> FormalQuery:
    fresh = _Fresh(_all_var_names(query))
    pattern = _group_pattern(query.match, fresh)
    user_vars = tuple(_surface_vars(query))
    bound = pattern_vars(pattern)
    select = tuple(user_vars) if query.select is None else query.select
    for element in list(select) + [o.element for o in query.order_by]:
        var = element_var(element)
        if var not in bound:
            raise UnknownVariableError(f"variable {var} does not occur in MATCH")
    order = tuple((o.element, o.descending) for o in query.order_by)
    return FormalQuery(pattern, query.where, select, order, query.limit or 0, query.explain, user_vars)


# -- well-designedness ------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    var: Var
    rule: str  # "optional" or "condition"
    where: str = ""

    def __str__(self) -> str:
        if self.rule == "condition":
            return f"variable {self.var} is used in WHERE but does not occur in MATCH"
        return (f"variable {self.var} occurs in OPTIONAL {{{self.where}}} and outside it, "
                f"but not in the pattern that OPTIONAL extends")


def well_designedness_violations(query: FormalQuery) -> list[Violation]:
    violations: list[Violation] = []

    def walk(node, outside: set):
        if isinstance(node, Conj):
            return
        left, right = pattern_vars(node.left), pattern_vars(node.right)
        for var in sorted(right & outside - left, key=lambda v: v.name):
            violations.append(Violation(var, "optional", pattern_text(node.right)))
        walk(node.left, outside | right)
        walk(node.right, outside | left)

    walk(query.pattern, set())
    bound = pattern_vars(query.pattern)
    seen = set()
    for var in condition_vars(query.condition):
        if var not in bound and var not in seen:
            seen.add(var)
            violations.append(Violation(var, "condition"))
    return violations


def check_well_designed(query: FormalQuery) -> None:
    violations = well_designedness_violations(query)
    if violations:
        raise WellDesignednessError(violations)
