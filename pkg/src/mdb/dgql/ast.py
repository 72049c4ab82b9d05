"""Syntax trees for DGQL queries, before and after desugaring.

Constants stay symbolic (``Name`` for named nodes, ``Literal`` for values)
so one desugared query can be evaluated against any store that can look
them up.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


# -- terms ----------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


@dataclass(frozen=True)
class Name:
    """A named node written verbatim, e.g. ``Michelle Bachelet``."""
    text: str


@dataclass(frozen=True)
class Literal:
    """A value object: a quoted string or an integer."""
    value: Union[str, int]


Const = Union[Name, Literal]
Term = Union[Var, Name, Literal]


@dataclass(frozen=True)
class PropRef:
    var: Var
    key: str

    def __str__(self) -> str:
        return f"{self.var}.{self.key}"


Element = Union[Var, PropRef]


# -- regular path expressions -----------------------------------------------------

@dataclass(frozen=True)
class Eps:
    pass


@dataclass(frozen=True)
class Sym:
    """An edge type constant."""
    type: Const


@dataclass(frozen=True)
class Concat:
    left: "Rpq"
    right: "Rpq"


@dataclass(frozen=True)
class Alt:
    left: "Rpq"
    right: "Rpq"


@dataclass(frozen=True)
class Inv:
    expr: "Rpq"


@dataclass(frozen=True)
class Star:
    expr: "Rpq"


@dataclass(frozen=True)
class Plus:
    expr: "Rpq"


@dataclass(frozen=True)
class Optional_:
    expr: "Rpq"


Rpq = Union[Eps, Sym, Concat, Alt, Inv, Star, Plus, Optional_]


# -- surface match patterns ---------------------------------------------------------

@dataclass(frozen=True)
class NodePattern:
    term: Term | None  # None for an anonymous node ``()``
    labels: tuple = ()
    props: tuple = ()  # (key, Term)


@dataclass(frozen=True)
class EdgePattern:
    var: Var | None = None
    type: Term | None = None  # Var when written TYPE(?t)
    props: tuple = ()


@dataclass(frozen=True)
class PathPattern:
    var: Var | None
    rpq: Rpq


@dataclass(frozen=True)
class Chain:
    nodes: tuple
    links: tuple  # len(nodes) - 1 edge or path patterns


@dataclass(frozen=True)
class Group:
    chains: tuple
    optionals: tuple = ()  # Groups, applied left to right


# -- conditions ---------------------------------------------------------------------

COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Compare:
    op: str
    left: Union[Var, PropRef, Name, Literal]
    right: Union[Var, PropRef, Name, Literal]


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: "Condition"


Condition = Union[Compare, And, Or, Not]


@dataclass(frozen=True)
class OrderItem:
    element: Element
    descending: bool = False


@dataclass(frozen=True)
class Query:
    select: tuple | None  # None for SELECT *
    match: Group
    where: Condition | None = None
    order_by: tuple = ()
    limit: int | None = None
    explain: bool = False


# -- desugared (formal) form --------------------------------------------------------

@dataclass(frozen=True)
class ObjectAtom:
    term: Term


@dataclass(frozen=True)
class LabelAtom:
    term: Term
    label: str


@dataclass(frozen=True)
class PropAtom:
    term: Term
    key: str
    value: Term


@dataclass(frozen=True)
class EdgeAtom:
    source: Term
    type: Term
    target: Term
    edge: Term


@dataclass(frozen=True)
class PathAtom:
    source: Term
    rpq: Rpq
    target: Term
    var: Var | None = None


Atom = Union[ObjectAtom, LabelAtom, PropAtom, EdgeAtom, PathAtom]


@dataclass(frozen=True)
class Conj:
    atoms: tuple


@dataclass(frozen=True)
class Opt:
    left: "Pattern"
    right: "Pattern"


Pattern = Union[Conj, Opt]


@dataclass(frozen=True)
class FormalQuery:
    """The tuple (R, C, E, O, n); ``limit`` 0 means no limit."""
    pattern: Pattern
    condition: Condition | None
    select: tuple
    order: tuple = ()
    limit: int = 0
    explain: bool = False
    user_vars: tuple = field(default=(), compare=False)


# -- variable helpers ---------------------------------------------------------------

def term_vars(term) -> list[Var]:
    return [term] if isinstance(term, Var) else []


def atom_vars(atom) -> list[Var]:
    """Variables of an atom in column order (duplicates kept)."""
    if isinstance(atom, ObjectAtom):
        terms = [atom.term]
    elif isinstance(atom, LabelAtom):
        terms = [atom.term]
    elif isinstance(atom, PropAtom):
        terms = [atom.term, atom.value]
    elif isinstance(atom, EdgeAtom):
        terms = [atom.source, atom.type, atom.target, atom.edge]
    else:
        terms = [atom.source, atom.target, atom.var]
    return [t for t in terms if isinstance(t, Var)]


def pattern_vars(pattern) -> set[Var]:
    if isinstance(pattern, Conj):
        return {v for a in pattern.atoms for v in atom_vars(a)}
    return pattern_vars(pattern.left) | pattern_vars(pattern.right)


def pattern_atoms(pattern) -> list:
    if isinstance(pattern, Conj):
        return list(pattern.atoms)
    return pattern_atoms(pattern.left) + pattern_atoms(pattern.right)


def condition_vars(cond) -> list[Var]:
    if cond is None:
        return []
    if isinstance(cond, Compare):
        out = []
        for side in (cond.left, cond.right):
            if isinstance(side, Var):
                out.append(side)
            elif isinstance(side, PropRef):
                out.append(side.var)
        return out
    if isinstance(cond, Not):
        return condition_vars(cond.item)
    return [v for item in cond.items for v in condition_vars(item)]


def element_var(element) -> Var:
    return element if isinstance(element, Var) else element.var


# -- compact text forms (plan explanations, diagnostics) ---------------------------------

def term_text(term) -> str:
    if isinstance(term, Var):
        return str(term)
    if isinstance(term, Literal):
        return str(term.value) if isinstance(term.value, int) else '"' + term.value.replace('"', '\\"') + '"'
    if isinstance(term, Name):
        return term.text
    return "_"


def rpq_text(expr, parent: int = 0) -> str:
    if isinstance(expr, Eps):
        return "()"
    if isinstance(expr, Sym):
        return term_text(expr.type)
    if isinstance(expr, Alt):
        text, prec = f"{rpq_text(expr.left, 1)}|{rpq_text(expr.right, 2)}", 1
    elif isinstance(expr, Concat):
        text, prec = f"{rpq_text(expr.left, 2)}/{rpq_text(expr.right, 3)}", 2
    elif isinstance(expr, Inv):
        text, prec = f"^{rpq_text(expr.expr, 3)}", 3
    else:
        suffix = {Star: "*", Plus: "+", Optional_: "?"}[type(expr)]
        text, prec = f"{rpq_text(expr.expr, 4)}{suffix}", 4
    return f"({text})" if prec < parent else text


def atom_text(atom) -> str:
    if isinstance(atom, ObjectAtom):
        return f"Object({term_text(atom.term)})"
    if isinstance(atom, LabelAtom):
        return f"Label({term_text(atom.term)}, {atom.label})"
    if isinstance(atom, PropAtom):
        return f"Prop({term_text(atom.term)}, {atom.key}, {term_text(atom.value)})"
    if isinstance(atom, EdgeAtom):
        parts = (atom.source, atom.edge, atom.type, atom.target)
        return "Edge(" + ", ".join(term_text(t) for t in parts) + ")"
    path = f", {atom.var}" if atom.var is not None else ""
    return f"Path({term_text(atom.source)}, {rpq_text(atom.rpq)}, {term_text(atom.target)}{path})"


def pattern_text(pattern) -> str:
    if isinstance(pattern, Conj):
        return ", ".join(atom_text(a) for a in pattern.atoms)
    return f"{pattern_text(pattern.left)} OPTIONAL {{{pattern_text(pattern.right)}}}"
