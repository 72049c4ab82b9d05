"""Random databases and queries for differential testing."""

from __future__ import annotations

import random

NODES = [f"a{i}" for i in range(12)]
TYPES = ["t0", "t1", "t2"]
LABELS = ["L0", "L1"]
KEYS = ["k0", "k1"]
VALUES = ['"x"', '"y"', "1", "2", '"a long external value"']
VARS = ["?x", "?y", "?z", "?w"]


def random_db_text(rng: random.Random, max_objects: int = 50) -> str:
    """Import text for a small random property domain graph."""
    nodes = NODES[:rng.randint(3, len(NODES))]
    lines, aliases = [], []
    for node in nodes:
        annot = ""
        if rng.random() < 0.5:
            annot += " :" + rng.choice(LABELS)
        if rng.random() < 0.5:
            annot += " {" + ", ".join(f"{k}: {rng.choice(VALUES)}" for k in rng.sample(KEYS, rng.randint(1, 2))) + "}"
        lines.append(f"({node}){annot}")
    budget = max_objects - len(nodes) - len(TYPES) - len(VALUES)
    for i in range(rng.randint(min(8, budget), max(1, min(30, budget)))):
        ends = nodes + aliases
        src = rng.choice(ends)
        tgt = f"({rng.choice(ends) if rng.random() < 0.85 else rng.choice(VALUES)})"
        props = f" {{{rng.choice(KEYS)}: {rng.choice(VALUES)}}}" if rng.random() < 0.2 else ""
        alias = f"e{i}"
        lines.append(f"{alias} = ({src})-[{rng.choice(TYPES)}]->{tgt}{props}")
        aliases.append(alias)
    return "\n".join(lines) + "\n"


def random_rpq(rng: random.Random, depth: int = 0) -> str:
    if depth >= 2 or rng.random() < 0.4:
        base = rng.choice(TYPES)
        return ("^" + base) if rng.random() < 0.3 else base
    kind = rng.choice(["alt", "seq", "star", "plus", "opt", "inv"])
    if kind == "alt":
        return f"({random_rpq(rng, depth + 1)}|{random_rpq(rng, depth + 1)})"
    if kind == "seq":
        return f"({random_rpq(rng, depth + 1)}/{random_rpq(rng, depth + 1)})"
    if kind == "inv":
        return f"^({random_rpq(rng, depth + 1)})"
    suffix = {"star": "*", "plus": "+", "opt": "?"}[kind]
    return f"({random_rpq(rng, depth + 1)}){suffix}"


class _QueryBuilder:
    def __init__(self, rng: random.Random, paths: bool):
        self.rng = rng
        self.vars = VARS[:rng.randint(3, 4)]
        self.paths = paths
        self.path_used = False

    def term(self, pool, avoid=()):
        if self.rng.random() < 0.1:
            return self.rng.choice(NODES[:4])
        return self.var(pool, avoid)

    def var(self, pool, avoid=""):
        fresh = [v for v in pool if v not in avoid]
        return self.rng.choice(fresh or pool)

    def node(self, pool, avoid=()) -> str:
        body = self.term(pool, avoid)
        roll = self.rng.random()
        if roll < 0.1:
            body += " :" + self.rng.choice(LABELS)
        elif roll < 0.18:
            body += f" {{{self.rng.choice(KEYS)}: {self.rng.choice(VALUES)}}}"
        return f"({body})"

    def atom(self, pool) -> str:
        rng = self.rng
        roll = rng.random()
        if roll < 0.2:
            return self.node(pool)
        src = self.node(pool)
        if self.paths and not self.path_used and roll < 0.4:
            self.path_used = True
            return f"{src}=[{random_rpq(rng)}]=>{self.node(pool, src)}"
        tgt = self.node(pool, src)
        inner = rng.choice(TYPES)
        spare = [v for v in pool if v not in src + tgt]
        if spare and rng.random() < 0.3:
            edge_var = rng.choice(spare)
            kind = self.var(pool, src + tgt + edge_var)
            inner = f"{edge_var} {inner}" if rng.random() < 0.6 else f"{edge_var} TYPE({kind})"
        return f"{src}-[{inner}]->{tgt}"

    def condition(self, usable) -> str:
        rng = self.rng
        v = rng.choice(usable)
        roll = rng.random()
        if roll < 0.3:
            text = f"{v}.{rng.choice(KEYS)} {rng.choice(['==', '!=', '<', '>=', '<='])} {rng.choice(VALUES)}"
        elif roll < 0.5:
            text = f"{v} == {rng.choice(NODES[:4])}"
        elif roll < 0.7:
            text = f"{v} != {self.var(usable, v)}"
        elif roll < 0.85:
            text = f"{v}.{rng.choice(KEYS)} == {rng.choice(usable)}.{rng.choice(KEYS)}"
        else:
            text = f"NOT {v} == {rng.choice(NODES[:4])}"
        if rng.random() < 0.25:
            text = f"({text}) {rng.choice(['AND', 'OR'])} ({self.condition(usable)})"
        return text


def random_query(rng: random.Random, paths: bool = True, order: bool | None = None) -> str:
    """A query with at most 5 atoms, one OPTIONAL, one path atom and four
    variables; it may still fail the well-designedness check."""
    b = _QueryBuilder(rng, paths)
    n_atoms = rng.choice([1, 2, 2, 3, 3, 4, 5])
    n_opt = rng.randint(0, min(2, n_atoms - 1)) if rng.random() < 0.35 else 0
    main = [b.atom(b.vars) for _ in range(n_atoms - n_opt)]
    main_text = ", ".join(main)
    main_vars = [v for v in VARS if v in main_text]
    if not main_vars:
        main[-1] = f"({b.vars[0]})"
        main_text = ", ".join(main)
        main_vars = [b.vars[0]]
    pattern = main_text
    opt_vars = []
    if n_opt:
        fresh = [v for v in b.vars if v not in main_vars][:1]
        pool = main_vars + fresh
        parts = [b.atom(pool) for _ in range(n_opt)]
        if not any(v in part for part in parts for v in main_vars):
            parts[-1] = f"({rng.choice(main_vars)})"
        opt_text = ", ".join(parts)
        pattern += f" OPTIONAL {{{opt_text}}}"
        opt_vars = [v for v in fresh if v in opt_text]
    all_vars = main_vars + opt_vars
    if rng.random() < 0.2:
        select = "*"
        elements = all_vars
    else:
        elements = rng.sample(all_vars, rng.randint(1, len(all_vars)))
        if rng.random() < 0.3:
            elements.append(f"{rng.choice(all_vars)}.{rng.choice(KEYS)}")
        select = ", ".join(elements)
    text = f"SELECT {select} MATCH {pattern}"
    if rng.random() < 0.5:
        text += f" WHERE {b.condition(main_vars + opt_vars)}"
    if order is None:
        order = rng.random() < 0.3
    if order:
        items = []
        for _ in range(rng.randint(1, 2)):
            e = rng.choice(all_vars)
            if rng.random() < 0.4:
                e = f"{e}.{rng.choice(KEYS)}"
            items.append(f"DESC({e})" if rng.random() < 0.4 else e)
        text += " ORDER BY " + ", ".join(items)
        if rng.random() < 0.5:
            text += f" LIMIT {rng.randint(1, 5)}"
    return text


def random_graph_edges(rng: random.Random, n_objects: int, n_edges: int, types=TYPES) -> str:
    """Plain random edges among ``n_objects`` named nodes."""
    lines = [f"(n{i})" for i in range(n_objects)]
    for _ in range(n_edges):
        lines.append(f"(n{rng.randrange(n_objects)})-[{rng.choice(types)}]->(n{rng.randrange(n_objects)})")
    return "\n".join(lines) + "\n"


__all__ = ["random_db_text", "random_graph_edges", "random_query", "random_rpq"]
