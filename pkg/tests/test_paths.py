from __future__ import annotations

import itertools
import random
import re
from collections import deque

from hypothesis import given, settings
from hypothesis import strategies as st

from mdb.algebra import eval_rpq
from mdb.context import QueryContext
from mdb.dgql import compile_query
from mdb.dgql.ast import Alt, Concat, Eps, Inv, Name, Optional_, Plus, Star, Sym
from mdb.engine import Engine
from mdb.ingest import build_graph, import_text, parse_import
from mdb.paths import GraphAdjacency, StoreAdjacency, compile_rpq, eval_path, reachable_pairs
from mdb.storage import Database

from conftest import fixture_graph
from randgen import random_db_text, random_rpq

A, B, C = Sym(Name("a")), Sym(Name("b")), Sym(Name("c"))


def rpq_of(text: str):
    return compile_query(f"SELECT ?x MATCH (?x)=[{text}]=>(?y)").pattern.atoms[0].rpq


# -- an independent oracle: Glushkov positions and product-graph BFS ---------------------

def _normalize(expr, inverted=False):
    if isinstance(expr, Sym):
        return ("sym", expr.type, not inverted)
    if isinstance(expr, Eps):
        return ("eps",)
    if isinstance(expr, Inv):
        return _normalize(expr.expr, not inverted)
    if isinstance(expr, (Star, Plus, Optional_)):
        return (type(expr).__name__, _normalize(expr.expr, inverted))
    parts = [_normalize(expr.left, inverted), _normalize(expr.right, inverted)]
    if isinstance(expr, Concat) and inverted:
        parts.reverse()
    return ("cat" if isinstance(expr, Concat) else "alt", *parts)


class Glushkov:
    def __init__(self, expr):
        self.letters: list = []
        self.follow: dict = {}
        self.nullable, self.first, self.last = self._build(_normalize(expr))

    def _build(self, node):
        kind = node[0]
        if kind == "eps":
            return True, set(), set()
        if kind == "sym":
            self.letters.append((node[1], node[2]))
            p = len(self.letters) - 1
            self.follow[p] = set()
            return False, {p}, {p}
        if kind in ("Star", "Plus", "Optional_"):
            n, f, l = self._build(node[1])
            if kind != "Optional_":
                for p in l:
                    self.follow[p] |= f
            return n or kind != "Plus", f, l
        n1, f1, l1 = self._build(node[1])
        n2, f2, l2 = self._build(node[2])
        if kind == "alt":
            return n1 or n2, f1 | f2, l1 | l2
        for p in l1:
            self.follow[p] |= f2
        return n1 and n2, f1 | (f2 if n1 else set()), l2 | (l1 if n2 else set())


def oracle_distances(expr, graph) -> dict:
    """{(start, end): shortest path length} by BFS over (object, position)."""
    g = Glushkov(expr)
    out_edges: dict = {}
    for s, t, o in graph.gamma.values():
        out_edges.setdefault((s, graph.display(t), True), []).append(o)
        out_edges.setdefault((o, graph.display(t), False), []).append(s)
    result = {}
    for start in graph.objects:
        dist = {(start, None): 0}
        queue = deque([(start, None)])
        if g.nullable:
            result[(start, start)] = 0
        while queue:
            obj, pos = queue.popleft()
            nxt = g.first if pos is None else g.follow[pos]
            for p in nxt:
                name, forward = g.letters[p]
                for other in out_edges.get((obj, name.text, forward), ()):
                    if (other, p) not in dist:
                        dist[(other, p)] = dist[(obj, pos)] + 1
                        queue.append((other, p))
                        if p in g.last and (start, other) not in result:
                            result[(start, other)] = dist[(other, p)]
    return result


# -- automaton construction ---------------------------------------------------------------

def test_epsilon_automaton():
    aut = compile_rpq(Eps())
    assert aut.start in aut.finals and aut.letters() == set()


def test_plus_has_two_states():
    aut = compile_rpq(rpq_of("child+"))
    child = (Name("child"), True)
    assert aut.states == 2
    assert aut.transitions[0] == ((child, 1),)
    assert aut.transitions[1] == ((child, 1),)
    assert aut.finals == frozenset({1})


def test_star_has_one_state():
    aut = compile_rpq(rpq_of("child*"))
    assert aut.states == 1 and aut.finals == frozenset({0})


def test_inverse_uses_backward_letters():
    aut = compile_rpq(rpq_of("^father"))
    assert aut.letters() == {(Name("father"), False)}
    aut = compile_rpq(rpq_of("^(a/^b)"))
    assert aut.accepts([(Name("b"), True), (Name("a"), False)])
    assert not aut.accepts([(Name("a"), False), (Name("b"), True)])


def test_unknown_type_letter_is_dropped():
    aut = compile_rpq(rpq_of("a/b|c"), resolve=lambda c: None if c == Name("b") else c)
    assert aut.letters() == {(Name("c"), True)}


def _regex(expr) -> str:
    node = _normalize(expr)

    def walk(n):
        kind = n[0]
        if kind == "eps":
            return "(?:)"
        if kind == "sym":
            ch = n[1].text
            return ch if n[2] else ch.upper()
        if kind in ("Star", "Plus", "Optional_"):
            return f"(?:{walk(n[1])}){ {'Star': '*', 'Plus': '+', 'Optional_': '?'}[kind]}"
        op = "" if kind == "cat" else "|"
        return f"(?:{walk(n[1])}{op}{walk(n[2])})"
    return walk(node)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_language_matches_regex_up_to_length_4(seed):
    rng = random.Random(seed)
    text = random_rpq(rng).replace("t0", "a").replace("t1", "b").replace("t2", "c")
    expr = rpq_of(text)
    aut = compile_rpq(expr)
    pattern = re.compile(_regex(expr))
    alphabet = [(Name(x), fwd) for x in "abc" for fwd in (True, False)]
    for n in range(5):
        for word in itertools.product(alphabet, repeat=n):
            spelled = "".join(a.text if fwd else a.text.upper() for a, fwd in word)
            assert aut.accepts(word) == bool(pattern.fullmatch(spelled)), (text, spelled)


def test_trimmed_states_reach_a_final_state():
    aut = compile_rpq(rpq_of("(a|^b)*/c?"))
    assert aut.states == 2
    for q in aut.transitions:
        seen, stack = {q}, [q]
        while stack:
            for _, p in aut.transitions[stack.pop()]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        assert seen & aut.finals


# -- search -----------------------------------------------------------------------------------

def test_child_plus_from_alberto():
    graph = fixture_graph("fig1")
    aut = compile_rpq(rpq_of("child+"), QueryContext(graph).const_id)
    n2, n1 = graph.lookup_name("n2"), graph.lookup_name("n1")
    results = list(eval_path(n2, aut, GraphAdjacency(graph), want_witness=True))
    assert [end for end, _ in results] == [n1]
    assert len(results[0][1]) == 1


def test_set_semantics_per_pair():
    graph = fixture_graph("fig5")
    aut = compile_rpq(rpq_of("position held"), QueryContext(graph).const_id)
    ends = list(eval_path(graph.lookup_name("Michelle Bachelet"), aut, GraphAdjacency(graph)))
    assert len(ends) == 1


def test_star_includes_start_even_without_edges():
    graph = fixture_graph("fig1")
    aut = compile_rpq(rpq_of("nothing*"), QueryContext(graph).const_id)
    n1 = graph.lookup_name("n1")
    assert [e for e, _ in eval_path(n1, aut, GraphAdjacency(graph))] == [n1]


def test_start_outside_objects_yields_nothing():
    graph = fixture_graph("fig1")
    aut = compile_rpq(Star(A))
    assert list(eval_path(12345, aut, GraphAdjacency(graph))) == []


def _replay(witness, gamma_of, aut, resolve_type):
    word = []
    for i, (eid, forward) in enumerate(witness.steps):
        s, t, o = gamma_of(eid)
        a, b = witness.objects[i], witness.objects[i + 1]
        assert (s, o) == ((a, b) if forward else (b, a))
        word.append((resolve_type(t), forward))
    assert aut.accepts(word)


def _check_store(seed: int, tmp_path, rpqs: int = 1) -> int:
    """Engine pairs against eval_rpq and the Glushkov oracle; witnesses replay.
    Returns the number of witnesses checked."""
    rng = random.Random(seed)
    text = random_db_text(rng, max_objects=15)
    graph = build_graph(parse_import(text))
    import_text(text, tmp_path / f"db{seed}")
    db = Database.open(tmp_path / f"db{seed}")
    checked = 0
    try:
        engine = Engine(db)
        for _ in range(rpqs):
            rpq_text = random_rpq(rng)
            expr = rpq_of(rpq_text)
            oracle = oracle_distances(expr, graph)
            algebra = eval_rpq(expr, graph)
            assert algebra == set(oracle), rpq_text
            result = engine.execute(f"SELECT ?x, ?y, ?p MATCH (?x)=[?p {rpq_text}]=>(?y)")
            ctx = result.context
            got = {}
            aut = compile_rpq(expr, ctx.const_id)
            for x, y, p in result.rows:
                got[(ctx.display(x), ctx.display(y))] = p
                witness = ctx.witness(p)
                assert witness.objects[0] == x and witness.objects[-1] == y
                _replay(witness, db.edge_lookup, aut, lambda t: t)
            want = {(graph.display(a), graph.display(b)): d for (a, b), d in oracle.items()}
            assert set(got) == set(want), rpq_text
            for pair, p in got.items():
                assert len(ctx.witness(p)) == want[pair], rpq_text
            checked += len(got)
    finally:
        db.close()
    return checked


def test_engine_paths_against_oracles(tmp_path):
    for seed in range(25):
        _check_store(seed, tmp_path)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_reversed_search_is_transposed(seed):
    rng = random.Random(seed)
    graph = build_graph(parse_import(random_db_text(rng, max_objects=15)))
    expr = rpq_of(random_rpq(rng))
    adj = GraphAdjacency(graph)
    resolve = QueryContext(graph).const_id
    fwd = reachable_pairs(expr, graph.objects, adj, resolve)
    back = reachable_pairs(Inv(expr), graph.objects, adj, resolve)
    assert back == {(b, a) for a, b in fwd}
    assert fwd == eval_rpq(expr, graph)


def test_store_adjacency_matches_graph(fig5_db):
    graph = fixture_graph("fig5")
    ctx = QueryContext(fig5_db)
    held = ctx.const_id(Name("position held"))
    mb = ctx.const_id(Name("Michelle Bachelet"))
    store = list(StoreAdjacency(fig5_db).neighbors(mb, held, True))
    mem = list(GraphAdjacency(graph).neighbors(graph.lookup_name("Michelle Bachelet"),
                                               graph.lookup_name("position held"), True))
    assert len(store) == len(mem) == 2


def test_bound_unreachable_pair_gives_no_row(fig1_db):
    result = Engine(fig1_db).execute("SELECT ?x MATCH (n1)=[child]=>(n2), (?x)")
    assert result.rows == []


def test_bound_self_star_always_matches(fig1_db):
    result = Engine(fig1_db).execute("SELECT ?x MATCH (?x :human), (?x)=[zzz*]=>(?x)")
    assert len(result.rows) == 2


def test_alt_symbols_share_start():
    aut = compile_rpq(Alt(A, Concat(B, C)))
    assert aut.accepts([(Name("a"), True)]) and aut.accepts([(Name("b"), True), (Name("c"), True)])
