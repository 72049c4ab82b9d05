"""Text import format.

One statement per line; ``#`` starts a comment outside quoted strings::

    (Michelle Bachelet) :human {first name: "Michelle", children: "3"}
    e1 = (Michelle Bachelet)-[position held]->(President of Chile)
    (e1)-[start date]->("2014-03-11")
    e2 = (Michelle Bachelet)-[position held]->(President of Chile) {order: 2}

Bare words (runs of words are joined with single spaces) name NAMED nodes,
quoted strings and integers are values, ``_:x`` is an anonymous node.  An
``alias =`` prefix names the edge so later lines can use it as a term; from
that line on the alias shadows a node of the same name.  Labels and property
keys are stored as string values.  Properties written after an edge attach to
the edge object.
"""

from __future__ import annotations

import os
import re
import shutil
import tempfile
from dataclasses import dataclass, field

from . import ids
from .errors import DuplicateAliasError, QuerySyntaxError, StorageError, UndeclaredAliasError
from .graph import PropertyDomainGraph, build_reference_graph
from .storage.database import store_graph
from .storage.objectfile import ObjectFile
from .storage.pages import DEFAULT_BUFFER_PAGES, DEFAULT_PAGE_SIZE

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#.*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<anon>_:[^\s()\[\]{}:,="\#]+)
  | (?P<open>-\[)
  | (?P<close>\]->)
  | (?P<punct>[(){}:,=])
  | (?P<word>(?:[^\s()\[\]{}:,="\#-]|-(?!\[))+)
    """,
    re.VERBOSE,
)
_INT = re.compile(r"-?\d+")
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}


def unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def quote(text: str) -> str:
    body = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    return f'"{body}"'


@dataclass(frozen=True)
class Term:
    kind: str  # name | alias | string | int | anon
    value: object


@dataclass
class ImportStatement:
    kind: str  # node | edge
    terms: tuple
    alias: str | None = None
    labels: list = field(default_factory=list)
    props: list = field(default_factory=list)
    line: int = 0


@dataclass
class _Tok:
    kind: str
    text: str
    column: int


def _tokenize(line: str, lineno: int) -> list[_Tok]:
    tokens = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        if kind == "comment":
            break
        if kind != "ws":
            text = m.group()
            if kind == "punct":
                kind = text
            elif kind == "word" and _INT.fullmatch(text):
                kind = "int"
            tokens.append(_Tok(kind, text, pos + 1))
        pos = m.end()
    return tokens


class _LineParser:
    def __init__(self, tokens, lineno, end_column, aliases):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno
        self.end_column = end_column
        self.aliases = aliases  # alias -> line where it is declared

    def peek(self, offset=0):
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def fail(self, message):
        tok = self.peek()
        if tok is None:
            raise QuerySyntaxError(f"{message} at end of line", self.lineno, self.end_column)
        raise QuerySyntaxError(f"{message}, found {tok.text!r}", self.lineno, tok.column)

    def expect(self, kind, what=None):
        tok = self.peek()
        if tok is None or tok.kind != kind:
            self.fail(f"expected {what or repr(kind)}")
        self.pos += 1
        return tok

    def words(self) -> str | None:
        parts = []
        while (tok := self.peek()) is not None and tok.kind in ("word", "int"):
            parts.append(tok.text)
            self.pos += 1
        return " ".join(parts) if parts else None

    def term(self) -> Term:
        tok = self.peek()
        if tok is None:
            self.fail("expected a term")
        if tok.kind == "string":
            self.pos += 1
            return Term("string", unescape(tok.text[1:-1]))
        if tok.kind == "anon":
            self.pos += 1
            return Term("anon", tok.text[2:])
        if tok.kind == "int" and (nxt := self.peek(1)) is not None and nxt.kind not in ("word", "int"):
            self.pos += 1
            return Term("int", int(tok.text))
        column = tok.column
        name = self.words()
        if name is None:
            self.fail("expected a term")
        declared = self.aliases.get(name)
        if declared is not None:
            if declared < self.lineno:
                return Term("alias", name)
            raise UndeclaredAliasError(f"edge alias {name!r} used before its declaration on line {declared}",
                                       self.lineno, column)
        return Term("name", name)

    def key(self) -> str:
        tok = self.peek()
        if tok is not None and tok.kind == "string":
            self.pos += 1
            return unescape(tok.text[1:-1])
        name = self.words()
        if name is None:
            self.fail("expected a property key")
        return name

    def value(self):
        tok = self.peek()
        if tok is not None and tok.kind == "string":
            self.pos += 1
            return unescape(tok.text[1:-1])
        if tok is not None and tok.kind == "int" and (nxt := self.peek(1)) is not None and nxt.kind in (",", "}"):
            self.pos += 1
            return int(tok.text)
        text = self.words()
        if text is None:
            self.fail("expected a property value")
        return text

    def props(self) -> list:
        out = []
        if self.peek() is None or self.peek().kind != "{":
            return out
        self.pos += 1
        if self.peek() is not None and self.peek().kind == "}":
            self.pos += 1
            return out
        while True:
            key = self.key()
            self.expect(":", "':'")
            out.append((key, self.value()))
            tok = self.peek()
            if tok is not None and tok.kind == ",":
                self.pos += 1
                continue
            self.expect("}", "',' or '}'")
            return out

    def statement(self) -> ImportStatement:
        alias = None
        if self.peek() is not None and self.peek().kind in ("word", "int"):
            start = self.pos
            alias = self.words()
            if self.peek() is None or self.peek().kind != "=":
                self.pos = start
                self.fail("expected '('")
            self.pos += 1
        self.expect("(", "'('")
        first = self.term()
        self.expect(")", "')'")
        tok = self.peek()
        if tok is not None and tok.kind == "open":
            self.pos += 1
            etype = self.term()
            self.expect("close", "']->'")
            self.expect("(", "'('")
            target = self.term()
            self.expect(")", "')'")
            stmt = ImportStatement("edge", (first, etype, target), alias, props=self.props(), line=self.lineno)
        else:
            if alias is not None:
                self.fail("expected '-[' after an aliased term")
            labels = []
            while self.peek() is not None and self.peek().kind == ":":
                self.pos += 1
                label = self.key()
                labels.append(label)
            stmt = ImportStatement("node", (first,), None, labels, self.props(), self.lineno)
        if self.peek() is not None:
            self.fail("unexpected trailing input")
        return stmt


def parse_import(text: str) -> list[ImportStatement]:
    lines = text.splitlines()
    tokenized = []
    aliases: dict[str, int] = {}
    for lineno, line in enumerate(lines, 1):
        tokens = _tokenize(line, lineno)
        tokenized.append(tokens)
        # Pre-scan alias declarations so a forward use can be reported as such.
        n = 0
        while n < len(tokens) and tokens[n].kind in ("word", "int"):
            n += 1
        if n and n < len(tokens) and tokens[n].kind == "=":
            name = " ".join(t.text for t in tokens[:n])
            if name in aliases:
                raise DuplicateAliasError(f"edge alias {name!r} already declared on line {aliases[name]}",
                                          lineno, tokens[0].column)
            aliases[name] = lineno
    statements = []
    for lineno, (line, tokens) in enumerate(zip(lines, tokenized), 1):
        if tokens:
            statements.append(_LineParser(tokens, lineno, len(line) + 1, aliases).statement())
    return statements


def build_graph(statements) -> PropertyDomainGraph:
    """Assign identifiers in statement order and build the reference graph."""
    strings = ObjectFile()
    intern = strings.intern
    alias_ids: dict[str, int] = {}
    anon_ids: dict[str, int] = {}
    edges, labels, props, nodes = [], [], [], []

    def resolve(term: Term):
        if term.kind == "name":
            return ids.named_node(intern(term.value))
        if term.kind == "alias":
            return alias_ids[term.value]
        if term.kind == "anon":
            if term.value not in anon_ids:
                anon_ids[term.value] = ids.anon_node(len(anon_ids))
            return anon_ids[term.value]
        try:
            return ids.encode_value(term.value, intern)
        except OverflowError as exc:
            raise QuerySyntaxError(str(exc), stmt.line) from None

    for stmt in statements:
        if stmt.kind == "edge":
            components = tuple(resolve(t) for t in stmt.terms)
            obj = ids.edge_id(len(edges))
            edges.append(components)
            if stmt.alias is not None:
                alias_ids[stmt.alias] = obj
        else:
            obj = resolve(stmt.terms[0])
            nodes.append(obj)
        for label in stmt.labels:
            labels.append((obj, ids.encode_value(label, intern)))
        for key, value in stmt.props:
            try:
                props.append((obj, ids.encode_value(key, intern), ids.encode_value(value, intern)))
            except OverflowError as exc:
                raise QuerySyntaxError(str(exc), stmt.line) from None
    return build_reference_graph(edges, labels, props, nodes, strings)


def graph_stats(graph: PropertyDomainGraph) -> dict:
    return {
        "objects": len(graph.objects),
        "edges": len(graph.gamma),
        "labels": sum(len(v) for v in graph.labels.values()),
        "properties": len(graph.props),
        "strings": len(graph.strings),
    }


def import_text(text: str, path, page_size: int = DEFAULT_PAGE_SIZE,
                buffer_pages: int = DEFAULT_BUFFER_PAGES) -> dict:
    """Import ``text`` into a new database directory; return its statistics.

    The database is assembled in a sibling temporary directory and renamed
    into place, so a failure leaves nothing behind.
    """
    graph = build_graph(parse_import(text))
    path = os.path.abspath(os.fspath(path))
    if os.path.exists(path) and (not os.path.isdir(path) or os.listdir(path)):
        raise StorageError("database path already exists and is not empty", path)
    parent = os.path.dirname(path)
    try:
        os.makedirs(parent, exist_ok=True)
        staging = tempfile.mkdtemp(prefix=".mdb-import-", dir=parent)
    except OSError as exc:
        raise StorageError(f"cannot create database directory ({exc.strerror})", path) from exc
    try:
        store_graph(staging, graph, page_size, buffer_pages).close()
        if os.path.isdir(path):
            os.rmdir(path)
        os.rename(staging, path)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    return graph_stats(graph)


def import_file(source, path, page_size: int = DEFAULT_PAGE_SIZE,
                buffer_pages: int = DEFAULT_BUFFER_PAGES) -> dict:
    try:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise StorageError(f"cannot read import file ({exc.strerror})", source) from exc
    return import_text(text, path, page_size, buffer_pages)


# -- export ---------------------------------------------------------------------


def export_text(graph) -> str:
    """Render a graph (in-memory or on-disk view) back into import text."""
    if isinstance(graph, PropertyDomainGraph):
        gamma = [(e, graph.gamma[e]) for e in sorted(graph.gamma)]
        labels = list(graph.label_records())
        props = list(graph.property_records())
        objects = sorted(graph.objects)
    else:
        gamma = [(e, (s, t, o)) for s, t, o, e in sorted(graph.scan("edges"), key=lambda r: r[3])]
        labels = list(graph.scan("labels"))
        props = list(graph.scan("properties"))
        objects = [o for (o,) in graph.scan("objects")]
    names = {graph.resolve(ids.payload_of(o)) for o in objects if ids.tag_of(o) == ids.NAMED_NODE}
    prefix = "e"
    while any(n.startswith(prefix) for n in names):
        prefix = "_" + prefix

    def term(oid):
        tag = ids.tag_of(oid)
        if tag == ids.NAMED_NODE:
            return graph.resolve(ids.payload_of(oid))
        if tag == ids.ANON_NODE:
            return f"_:b{ids.payload_of(oid)}"
        if tag == ids.EDGE:
            return f"{prefix}{ids.payload_of(oid)}"
        value = ids.decode_value(oid, graph.resolve)
        return str(value) if isinstance(value, int) else quote(value)

    def text_of(oid):
        value = ids.decode_value(oid, graph.resolve)
        return str(value) if isinstance(value, int) else quote(value)

    lines = [f"{term(e)} = ({term(s)})-[{term(t)}]->({term(o)})" for e, (s, t, o) in gamma]
    annotations: dict[int, tuple[list, list]] = {}
    for obj, label in labels:
        annotations.setdefault(obj, ([], []))[0].append(label)
    for obj, key, value in props:
        annotations.setdefault(obj, ([], []))[1].append((key, value))
    in_edges = {c for _, triple in gamma for c in triple} | {e for e, _ in gamma}
    for obj in objects:
        if obj not in annotations and obj not in in_edges:
            annotations[obj] = ([], [])
    for obj in sorted(annotations):
        labs, kvs = annotations[obj]
        line = f"({term(obj)})"
        line += "".join(f" :{text_of(lab)}" for lab in labs)
        if kvs:
            line += " {" + ", ".join(f"{text_of(k)}: {text_of(v)}" for k, v in kvs) + "}"
        lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")
