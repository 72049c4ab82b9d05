"""Recursive-descent parser and canonical printer for DGQL.

Grammar (keywords are case-insensitive)::

    query    := [EXPLAIN] SELECT select MATCH group [WHERE cond] {ORDER BY order | LIMIT int}
    select   := '*' | element (',' element)*
    element  := VAR ['.' key]
    group    := chain ([','] chain)* ([','] OPTIONAL '{' group '}')*
    chain    := node (('-[' edge ']->' | '=[' path ']=>') node)*
    node     := '(' [term] (':' words)* [props] ')'
    edge     := [VAR] [TYPE '(' VAR ')' | [':'] const] [props]
    path     := [VAR] rpq
    rpq      := seq ('|' seq)* ;  seq := unary ('/' unary)*
    unary    := '^' unary | atom ('*' | '+' | '?')*
    atom     := '(' rpq ')' | [':'] const
    cond     := conj (OR conj)* ;  conj := neg (AND neg)*
    neg      := NOT neg | '(' cond ')' | operand cmp operand
    order    := item (',' item)* ;  item := (ASC|DESC) '(' element ')' | element [ASC|DESC]

Runs of bare words form one multi-word name.  A lone integer is an integer
value; property values written as bare words are strings, elsewhere bare
words name nodes.
"""

from __future__ import annotations

from ..errors import QuerySyntaxError, UnknownClauseError
from .ast import (COMPARISONS, Alt, And, Chain, Compare, Concat, EdgePattern, Eps, Group, Inv, Literal,
                  Name, NodePattern, Not, Optional_, Or, OrderItem, PathPattern, Plus, PropRef, Query,
                  Star, Sym, Var)
from .lexer import Token, tokenize


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise QuerySyntaxError(f"{message}, found {found}", tok.line, tok.column)

    def is_op(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def accept_op(self, text: str) -> bool:
        if self.is_op(text):
            self.pos += 1
            return True
        return False

    def expect_op(self, text: str) -> Token:
        if not self.is_op(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def is_kw(self, word: str) -> bool:
        return self.tok.keyword == word

    def accept_kw(self, word: str) -> bool:
        if self.is_kw(word):
            self.pos += 1
            return True
        return False

    def expect_kw(self, word: str) -> None:
        if not self.accept_kw(word):
            self.fail(f"expected {word}")

    def words(self, stop_at_keywords: bool = False) -> str | None:
        parts = []
        while self.tok.kind in ("word", "int"):
            if stop_at_keywords and self.tok.keyword:
                break
            parts.append(self.advance().text)
        return " ".join(parts) if parts else None

    # -- query ------------------------------------------------------------------

    def query(self) -> Query:
        explain = self.accept_kw("EXPLAIN")
        if self.tok.kind == "word" and not self.is_kw("SELECT"):
            tok = self.tok
            raise UnknownClauseError(f"unknown clause {tok.text}", tok.line, tok.column)
        self.expect_kw("SELECT")
        select = self.select()
        self.expect_kw("MATCH")
        match = self.group()
        where = None
        if self.accept_kw("WHERE"):
            where = self.condition()
        order_by, limit = (), None
        seen = set()
        while self.tok.kind != "eof":
            if self.is_kw("ORDER") and "ORDER" not in seen:
                seen.add(self.advance().keyword)
                self.expect_kw("BY")
                order_by = self.order()
            elif self.is_kw("LIMIT") and "LIMIT" not in seen:
                seen.add(self.advance().keyword)
                if self.tok.kind != "int":
                    self.fail("expected a positive integer after LIMIT")
                tok = self.advance()
                if tok.value < 1:
                    raise QuerySyntaxError("LIMIT must be at least 1", tok.line, tok.column)
                limit = tok.value
            elif self.tok.kind == "word" and self.tok.keyword not in ("ORDER", "LIMIT"):
                tok = self.tok
                raise UnknownClauseError(f"unknown clause {tok.text}", tok.line, tok.column)
            else:
                self.fail("expected ORDER BY, LIMIT or end of query")
        return Query(select, match, where, order_by, limit, explain)

    def select(self):
        if self.accept_op("*"):
            return None
        items = [self.element()]
        while self.accept_op(","):
            items.append(self.element())
        return tuple(items)

    def element(self):
        if self.tok.kind != "var":
            self.fail("expected a variable")
        var = Var(self.advance().value)
        if self.accept_op("."):
            return PropRef(var, self.key())
        return var

    def key(self) -> str:
        if self.tok.kind == "string":
            return self.advance().value
        if self.tok.kind in ("word", "int"):
            return self.advance().text
        self.fail("expected a property key")

    # -- match patterns -----------------------------------------------------------

    def group(self) -> Group:
        chains = [self.chain()]
        optionals = []
        while True:
            comma = self.accept_op(",")
            if self.is_kw("OPTIONAL"):
                self.advance()
                self.expect_op("{")
                optionals.append(self.group())
                self.expect_op("}")
            elif self.is_op("("):
                if optionals:
                    self.fail("graph elements must precede OPTIONAL blocks")
                chains.append(self.chain())
            elif comma:
                self.fail("expected a graph element or OPTIONAL")
            else:
                break
        return Group(tuple(chains), tuple(optionals))

    def chain(self) -> Chain:
        nodes = [self.node()]
        links = []
        while True:
            if self.accept_op("-["):
                links.append(self.edge())
                self.expect_op("]->")
            elif self.accept_op("=["):
                links.append(self.path())
                self.expect_op("]=>")
            else:
                break
            nodes.append(self.node())
        return Chain(tuple(nodes), tuple(links))

    def node(self) -> NodePattern:
        self.expect_op("(")
        term = None
        if self.tok.kind == "var":
            term = Var(self.advance().value)
        elif self.tok.kind == "string":
            term = Literal(self.advance().value)
        elif self.tok.kind == "int" and self.peek().kind != "word" and self.peek().kind != "int":
            term = Literal(self.advance().value)
        elif self.tok.kind in ("word", "int"):
            term = Name(self.words())
        labels = []
        while self.accept_op(":"):
            label = self.advance().value if self.tok.kind == "string" else self.words()
            if label is None:
                self.fail("expected a label")
            labels.append(label)
        props = self.props()
        self.expect_op(")")
        return NodePattern(term, tuple(labels), props)

    def props(self) -> tuple:
        if not self.accept_op("{"):
            return ()
        items = []
        if self.accept_op("}"):
            return ()
        while True:
            key = self.advance().value if self.tok.kind == "string" else self.words()
            if key is None:
                self.fail("expected a property key")
            self.expect_op(":")
            items.append((key, self.prop_value()))
            if self.accept_op("}"):
                return tuple(items)
            self.expect_op(",")

    def prop_value(self):
        tok = self.tok
        if tok.kind == "string":
            self.advance()
            return Literal(tok.value)
        if tok.kind == "int" and self.peek().kind not in ("word", "int"):
            self.advance()
            return Literal(tok.value)
        text = self.words()
        if text is None:
            self.fail("expected a property value")
        return Literal(text)

    def const(self):
        """Edge-type or node constant: quoted string, lone integer, or words."""
        tok = self.tok
        if tok.kind == "string":
            self.advance()
            return Literal(tok.value)
        if tok.kind == "int" and self.peek().kind not in ("word", "int"):
            self.advance()
            return Literal(tok.value)
        text = self.words()
        if text is None:
            return None
        return Name(text)

    def edge(self) -> EdgePattern:
        var = Var(self.advance().value) if self.tok.kind == "var" else None
        etype = None
        if self.is_kw("TYPE") and self.peek().kind == "op" and self.peek().text == "(":
            self.advance()
            self.advance()
            if self.tok.kind != "var":
                self.fail("expected a variable inside TYPE(...)")
            etype = Var(self.advance().value)
            self.expect_op(")")
        else:
            colon = self.accept_op(":")
            etype = self.const()
            if colon and etype is None:
                self.fail("expected an edge type")
        return EdgePattern(var, etype, self.props())

    def path(self) -> PathPattern:
        var = Var(self.advance().value) if self.tok.kind == "var" else None
        return PathPattern(var, self.rpq())

    def rpq(self):
        expr = self.rpq_seq()
        while self.accept_op("|"):
            expr = Alt(expr, self.rpq_seq())
        return expr

    def rpq_seq(self):
        expr = self.rpq_unary()
        while self.accept_op("/"):
            expr = Concat(expr, self.rpq_unary())
        return expr

    def rpq_unary(self):
        if self.accept_op("^"):
            return Inv(self.rpq_unary())
        if self.accept_op("("):
            expr = self.rpq()
            self.expect_op(")")
        else:
            self.accept_op(":")
            const = self.const()
            if const is None:
                self.fail("expected an edge type in path expression")
            expr = Sym(const)
        while self.tok.kind == "op" and self.tok.text in ("*", "+", "?"):
            op = self.advance().text
            expr = Star(expr) if op == "*" else Plus(expr) if op == "+" else Optional_(expr)
        return expr

    # -- conditions -------------------------------------------------------------

    def condition(self):
        items = [self.conjunction()]
        while self.accept_kw("OR"):
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conjunction(self):
        items = [self.negation()]
        while self.accept_kw("AND"):
            items.append(self.negation())
        return items[0] if len(items) == 1 else And(tuple(items))

    def negation(self):
        if self.accept_kw("NOT"):
            return Not(self.negation())
        if self.accept_op("("):
            cond = self.condition()
            self.expect_op(")")
            return cond
        left = self.operand()
        tok = self.tok
        if tok.kind != "op" or tok.text not in COMPARISONS + ("=",):
            self.fail("expected a comparison operator")
        self.advance()
        op = "==" if tok.text == "=" else tok.text
        return Compare(op, left, self.operand())

    def operand(self):
        tok = self.tok
        if tok.kind == "var":
            return self.element()
        if tok.kind == "string":
            self.advance()
            return Literal(tok.value)
        if tok.kind == "int" and (self.peek().kind != "word" or self.peek().keyword):
            self.advance()
            return Literal(tok.value)
        text = self.words(stop_at_keywords=True)
        if text is None:
            self.fail("expected a variable or constant")
        return Name(text)

    # -- ordering -------------------------------------------------------------------

    def order(self) -> tuple:
        items = [self.order_item()]
        while self.accept_op(","):
            items.append(self.order_item())
        return tuple(items)

    def order_item(self) -> OrderItem:
        if self.tok.keyword in ("ASC", "DESC") and self.peek().kind == "op" and self.peek().text == "(":
            desc = self.advance().keyword == "DESC"
            self.advance()
            element = self.element()
            self.expect_op(")")
            return OrderItem(element, desc)
        element = self.element()
        if self.tok.keyword in ("ASC", "DESC"):
            return OrderItem(element, self.advance().keyword == "DESC")
        return OrderItem(element, False)


def parse(text: str) -> Query:
    return Parser(text).query()


# -- canonical printer ------------------------------------------------------------------

def _quote(text: str) -> str:
    body = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{body}"'


def _key(key: str) -> str:
    return key if _plain_words(key) and " " not in key else _quote(key)


def _const(term) -> str:
    if isinstance(term, Var):
        return str(term)
    if isinstance(term, Literal):
        return str(term.value) if isinstance(term.value, int) else _quote(term.value)
    return term.text


def _element(element) -> str:
    if isinstance(element, PropRef):
        return f"{element.var}.{_key(element.key)}"
    return str(element)


def _props(props) -> str:
    if not props:
        return ""
    return " {" + ", ".join(f"{_key(k)}: {_const(v)}" for k, v in props) + "}"


def _plain_words(text: str) -> bool:
    """True when ``text`` re-lexes as the same run of bare words."""
    tokens = tokenize(text)[:-1]
    return bool(tokens) and " ".join(t.text for t in tokens) == text and \
        all(t.kind in ("word", "int") for t in tokens)


def _label(label: str) -> str:
    return label if _plain_words(label) else _quote(label)


def _rpq(expr, parent: int = 0) -> str:
    # precedence: alt 1, concat 2, inverse 3, postfix 4, atom 5
    if isinstance(expr, Sym):
        text, prec = _const(expr.type), 5
    elif isinstance(expr, Eps):
        raise ValueError("epsilon has no surface syntax")
    elif isinstance(expr, Alt):
        text, prec = f"{_rpq(expr.left, 1)}|{_rpq(expr.right, 2)}", 1
    elif isinstance(expr, Concat):
        text, prec = f"{_rpq(expr.left, 2)}/{_rpq(expr.right, 3)}", 2
    elif isinstance(expr, Inv):
        text, prec = f"^{_rpq(expr.expr, 3)}", 3
    else:
        suffix = "*" if isinstance(expr, Star) else "+" if isinstance(expr, Plus) else "?"
        text, prec = f"{_rpq(expr.expr, 4)}{suffix}", 4
    return f"({text})" if prec < parent else text


def _node(node: NodePattern) -> str:
    parts = []
    if node.term is not None:
        parts.append(_const(node.term))
    parts.extend(f":{_label(l)}" for l in node.labels)
    if node.props:
        parts.append(_props(node.props).strip())
    return "(" + " ".join(parts) + ")"


def _link(link) -> str:
    if isinstance(link, PathPattern):
        head = f"{link.var} " if link.var else ""
        return f"=[{head}{_rpq(link.rpq)}]=>"
    parts = []
    if link.var:
        parts.append(str(link.var))
    if isinstance(link.type, Var):
        parts.append(f"TYPE({link.type})")
    elif link.type is not None:
        parts.append(_const(link.type))
    return "-[" + " ".join(parts) + _props(link.props) + "]->"


def _chain(chain: Chain) -> str:
    out = _node(chain.nodes[0])
    for link, node in zip(chain.links, chain.nodes[1:]):
        out += _link(link) + _node(node)
    return out


def _group(group: Group) -> str:
    text = ", ".join(_chain(c) for c in group.chains)
    for opt in group.optionals:
        text += " OPTIONAL { " + _group(opt) + " }"
    return text


def _cond(cond, parent: int = 0) -> str:
    if isinstance(cond, Compare):
        sides = []
        for side in (cond.left, cond.right):
            sides.append(_element(side) if isinstance(side, (Var, PropRef)) else _const(side))
        return f"{sides[0]} {cond.op} {sides[1]}"
    if isinstance(cond, Not):
        return f"NOT {_cond(cond.item, 3)}"
    if isinstance(cond, And):
        text, prec = " AND ".join(_cond(i, 2) for i in cond.items), 2
    else:
        text, prec = " OR ".join(_cond(i, 1) for i in cond.items), 1
    return f"({text})" if prec <= parent else text


def to_text(query: Query) -> str:
    """Canonical text; ``parse(to_text(q)) == q``."""
    parts = []
    if query.explain:
        parts.append("EXPLAIN")
    select = "*" if query.select is None else ", ".join(_element(e) for e in query.select)
    parts.append(f"SELECT {select}")
    parts.append(f"MATCH {_group(query.match)}")
    if query.where is not None:
        parts.append(f"WHERE {_cond(query.where)}")
    if query.order_by:
        items = ", ".join(f"{'DESC' if o.descending else 'ASC'}({_element(o.element)})" for o in query.order_by)
        parts.append(f"ORDER BY {items}")
    if query.limit is not None:
        parts.append(f"LIMIT {query.limit}")
    return "\n".join(parts)
