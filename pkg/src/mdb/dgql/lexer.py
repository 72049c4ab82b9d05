"""Tokenizer for DGQL query text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import QuerySyntaxError
from ..ingest import unescape

KEYWORDS = frozenset({
    "SELECT", "MATCH", "WHERE", "ORDER", "BY", "LIMIT", "OPTIONAL",
    "AND", "OR", "NOT", "TYPE", "ASC", "DESC", "EXPLAIN",
})

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<var>\?\w+)
  | (?P<op>\]->|\]=>|-\[|=\[|==|!=|<=|>=|[<>=(){}\[\],:.*+?|/^])
  | (?P<int>-\d+(?!\w))
  | (?P<word>\w+(?:-\w+)*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # var | string | int | word | op | eof
    text: str
    line: int
    column: int
    value: object = None

    @property
    def keyword(self) -> str | None:
        if self.kind == "word" and self.text.upper() in KEYWORDS:
            return self.text.upper()
        return None


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        column = pos - line_start + 1
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, column)
        kind = m.lastgroup
        raw = m.group()
        if kind == "string":
            tokens.append(Token("string", raw, line, column, unescape(raw[1:-1])))
        elif kind == "var":
            tokens.append(Token("var", raw, line, column, raw[1:]))
        elif kind == "int":
            tokens.append(Token("int", raw, line, column, int(raw)))
        elif kind == "word":
            if raw.isdigit():
                tokens.append(Token("int", raw, line, column, int(raw)))
            else:
                tokens.append(Token("word", raw, line, column, raw))
        elif kind == "op":
            tokens.append(Token("op", raw, line, column, raw))
        newlines = raw.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + raw.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
