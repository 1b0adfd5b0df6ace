"""Tokenizer for Ark source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ArkSyntaxError, Span


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, NUMBER, OP, EOF
    text: str
    start: int
    end: int
    span: Span

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.span})"


_NUMBER = r"(?:\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)"
_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
# longest operators first
_OPS = ["->", "<=", ">=", "==", "!=", "**", "&&", "||",
        "(", ")", "{", "}", "[", "]", ",", ":", ".", "<", ">", "=", "+", "-", "*", "/", "^", "!", ";"]

_MASTER = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>#[^\n]*)|(?P<NUMBER>" + _NUMBER + r")|(?P<IDENT>" + _IDENT
    + r")|(?P<OP>" + "|".join(re.escape(op) for op in _OPS) + r")"
)


class _LineIndex:
    def __init__(self, text: str):
        self.starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self.starts.append(i + 1)

    def position(self, offset: int) -> tuple[int, int]:
        lo, hi = 0, len(self.starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.starts[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, offset - self.starts[lo] + 1

    def span(self, start: int, end: int) -> Span:
        l0, c0 = self.position(start)
        l1, c1 = self.position(end)
        return Span(l0, c0, l1, c1)


def tokenize(text: str) -> list[Token]:
    index = _LineIndex(text)
    tokens: list[Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _MASTER.match(text, pos)
        if m is None:
            raise ArkSyntaxError(f"unexpected character {text[pos]!r}", index.span(pos, pos + 1))
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), m.start(), m.end(), index.span(m.start(), m.end())))
        pos = m.end()
    tokens.append(Token("EOF", "", n, n, index.span(n, n)))
    return tokens
