"""Minimal s-expression reader with source positions.

Shared by the workload, term, and pattern parsers. Comments run from `;`
to end of line. Atoms are ints where possible, otherwise bare strings.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError


@dataclass(frozen=True)
class Atom:
    value: int | str
    line: int
    col: int


@dataclass(frozen=True)
class SList:
    items: tuple
    line: int
    col: int


def _skip_ws(text: str, i: int, line: int, col: int):
    while i < len(text):
        c = text[i]
        if c == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif c == "\n":
            i, line, col = i + 1, line + 1, 1
        elif c.isspace():
            i, col = i + 1, col + 1
        else:
            break
    return i, line, col


def _read(text: str, i: int, line: int, col: int):
    i, line, col = _skip_ws(text, i, line, col)
    if i >= len(text):
        raise ParseError("unexpected end of input", line, col, expected="expression")
    c = text[i]
    if c == "(":
        open_line, open_col = line, col
        i, col = i + 1, col + 1
        items = []
        while True:
            i, line, col = _skip_ws(text, i, line, col)
            if i >= len(text):
                raise ParseError("unclosed list", open_line, open_col, expected="')'")
            if text[i] == ")":
                return SList(tuple(items), open_line, open_col), i + 1, line, col + 1
            item, i, line, col = _read(text, i, line, col)
            items.append(item)
    if c == ")":
        raise ParseError("unbalanced ')'", line, col)
    start, start_col = i, col
    while i < len(text) and not text[i].isspace() and text[i] not in "();":
        i, col = i + 1, col + 1
    tok = text[start:i]
    try:
        value: int | str = int(tok)
    except ValueError:
        value = tok
    return Atom(value, line, start_col), i, line, col


def read_one(text: str) -> Atom | SList:
    """Read exactly one expression; trailing non-whitespace is an error."""
    expr, i, line, col = _read(text, 0, 1, 1)
    i, line, col = _skip_ws(text, i, line, col)
    if i < len(text):
        raise ParseError("trailing input after expression", line, col)
    return expr


def expect_list(expr, what: str) -> SList:
    if not isinstance(expr, SList):
        raise ParseError(f"expected {what}", expr.line, expr.col, expected="'('")
    return expr


def expect_symbol(expr, what: str) -> str:
    if not isinstance(expr, Atom) or not isinstance(expr.value, str):
        raise ParseError(f"expected {what}", expr.line, expr.col, expected="a name")
    return expr.value


def expect_int(expr, what: str) -> int:
    if not isinstance(expr, Atom) or not isinstance(expr.value, int):
        raise ParseError(f"expected {what}", expr.line, expr.col, expected="an integer")
    return expr.value
