"""S-expression reader shared by the program, type and effect parsers."""

from __future__ import annotations

from dataclasses import dataclass


class ParseError(ValueError):
    def __init__(self, message: str, text: str = "", pos: int | None = None):
        self.message = message
        self.pos = pos
        if pos is not None and text:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            self.line, self.col = line, col
            message = f"{line}:{col}: {message}"
        else:
            self.line = self.col = None
        super().__init__(message)


@dataclass(frozen=True)
class Atom:
    text: str
    pos: int


@dataclass(frozen=True)
class Brace:
    """A raw ``{...}`` block, kept as text for the effect parser."""

    text: str
    pos: int


@dataclass(frozen=True)
class SList:
    items: tuple
    pos: int
    end: int


Datum = Atom | Brace | SList

_STOP = set("(){}[],|;") | {" ", "\t", "\n", "\r"}


def skip_space(text: str, pos: int) -> int:
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
        elif ch == ";":
            while pos < n and text[pos] != "\n":
                pos += 1
        else:
            break
    return pos


def match_brace(text: str, pos: int) -> int:
    """Index just past the brace that closes the one at ``pos``."""
    depth = 0
    for i in range(pos, len(text)):
        ch = text[i]
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i + 1
    raise ParseError("unclosed '{'", text, pos)


def read_datum(text: str, pos: int) -> tuple[Datum, int]:
    pos = skip_space(text, pos)
    if pos >= len(text):
        raise ParseError("unexpected end of input", text, pos)
    ch = text[pos]
    if ch == "(":
        items = []
        start = pos
        pos += 1
        while True:
            pos = skip_space(text, pos)
            if pos >= len(text):
                raise ParseError("unclosed '('", text, start)
            if text[pos] == ")":
                return SList(tuple(items), start, pos + 1), pos + 1
            d, pos = read_datum(text, pos)
            items.append(d)
    if ch == ")":
        raise ParseError("unexpected ')'", text, pos)
    if ch == "{":
        end = match_brace(text, pos)
        return Brace(text[pos:end], pos), end
    if text.startswith("_|_", pos):
        return Atom("_|_", pos), pos + 3
    start = pos
    while pos < len(text) and text[pos] not in _STOP:
        pos += 1
    if pos == start:
        raise ParseError(f"unexpected {ch!r}", text, pos)
    return Atom(text[start:pos], start), pos


def read_all(text: str) -> list[Datum]:
    out = []
    pos = skip_space(text, 0)
    while pos < len(text):
        d, pos = read_datum(text, pos)
        out.append(d)
        pos = skip_space(text, pos)
    return out
