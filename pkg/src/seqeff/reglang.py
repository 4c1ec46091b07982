"""Regular languages over a finite alphabet.

Values are interned regular expressions built through smart constructors that
normalize modulo associativity, commutativity and idempotence of union.  That
normal form makes Brzozowski derivatives finite, so membership, inclusion and
equality are decided exactly by exploring derivative pairs.

A value built with the constructors here denotes the empty language iff it is
the ``EMPTY`` node.
"""

from __future__ import annotations

import re
from collections import deque
from collections.abc import Iterable, Sequence

__all__ = [
    "RegLang",
    "EMPTY",
    "EPS",
    "sym",
    "cat",
    "alt",
    "star",
    "lang_concat",
    "lang_union",
    "lang_star",
    "lang_includes",
    "lang_equal",
    "lang_member",
    "lang_prefix_member",
    "counterexample",
    "parse_regex",
    "RegexSyntaxError",
]


class RegLang:
    """An interned regular expression node. Compare with ``is`` or ``==``."""

    __slots__ = ("kind", "name", "kids", "_text", "_nullable", "_derivs", "_syms", "__weakref__")

    def __init__(self, kind: str, name: str | None, kids: tuple[RegLang, ...]):
        self.kind = kind
        self.name = name
        self.kids = kids
        self._text: str | None = None
        self._nullable: bool | None = None
        self._derivs: dict[str, RegLang] = {}
        self._syms: frozenset[str] | None = None

    def __repr__(self) -> str:
        return f"RegLang({self.text!r})"

    def __str__(self) -> str:
        return self.text

    def __reduce__(self):
        return (parse_regex, (self.text,))

    @property
    def text(self) -> str:
        if self._text is None:
            self._text = _render(self)
        return self._text

    @property
    def nullable(self) -> bool:
        if self._nullable is None:
            k = self.kind
            if k in ("eps", "star"):
                v = True
            elif k in ("empty", "sym"):
                v = False
            elif k == "alt":
                v = any(c.nullable for c in self.kids)
            else:
                v = all(c.nullable for c in self.kids)
            self._nullable = v
        return self._nullable

    @property
    def symbols(self) -> frozenset[str]:
        if self._syms is None:
            if self.kind == "sym":
                self._syms = frozenset((self.name,))
            else:
                out: set[str] = set()
                for c in self.kids:
                    out |= c.symbols
                self._syms = frozenset(out)
        return self._syms

    @property
    def is_empty(self) -> bool:
        return self is EMPTY

    def deriv(self, a: str) -> RegLang:
        d = self._derivs.get(a)
        if d is None:
            d = _deriv(self, a)
            self._derivs[a] = d
        return d


_TABLE: dict[tuple, RegLang] = {}


def _intern(kind: str, name: str | None, kids: tuple[RegLang, ...]) -> RegLang:
    key = (kind, name, tuple(id(k) for k in kids))
    node = _TABLE.get(key)
    if node is None:
        node = RegLang(kind, name, kids)
        _TABLE[key] = node
    return node


EMPTY = _intern("empty", None, ())
EPS = _intern("eps", None, ())

_SYM_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def sym(name: str) -> RegLang:
    if not _SYM_RE.match(name):
        raise ValueError(f"bad symbol name {name!r}")
    return _intern("sym", name, ())


def cat(*parts: RegLang) -> RegLang:
    flat: list[RegLang] = []
    for p in parts:
        if p is EMPTY:
            return EMPTY
        if p is EPS:
            continue
        if p.kind == "cat":
            flat.extend(p.kids)
        else:
            flat.append(p)
    if not flat:
        return EPS
    if len(flat) == 1:
        return flat[0]
    return _intern("cat", None, tuple(flat))


def alt(*parts: RegLang) -> RegLang:
    seen: dict[int, RegLang] = {}
    for p in parts:
        if p is EMPTY:
            continue
        for q in (p.kids if p.kind == "alt" else (p,)):
            seen[id(q)] = q
    items = list(seen.values())
    if EPS in items and any(q is not EPS and q.nullable for q in items):
        items.remove(EPS)
    if not items:
        return EMPTY
    if len(items) == 1:
        return items[0]
    items.sort(key=lambda q: q.text)
    return _intern("alt", None, tuple(items))


def star(r: RegLang) -> RegLang:
    if r is EMPTY or r is EPS:
        return EPS
    if r.kind == "star":
        return r
    if r.kind == "alt" and EPS in r.kids:
        r = alt(*(k for k in r.kids if k is not EPS))
    return _intern("star", None, (r,))


def _deriv(r: RegLang, a: str) -> RegLang:
    k = r.kind
    if k in ("empty", "eps"):
        return EMPTY
    if k == "sym":
        return EPS if r.name == a else EMPTY
    if k == "alt":
        return alt(*(c.deriv(a) for c in r.kids))
    if k == "star":
        return cat(r.kids[0].deriv(a), r)
    head, rest = r.kids[0], cat(*r.kids[1:])
    d = cat(head.deriv(a), rest)
    if head.nullable:
        d = alt(d, rest.deriv(a))
    return d


def _render(r: RegLang) -> str:
    k = r.kind
    if k == "empty":
        return "%0"
    if k == "eps":
        return "%e"
    if k == "sym":
        return r.name  # type: ignore[return-value]
    if k == "alt":
        return " + ".join(c.text for c in r.kids)
    if k == "cat":
        return ".".join(f"({c.text})" if c.kind == "alt" else c.text for c in r.kids)
    inner = r.kids[0]
    body = inner.text if inner.kind == "sym" else f"({inner.text})"
    return body + "*"


# decision procedures

_INCL_CACHE: dict[tuple[int, int], tuple[str, ...] | None] = {}


def counterexample(sub: RegLang, sup: RegLang) -> tuple[str, ...] | None:
    """A shortest word of ``sub`` missing from ``sup``, or None."""
    key = (id(sub), id(sup))
    if key in _INCL_CACHE:
        return _INCL_CACHE[key]
    alphabet = sorted(sub.symbols)
    start = (sub, sup)
    seen = {(id(sub), id(sup))}
    queue: deque[tuple[tuple[RegLang, RegLang], tuple[str, ...]]] = deque([(start, ())])
    found: tuple[str, ...] | None = None
    while queue:
        (x, y), word = queue.popleft()
        if x.nullable and not y.nullable:
            found = word
            break
        if x is y:
            continue
        for a in alphabet:
            dx = x.deriv(a)
            if dx is EMPTY:
                continue
            dy = y.deriv(a)
            pair = (id(dx), id(dy))
            if pair not in seen:
                seen.add(pair)
                queue.append(((dx, dy), word + (a,)))
    _INCL_CACHE[key] = found
    return found


def lang_includes(sub: RegLang, sup: RegLang) -> bool:
    if sub is sup or sub is EMPTY:
        return True
    return counterexample(sub, sup) is None


def lang_equal(a: RegLang, b: RegLang) -> bool:
    return a is b or (lang_includes(a, b) and lang_includes(b, a))


def _word(w: str | Sequence[str]) -> Sequence[str]:
    return list(w) if isinstance(w, str) else w


def lang_member(w: str | Sequence[str], r: RegLang) -> bool:
    """Membership; a plain string is read one character per symbol."""
    for a in _word(w):
        r = r.deriv(a)
        if r is EMPTY:
            return False
    return r.nullable


def lang_prefix_member(w: str | Sequence[str], r: RegLang) -> bool:
    """True iff ``w`` extends to some word of ``r``."""
    for a in _word(w):
        r = r.deriv(a)
        if r is EMPTY:
            return False
    return True


def lang_concat(a: RegLang, b: RegLang) -> RegLang:
    return cat(a, b)


def lang_union(a: RegLang, b: RegLang) -> RegLang:
    return alt(a, b)


def lang_star(a: RegLang) -> RegLang:
    return star(a)


# surface syntax

class RegexSyntaxError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(%e|%0)|([A-Za-z_][A-Za-z0-9_]*)|([+.*()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise RegexSyntaxError(f"unexpected character {text[pos]!r} at offset {pos}")
        if m.group(1):
            out.append(("const", m.group(1), m.start(1)))
        elif m.group(2):
            out.append(("sym", m.group(2), m.start(2)))
        else:
            out.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    return out


def parse_regex(text: str, alphabet: Iterable[str] | None = None) -> RegLang:
    """Parse ``%e``, symbols, ``+``, ``.``, postfix ``*`` and parentheses."""
    toks = _tokenize(text)
    allowed = None if alphabet is None else frozenset(alphabet)
    i = 0

    def peek() -> tuple[str, str, int] | None:
        return toks[i] if i < len(toks) else None

    def take(op: str) -> None:
        nonlocal i
        t = peek()
        if t is None or t[1] != op:
            where = "end of input" if t is None else f"offset {t[2]}"
            raise RegexSyntaxError(f"expected {op!r} at {where}")
        i += 1

    def union() -> RegLang:
        parts = [concat()]
        while (t := peek()) and t[1] == "+":
            take("+")
            parts.append(concat())
        return alt(*parts)

    def concat() -> RegLang:
        parts = [postfix()]
        while (t := peek()) and t[1] == ".":
            take(".")
            parts.append(postfix())
        return cat(*parts)

    def postfix() -> RegLang:
        r = atom()
        while (t := peek()) and t[1] == "*":
            take("*")
            r = star(r)
        return r

    def atom() -> RegLang:
        nonlocal i
        t = peek()
        if t is None:
            raise RegexSyntaxError("unexpected end of regex")
        kind, val, off = t
        if kind == "const":
            i += 1
            return EPS if val == "%e" else EMPTY
        if kind == "sym":
            if allowed is not None and val not in allowed:
                raise RegexSyntaxError(f"symbol {val!r} at offset {off} is not in the alphabet")
            i += 1
            return sym(val)
        if val == "(":
            i += 1
            r = union()
            take(")")
            return r
        raise RegexSyntaxError(f"unexpected {val!r} at offset {off}")

    if not toks:
        raise RegexSyntaxError("empty regex")
    r = union()
    if i != len(toks):
        raise RegexSyntaxError(f"trailing input at offset {toks[i][2]}")
    return r
