"""Effect quantales with iteration.

An instance supplies the domain operations; the base class handles the error
element, which is absorbing for sequencing and top for the order.
"""

from __future__ import annotations

import random
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from typing import Any

from . import reglang as rl

__all__ = [
    "ERR",
    "Err",
    "Quantale",
    "TraceQuantale",
    "LabelQuantale",
    "LawResult",
    "LawReport",
    "law_suite",
    "make_quantale",
]


class Err:
    """The error element. There is exactly one."""

    _inst: Err | None = None

    def __new__(cls) -> Err:
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "ERR"

    def __reduce__(self):
        return (Err, ())


ERR = Err()


class Quantale(ABC):
    name: str = "abstract"

    @property
    @abstractmethod
    def unit(self) -> Any: ...

    @abstractmethod
    def _seq(self, x: Any, y: Any) -> Any: ...

    @abstractmethod
    def _join(self, x: Any, y: Any) -> Any: ...

    @abstractmethod
    def _leq(self, x: Any, y: Any) -> bool: ...

    @abstractmethod
    def _iterate(self, x: Any) -> Any: ...

    @abstractmethod
    def _render(self, x: Any) -> str: ...

    @abstractmethod
    def _parse(self, text: str) -> Any: ...

    @abstractmethod
    def sample(self, rng: random.Random) -> Any:
        """A random non-error element."""

    @abstractmethod
    def event(self, symbol: str) -> Any:
        """The effect of emitting one event."""

    def is_top(self, x: Any) -> bool:
        return x is ERR

    def seq(self, x: Any, y: Any) -> Any:
        if x is ERR or y is ERR:
            return ERR
        return self._seq(x, y)

    def join(self, x: Any, y: Any) -> Any:
        if x is ERR or y is ERR:
            return ERR
        return self._join(x, y)

    def leq(self, x: Any, y: Any) -> bool:
        if y is ERR:
            return True
        if x is ERR:
            return False
        return self._leq(x, y)

    def equal(self, x: Any, y: Any) -> bool:
        return self.leq(x, y) and self.leq(y, x)

    def iterate(self, x: Any) -> Any:
        if x is ERR:
            return ERR
        return self._iterate(x)

    def render(self, x: Any) -> str:
        return "ERR" if x is ERR else self._render(x)

    def parse(self, text: str) -> Any:
        text = text.strip()
        return ERR if text == "ERR" else self._parse(text)

    def join_all(self, xs: Iterable[Any]) -> Any | None:
        acc = None
        for x in xs:
            acc = x if acc is None else self.join(acc, x)
        return acc


class TraceQuantale(Quantale):
    """Non-empty regular languages of event traces, plus ERR."""

    name = "trace"

    def __init__(self, alphabet: Iterable[str]):
        self.alphabet = tuple(dict.fromkeys(alphabet))
        if not self.alphabet:
            raise ValueError("the trace quantale needs a non-empty alphabet")
        for a in self.alphabet:
            rl.sym(a)

    @property
    def unit(self) -> rl.RegLang:
        return rl.EPS

    def _seq(self, x, y):
        return rl.cat(x, y)

    def _join(self, x, y):
        return rl.alt(x, y)

    def _leq(self, x, y):
        return rl.lang_includes(x, y)

    def _iterate(self, x):
        return rl.star(x)

    def _render(self, x):
        return x.text

    def _parse(self, text):
        r = rl.parse_regex(text, self.alphabet)
        if r.is_empty:
            raise rl.RegexSyntaxError("trace effects denote non-empty languages")
        return r

    def event(self, symbol):
        if symbol not in self.alphabet:
            raise ValueError(f"event {symbol!r} is not in the alphabet")
        return rl.sym(symbol)

    def sample(self, rng, size: int = 5):
        return _random_regex(rng, self.alphabet, size)


def _random_regex(rng: random.Random, alphabet: tuple[str, ...], size: int) -> rl.RegLang:
    if size <= 1:
        return rl.EPS if rng.random() < 0.15 else rl.sym(rng.choice(alphabet))
    k = rng.random()
    if k < 0.2:
        return rl.star(_random_regex(rng, alphabet, size - 1))
    left = rng.randint(1, size - 1)
    a = _random_regex(rng, alphabet, left)
    b = _random_regex(rng, alphabet, size - left)
    return rl.alt(a, b) if k < 0.55 else rl.cat(a, b)


class LabelQuantale(Quantale):
    """Finite label sets: unit is empty, sequencing and join are both union."""

    name = "labels"

    def __init__(self, universe: Iterable[str]):
        self.universe = tuple(dict.fromkeys(universe))
        if not self.universe:
            raise ValueError("the label quantale needs a non-empty label universe")

    @property
    def unit(self) -> frozenset[str]:
        return frozenset()

    def _seq(self, x, y):
        return x | y

    def _join(self, x, y):
        return x | y

    def _leq(self, x, y):
        return x <= y

    def _iterate(self, x):
        return x

    def _render(self, x):
        return "{" + ",".join(sorted(x)) + "}"

    def _parse(self, text):
        if not (text.startswith("{") and text.endswith("}")):
            raise ValueError(f"label set must be written {{l1,l2,...}}: {text!r}")
        items = [t.strip() for t in text[1:-1].split(",") if t.strip()]
        for t in items:
            if t not in self.universe:
                raise ValueError(f"label {t!r} is not in the label universe")
        return frozenset(items)

    def event(self, symbol):
        if symbol not in self.universe:
            raise ValueError(f"label {symbol!r} is not in the label universe")
        return frozenset((symbol,))

    def sample(self, rng, size: int = 3):
        return frozenset(rng.sample(self.universe, rng.randint(0, min(size, len(self.universe)))))


def make_quantale(name: str, symbols: Iterable[str]) -> Quantale:
    if name == "trace":
        return TraceQuantale(symbols)
    if name == "labels":
        return LabelQuantale(symbols)
    raise ValueError(f"unknown quantale {name!r} (expected trace or labels)")


# law suite

@dataclass
class LawResult:
    law: str
    checked: int = 0
    failures: int = 0
    witness: tuple | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class LawReport:
    instance: str
    samples: int
    results: list[LawResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failed(self) -> list[LawResult]:
        return [r for r in self.results if not r.passed]

    def lines(self, render: Callable[[Any], str] = repr) -> list[str]:
        out = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            line = f"{status}  {r.law}  ({r.checked} cases, {r.failures} failures)"
            if r.witness is not None:
                line += "  witness: " + ", ".join(render(w) for w in r.witness)
            out.append(line)
        return out


def _laws(q: Quantale) -> list[tuple[str, int, Callable[..., bool]]]:
    s, j, le, eq, it, I = q.seq, q.join, q.leq, q.equal, q.iterate, q.unit
    return [
        ("join commutative", 2, lambda x, y: eq(j(x, y), j(y, x))),
        ("join associative", 3, lambda x, y, z: eq(j(x, j(y, z)), j(j(x, y), z))),
        ("join idempotent", 1, lambda x: eq(j(x, x), x)),
        ("top absorbs join", 1, lambda x: q.is_top(j(x, ERR))),
        ("seq associative", 3, lambda x, y, z: eq(s(x, s(y, z)), s(s(x, y), z))),
        ("seq left unit", 1, lambda x: eq(s(I, x), x)),
        ("seq right unit", 1, lambda x: eq(s(x, I), x)),
        ("top nilpotent", 1, lambda x: q.is_top(s(x, ERR)) and q.is_top(s(ERR, x))),
        ("seq distributes left", 3, lambda x, y, z: eq(s(x, j(y, z)), j(s(x, y), s(x, z)))),
        ("seq distributes right", 3, lambda x, y, z: eq(s(j(x, y), z), j(s(x, z), s(y, z)))),
        ("order is the join order", 2, lambda x, y: le(x, y) == eq(j(x, y), y)),
        ("order reflexive", 1, lambda x: le(x, x)),
        ("order transitive", 3, lambda x, y, z: not (le(x, j(x, y)) and le(j(x, y), j(j(x, y), z)))
         or le(x, j(j(x, y), z))),
        ("order antisymmetric", 2, lambda x, y: not (le(x, y) and le(y, x)) or eq(x, y)),
        ("seq monotone", 3, lambda x, y, z: le(s(x, z), s(j(x, y), z)) and le(s(z, x), s(z, j(x, y)))),
        ("iterate extensive", 1, lambda x: le(x, it(x))),
        ("iterate idempotent", 1, lambda x: eq(it(it(x)), it(x))),
        ("iterate monotone", 2, lambda x, y: le(it(x), it(j(x, y)))),
        ("iterate foldable", 1, lambda x: le(s(x, it(x)), it(x)) and le(s(it(x), x), it(x))),
        ("iterate possibly empty", 1, lambda x: le(I, it(x))),
        ("iterate subidempotent", 1, lambda x: le(s(it(x), it(x)), it(x))),
        ("iterate of join bound", 2, lambda x, y: le(j(it(x), it(y)), it(j(x, y)))),
    ]


def law_suite(
    q: Quantale,
    samples: Callable[[random.Random], Any] | None = None,
    n: int = 200,
    seed: int = 0,
) -> LawReport:
    """Check every algebraic law on ``n`` random draws and record the first witness."""
    rng = random.Random(seed)
    base = samples or q.sample

    def draw(r: random.Random) -> Any:
        return ERR if r.random() < 0.04 else base(r)

    report = LawReport(q.name, n)
    for law, arity, check in _laws(q):
        res = LawResult(law)
        for _ in range(n):
            args = tuple(draw(rng) for _ in range(arity))
            res.checked += 1
            try:
                ok = check(*args)
            except Exception:
                ok = False
            if not ok:
                res.failures += 1
                if res.witness is None:
                    res.witness = args
        report.results.append(res)
    return report
