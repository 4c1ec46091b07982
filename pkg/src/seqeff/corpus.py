"""Random well-typed closed programs for the soundness audit.

Candidates are drawn from a small grammar of unit-typed statements and kept
only if they typecheck after expansion.  Captures get their predictions by
typing the rest of the prompt body, so the guess is exact.
"""

from __future__ import annotations

import random
from collections.abc import Iterator
from dataclasses import dataclass, field

from .langcore import Language
from .langcore.expand import ExpansionError, Expander
from .typechecker import Checker, TypeCheckError


@dataclass
class Gen:
    lang: Language
    rng: random.Random
    symbols: tuple[str, ...]
    tags: list[str] = field(default_factory=list)
    exns: list[str] = field(default_factory=list)
    counter: int = 0

    def fresh(self, base: str) -> str:
        self.counter += 1
        return f"{base}{self.counter}"

    def cond(self) -> str:
        return self.rng.choice(["#t", "#f", "(if #t #f #t)"])

    def stmt(self, size: int) -> str:
        rng = self.rng
        if size <= 1:
            return self.leaf()
        kinds = ["seq", "seq", "if", "prompt", "let", "try", "capture", "while", "cell"]
        if size >= 3:
            kinds.append("loop")
        kind = rng.choice(kinds)
        a = max(1, size // 2)
        b = max(1, size - a - 1)
        if kind == "seq":
            return f"(seq {self.stmt(a)} {self.stmt(b)})"
        if kind == "if":
            return f"(if {self.cond()} {self.stmt(a)} {self.stmt(b)})"
        if kind == "prompt":
            tag = self.fresh("p")
            self.tags.append(tag)
            body = self.stmt(size - 2)
            self.tags.pop()
            return f"(prompt {tag} {body} (lambda (x : unit) {self.leaf()}))"
        if kind == "try":
            exn = self.fresh("E")
            self.exns.append(exn)
            body = self.stmt(size - 2)
            self.exns.pop()
            return f"(try {body} (catch {exn} (lambda (x : unit) {self.leaf()})))"
        if kind == "let":
            f = self.fresh("f")
            return f"(let ({f} (lambda (x : unit) {self.stmt(a)})) (seq ({f} #u) ({f} #u)))"
        if kind == "loop":
            return f"(loop {self.stmt(size - 2)})"
        if kind == "while":
            r = self.fresh("r")
            return f"(let ({r} (ref #t)) (while (get {r}) (seq {self.stmt(size - 2)} (set {r} #f))))"
        if kind == "cell":
            r = self.fresh("r")
            return f"(let ({r} (ref {self.cond()})) (if (get {r}) {self.stmt(a)} {self.stmt(b)}))"
        return self.capture(size)

    def leaf(self) -> str:
        rng = self.rng
        k = rng.random()
        if k < 0.12 and self.tags:
            return f"(abort {rng.choice(self.tags)} unit #u)"
        if k < 0.22 and self.exns:
            return f"(throw {rng.choice(self.exns)} #u)"
        if k < 0.3:
            return "#u"
        return f"(event {rng.choice(self.symbols)})"

    def capture(self, size: int) -> str:
        # (prompt t (seq pre (seq (callcc ...) rest)) h); the prediction is rest's effect
        tag = self.fresh("k")
        self.tags.append(tag)
        pre = self.stmt(max(1, size // 3))
        rest = self.stmt(max(1, size // 3))
        self.tags.pop()
        self.tags.append(tag)
        use = self.rng.choice(["(k #u)", f"(seq {self.leaf()} (k #u))", "#u", f"(if {self.cond()} (k #u) {self.leaf()})"])
        self.tags.pop()
        return f"(prompt {tag} (seq {pre} (seq (callcc {tag} @PRED:{rest}@ unit (lambda (k : (cont {tag} unit @PRED:{rest}@ unit)) {use})) {rest})) (lambda (x : unit) {self.leaf()}))"


def _fill_predictions(src: str, lang: Language, checker: Checker, expander: Expander) -> str:
    # innermost placeholders first, since a rest part may itself contain a capture
    while "@PRED:" in src:
        start = src.rfind("@PRED:")
        end = src.index("@", start + 6)
        rest = src[start + 6 : end]
        eff = checker.infer(expander.expand(lang.parse(rest, allow_reserved=True))).effect
        text = lang.show_eff(eff)
        src = src.replace(f"@PRED:{rest}@", text)
    return src


def generate(
    lang: Language,
    count: int,
    seed: int = 0,
    max_size: int = 9,
    max_tries: int | None = None,
) -> Iterator[str]:
    """Yield ``count`` distinct source programs that expand and typecheck."""
    checker = Checker(lang)
    expander = Expander(checker)
    rng = random.Random(seed)
    symbols = tuple(lang.q.alphabet if hasattr(lang.q, "alphabet") else lang.q.universe)
    seen: set[str] = set()
    tries = 0
    limit = max_tries if max_tries is not None else count * 50
    while len(seen) < count and tries < limit:
        tries += 1
        g = Gen(lang, rng, symbols)
        src = g.stmt(rng.randint(1, max_size))
        try:
            src = _fill_predictions(src, lang, checker, expander)
            checker.infer(expander.expand(lang.parse(src)))
        except (TypeCheckError, ExpansionError):
            continue
        if src not in seen:
            seen.add(src)
            yield src
