"""One language instance: a quantale plus the effect algebra, subtyping and syntax bound to it."""

from __future__ import annotations

from collections.abc import Iterable

from ..conteffect import CEff, EffectAlgebra
from ..quantale import Quantale, make_quantale
from . import syntax as S
from .parser import Parser
from .printer import Printer
from .subtype import Subtyper


class Language:
    def __init__(self, q: Quantale):
        self.q = q
        self.sub = Subtyper()
        self.alg = EffectAlgebra(q, annot_eq=self.sub.annot_eq, render_annot=self.show_ty)
        self.sub.alg = self.alg
        self.printer = Printer(self.alg.render, lambda: self.alg.unit)

    @classmethod
    def named(cls, quantale: str, symbols: Iterable[str]) -> Language:
        return cls(make_quantale(quantale, symbols))

    def parse(self, text: str, allow_reserved: bool = False) -> S.Expr:
        return Parser(self, allow_reserved).program(text)

    def parse_type(self, text: str) -> S.Ty:
        return Parser(self, True).type_text(text)

    def parse_effect(self, text: str) -> CEff:
        return Parser(self, True).effect_text(text)

    def show_ty(self, t: S.Ty) -> str:
        return self.printer.ty(t)

    def show_expr(self, e: S.Expr) -> str:
        return self.printer.expr(e)

    def show_eff(self, x: CEff) -> str:
        return self.alg.render(x)
