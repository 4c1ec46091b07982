"""Evaluation-context frames. A context is a tuple of frames, innermost first."""

from __future__ import annotations

from dataclasses import dataclass

from ..conteffect import CEff
from . import syntax as S


@dataclass(frozen=True)
class FAppFn:
    arg: S.Expr

    def fill(self, e):
        return S.App(e, self.arg)


@dataclass(frozen=True)
class FAppArg:
    fn: S.Expr

    def fill(self, e):
        return S.App(self.fn, e)


@dataclass(frozen=True)
class FIf:
    then: S.Expr
    other: S.Expr

    def fill(self, e):
        return S.If(e, self.then, self.other)


@dataclass(frozen=True)
class FSeq:
    second: S.Expr

    def fill(self, e):
        return S.Seq(e, self.second)


@dataclass(frozen=True)
class FLet:
    name: str
    body: S.Expr

    def fill(self, e):
        return S.Let(self.name, e, self.body)


@dataclass(frozen=True)
class FPrompt:
    tag: str
    handler: S.Expr

    def fill(self, e):
        return S.Prompt(self.tag, e, self.handler)


@dataclass(frozen=True)
class FAbort:
    tag: str
    ty: S.Ty

    def fill(self, e):
        return S.AbortE(self.tag, self.ty, e)


@dataclass(frozen=True)
class FCapture:
    tag: str
    predicted: CEff
    res: S.Ty
    compositional: bool

    def fill(self, e):
        cls = S.CallComp if self.compositional else S.CallCC
        return cls(self.tag, self.predicted, self.res, e)


@dataclass(frozen=True)
class FPrim:
    name: str
    before: tuple
    after: tuple

    def fill(self, e):
        return S.PrimApp(self.name, self.before + (e,) + self.after)


@dataclass(frozen=True)
class FInj:
    right: bool
    other: S.Ty

    def fill(self, e):
        return S.Inj(self.right, self.other, e)


@dataclass(frozen=True)
class FSome:
    def fill(self, e):
        return S.SomeE(e)


@dataclass(frozen=True)
class FCase:
    lvar: str
    lbody: S.Expr
    rvar: str
    rbody: S.Expr

    def fill(self, e):
        return S.Case(e, self.lvar, self.lbody, self.rvar, self.rbody)


@dataclass(frozen=True)
class FCaseOpt:
    none: S.Expr
    var: str
    some: S.Expr

    def fill(self, e):
        return S.CaseOpt(e, self.none, self.var, self.some)


Frame = (
    FAppFn | FAppArg | FIf | FSeq | FLet | FPrompt | FAbort | FCapture | FPrim | FInj | FSome | FCase | FCaseOpt
)


def plug(ctx: tuple, e: S.Expr) -> S.Expr:
    for f in ctx:
        e = f.fill(e)
    return e
