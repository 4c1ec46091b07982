"""Types and expressions of the core language."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

from ..conteffect import CEff, _Hashed


# types


@dataclass(frozen=True, eq=False)
class TUnit(_Hashed):
    pass


@dataclass(frozen=True, eq=False)
class TBool(_Hashed):
    pass


@dataclass(frozen=True, eq=False)
class TAny(_Hashed):
    """Result type of expressions that never return; below every type."""


@dataclass(frozen=True, eq=False)
class TPrim(_Hashed):
    name: str


@dataclass(frozen=True, eq=False)
class TFun(_Hashed):
    arg: Ty
    latent: CEff
    res: Ty


@dataclass(frozen=True, eq=False)
class TCont(_Hashed):
    tag: str
    arg: Ty
    latent: CEff
    res: Ty


@dataclass(frozen=True, eq=False)
class TComp(_Hashed):
    arg: Ty
    latent: CEff
    res: Ty


@dataclass(frozen=True, eq=False)
class TMu(_Hashed):
    var: str
    body: Ty


@dataclass(frozen=True, eq=False)
class TVar(_Hashed):
    var: str


@dataclass(frozen=True, eq=False)
class TOption(_Hashed):
    elem: Ty


@dataclass(frozen=True, eq=False)
class TSum(_Hashed):
    left: Ty
    right: Ty


@dataclass(frozen=True, eq=False)
class TRef(_Hashed):
    elem: Ty


Ty = Union[TUnit, TBool, TAny, TPrim, TFun, TCont, TComp, TMu, TVar, TOption, TSum, TRef]

UNIT = TUnit()
BOOL = TBool()
ANY = TAny()
NAT = TPrim("nat")


# expressions

Span = tuple[int, int] | None


@dataclass(frozen=True)
class Var:
    name: str
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Lit:
    """``#u``, ``#t``, ``#f`` or a natural number."""

    value: Any
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Lam:
    param: str
    ty: Ty
    body: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class App:
    fn: Expr
    arg: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Expr
    other: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Prompt:
    tag: str
    body: Expr
    handler: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CallCC:
    tag: str
    predicted: CEff
    res: Ty
    fn: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CallComp:
    tag: str
    predicted: CEff
    res: Ty
    fn: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AbortE:
    tag: str
    ty: Ty
    arg: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Event:
    symbol: str
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class PrimApp:
    """``ref``, ``get`` and ``set`` on mutable cells."""

    name: str
    args: tuple[Expr, ...]
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Let:
    name: str
    bound: Expr
    body: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq:
    first: Expr
    second: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Inj:
    """``(inl T e)`` / ``(inr T e)``; ``other`` is the type of the missing side."""

    right: bool
    other: Ty
    arg: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Case:
    scrut: Expr
    lvar: str
    lbody: Expr
    rvar: str
    rbody: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SomeE:
    arg: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class NoneE:
    elem: Ty
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CaseOpt:
    scrut: Expr
    none: Expr
    var: str
    some: Expr
    span: Span = field(default=None, compare=False, repr=False)


# runtime-only forms


@dataclass(frozen=True)
class ContV:
    """A captured continuation up to a prompt for ``tag``."""

    tag: str
    arg: Ty
    predicted: CEff
    res: Ty
    ctx: tuple  # frames, innermost first
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CompV:
    tag: str
    arg: Ty
    predicted: CEff
    res: Ty
    ctx: tuple
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Loc:
    addr: int
    elem: Ty
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Hole:
    """A placeholder with a fixed type and effect, used for context typing."""

    ty: Ty
    eff: CEff
    span: Span = field(default=None, compare=False, repr=False)


# macro forms


@dataclass(frozen=True)
class LoopM:
    body: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class WhileM:
    cond: Expr
    body: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TryCatchM:
    body: Expr
    exn: str
    handler: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ThrowM:
    exn: str
    arg: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class IterateM:
    init: str
    gen: str
    fn: Expr
    span: Span = field(default=None, compare=False, repr=False)


Expr = Union[
    Var, Lit, Lam, App, If, Prompt, CallCC, CallComp, AbortE, Event, PrimApp, Let, Seq,
    Inj, Case, SomeE, NoneE, CaseOpt, ContV, CompV, Loc, Hole,
    LoopM, WhileM, TryCatchM, ThrowM, IterateM,
]

MACROS = (LoopM, WhileM, TryCatchM, ThrowM, IterateM)


def is_value(e: Expr) -> bool:
    if isinstance(e, (Lit, Lam, ContV, CompV, Loc, NoneE)):
        return True
    if isinstance(e, (Inj, SomeE)):
        return is_value(e.arg)
    return False


def exn_tag(name: str) -> str:
    """The reserved prompt tag for an exception name."""
    return f"exn%{name}"
