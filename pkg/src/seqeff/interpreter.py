"""Small-step machine with effect labels, plus the stepwise soundness audit."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

from . import reglang as rl
from .conteffect import CEff
from .langcore import syntax as S
from .langcore.contexts import (
    FAbort,
    FAppArg,
    FAppFn,
    FCapture,
    FCase,
    FCaseOpt,
    FIf,
    FInj,
    FLet,
    FPrim,
    FPrompt,
    FSeq,
    FSome,
    plug,
)
from .langcore.subtype import unfold_ty
from .quantale import TraceQuantale
from .typechecker import Checker, TypeCheckError

__all__ = [
    "Machine",
    "Done",
    "Stuck",
    "FuelExhausted",
    "RunResult",
    "StepAudit",
    "AuditReport",
    "decompose",
    "substitute",
]


@dataclass(frozen=True)
class Done:
    value: S.Expr


@dataclass(frozen=True)
class Stuck:
    reason: str


@dataclass(frozen=True)
class FuelExhausted:
    steps: int


Outcome = Done | Stuck | FuelExhausted


@dataclass(frozen=True)
class FPromptHandler:
    """Evaluating a prompt's handler expression (the body waits)."""

    tag: str
    body: S.Expr

    def fill(self, e):
        return S.Prompt(self.tag, self.body, e)


# substitution


def substitute(e: S.Expr, x: str, v: S.Expr) -> S.Expr:
    """Replace free ``x`` by the closed value ``v``."""
    sub = substitute
    match e:
        case S.Var(name):
            return v if name == x else e
        case S.Lam(p, t, body):
            return e if p == x else S.Lam(p, t, sub(body, x, v), e.span)
        case S.App(f, a):
            return S.App(sub(f, x, v), sub(a, x, v), e.span)
        case S.If(c, t, o):
            return S.If(sub(c, x, v), sub(t, x, v), sub(o, x, v), e.span)
        case S.Seq(a, b):
            return S.Seq(sub(a, x, v), sub(b, x, v), e.span)
        case S.Let(y, b, body):
            return S.Let(y, sub(b, x, v), body if y == x else sub(body, x, v), e.span)
        case S.Prompt(tag, body, h):
            return S.Prompt(tag, sub(body, x, v), sub(h, x, v), e.span)
        case S.CallCC(tag, pred, res, fn):
            return S.CallCC(tag, pred, res, sub(fn, x, v), e.span)
        case S.CallComp(tag, pred, res, fn):
            return S.CallComp(tag, pred, res, sub(fn, x, v), e.span)
        case S.AbortE(tag, t, a):
            return S.AbortE(tag, t, sub(a, x, v), e.span)
        case S.PrimApp(name, args):
            return S.PrimApp(name, tuple(sub(a, x, v) for a in args), e.span)
        case S.Inj(right, other, a):
            return S.Inj(right, other, sub(a, x, v), e.span)
        case S.SomeE(a):
            return S.SomeE(sub(a, x, v), e.span)
        case S.Case(s, lx, lb, rx, rb):
            return S.Case(
                sub(s, x, v), lx, lb if lx == x else sub(lb, x, v), rx, rb if rx == x else sub(rb, x, v), e.span
            )
        case S.CaseOpt(s, n, y, sm):
            return S.CaseOpt(sub(s, x, v), sub(n, x, v), y, sm if y == x else sub(sm, x, v), e.span)
    return e


# decomposition


def decompose(e: S.Expr) -> tuple[tuple, S.Expr] | None:
    """Split into (context, redex); None for values. Contexts are innermost first."""
    frames: list = []
    while True:
        if S.is_value(e):
            if not frames:
                return None
            raise AssertionError("value reached inside a context")
        nxt = _split(e)
        if nxt is None:
            frames.reverse()
            return tuple(frames), e
        frame, e = nxt
        frames.append(frame)


def _split(e: S.Expr):
    # one frame and the sub-term to evaluate next, or None when e is the redex
    iv = S.is_value
    match e:
        case S.App(f, a):
            if not iv(f):
                return FAppFn(a), f
            if not iv(a):
                return FAppArg(f), a
        case S.If(c, t, o):
            if not iv(c):
                return FIf(t, o), c
        case S.Seq(a, b):
            if not iv(a):
                return FSeq(b), a
        case S.Let(x, b, body):
            if not iv(b):
                return FLet(x, body), b
        case S.Prompt(tag, body, h):
            if not iv(h):
                return FPromptHandler(tag, body), h
            if not iv(body):
                return FPrompt(tag, h), body
        case S.AbortE(tag, t, a):
            if not iv(a):
                return FAbort(tag, t), a
        case S.CallCC(tag, pred, res, fn):
            if not iv(fn):
                return FCapture(tag, pred, res, False), fn
        case S.CallComp(tag, pred, res, fn):
            if not iv(fn):
                return FCapture(tag, pred, res, True), fn
        case S.PrimApp(name, args):
            for i, a in enumerate(args):
                if not iv(a):
                    return FPrim(name, args[:i], args[i + 1 :]), a
        case S.Inj(right, other, a):
            return FInj(right, other), a
        case S.SomeE(a):
            return FSome(), a
        case S.Case(s, lx, lb, rx, rb):
            if not iv(s):
                return FCase(lx, lb, rx, rb), s
        case S.CaseOpt(s, n, x, sm):
            if not iv(s):
                return FCaseOpt(n, x, sm), s
    return None


def _split_at_prompt(ctx: tuple, tag: str) -> tuple[tuple, FPrompt, tuple] | None:
    for i, f in enumerate(ctx):
        if isinstance(f, FPrompt) and f.tag == tag:
            return ctx[:i], f, ctx[i + 1 :]
    return None


# the machine


@dataclass
class RunResult:
    outcome: Outcome
    steps: int
    effect: Any  # fold of the step labels
    trace: list[str] = field(default_factory=list)

    @property
    def trace_text(self) -> str:
        return "".join(self.trace)


@dataclass
class StepAudit:
    index: int
    label: str
    ok: bool
    before: str
    after: str
    reason: str = ""


@dataclass
class AuditReport:
    initial_effect: str
    run: RunResult
    steps: list[StepAudit] = field(default_factory=list)
    final_ok: bool = True
    final_reason: str = ""

    @property
    def failures(self) -> list[StepAudit]:
        return [s for s in self.steps if not s.ok]

    @property
    def passed(self) -> bool:
        return self.final_ok and not self.failures and not isinstance(self.run.outcome, Stuck)


class Machine:
    """One machine per language instance; each run gets a fresh store."""

    def __init__(self, checker: Checker):
        self.checker = checker
        self.lang = checker.lang
        self.q = checker.q
        self.alg = checker.alg

    def _close(self, e: S.Expr, bindings: Mapping[str, S.Expr] | None) -> S.Expr:
        for x, v in (bindings or {}).items():
            e = substitute(e, x, v)
        return e

    def step(self, e: S.Expr, store: dict) -> tuple[S.Expr, Any, str | None] | Stuck | None:
        """One reduction: (next, label, emitted symbol), Stuck, or None for values."""
        d = decompose(e)
        if d is None:
            return None
        ctx, r = d
        unit = self.q.unit
        match r:
            case S.App(S.Lam(x, _, body), v):
                return plug(ctx, substitute(body, x, v)), unit, None
            case S.App(S.ContV(tag=tag, ctx=kctx), v):
                parts = _split_at_prompt(ctx, tag)
                if parts is None:
                    return Stuck(f"continuation for {tag} invoked outside any prompt for {tag}")
                _, prompt, outer = parts
                return plug(outer, S.Prompt(tag, plug(kctx, v), prompt.handler)), unit, None
            case S.App(S.CompV(ctx=kctx), v):
                return plug(ctx, plug(kctx, v)), unit, None
            case S.App(f, _):
                return Stuck(f"cannot apply {self.lang.show_expr(f)}")
            case S.If(S.Lit(bool() as b), t, o):
                return plug(ctx, t if b else o), unit, None
            case S.If():
                return Stuck("condition is not a boolean")
            case S.Seq(_, b):
                return plug(ctx, b), unit, None
            case S.Let(x, v, body):
                return plug(ctx, substitute(body, x, v)), unit, None
            case S.Prompt(_, v, _):
                return plug(ctx, v), unit, None
            case S.AbortE(tag, _, v):
                parts = _split_at_prompt(ctx, tag)
                if parts is None:
                    return Stuck(f"unmatched abort to {tag}")
                _, prompt, outer = parts
                return plug(outer, S.App(prompt.handler, v)), unit, None
            case S.CallCC(tag, pred, res, fn) | S.CallComp(tag, pred, res, fn):
                parts = _split_at_prompt(ctx, tag)
                if parts is None:
                    return Stuck(f"capture for {tag} outside any prompt for {tag}")
                inner = parts[0]
                arg = self._cont_arg(fn)
                cls = S.CompV if isinstance(r, S.CallComp) else S.ContV
                return plug(ctx, S.App(fn, cls(tag, arg, pred, res, inner))), unit, None
            case S.Event(sym):
                return plug(ctx, S.Lit(None)), self.q.event(sym), sym
            case S.PrimApp(name, args):
                return self._prim(ctx, name, args, store)
            case S.Case(S.Inj(right, _, v), lx, lb, rx, rb):
                return plug(ctx, substitute(rb, rx, v) if right else substitute(lb, lx, v)), unit, None
            case S.CaseOpt(S.SomeE(v), _, x, sm):
                return plug(ctx, substitute(sm, x, v)), unit, None
            case S.CaseOpt(S.NoneE(), n, _, _):
                return plug(ctx, n), unit, None
            case S.Var(name):
                return Stuck(f"free variable {name}")
        return Stuck(f"no rule applies to {self.lang.show_expr(r)}")

    def _cont_arg(self, fn: S.Expr) -> S.Ty:
        if isinstance(fn, S.Lam):
            t = unfold_ty(fn.ty)
            if isinstance(t, (S.TCont, S.TComp)):
                return t.arg
        return S.ANY

    def _prim(self, ctx, name, args, store):
        unit = self.q.unit
        if name == "ref":
            addr = len(store)
            elem = self.checker.infer(args[0]).ty
            store[addr] = args[0]
            return plug(ctx, S.Loc(addr, elem)), unit, None
        cell = args[0]
        if not isinstance(cell, S.Loc) or cell.addr not in store:
            return Stuck(f"{name} on a non-reference")
        if name == "get":
            return plug(ctx, store[cell.addr]), unit, None
        store[cell.addr] = args[1]
        return plug(ctx, S.Lit(None)), unit, None

    def run(self, e: S.Expr, fuel: int = 10_000, bindings: Mapping[str, S.Expr] | None = None) -> RunResult:
        e = self._close(e, bindings)
        store: dict = {}
        acc = self.q.unit
        trace: list[str] = []
        for n in range(fuel):
            r = self.step(e, store)
            if r is None:
                return RunResult(Done(e), n, acc, trace)
            if isinstance(r, Stuck):
                return RunResult(r, n, acc, trace)
            e, label, sym = r
            acc = self.q.seq(acc, label)
            if sym is not None:
                trace.append(sym)
        out: Outcome = Done(e) if S.is_value(e) else FuelExhausted(fuel)
        return RunResult(out, fuel, acc, trace)

    def audit_run(self, e: S.Expr, fuel: int = 10_000, bindings: Mapping[str, S.Expr] | None = None) -> AuditReport:
        """Run while checking that every step's label followed by the reduct's effect stays below the previous effect."""
        alg = self.alg
        e = self._close(e, bindings)
        chi = self.checker.infer(e).effect
        report = AuditReport(alg.render(chi), RunResult(FuelExhausted(fuel), 0, self.q.unit))
        chi0 = chi
        store: dict = {}
        acc = self.q.unit
        trace: list[str] = []
        outcome: Outcome | None = None
        n = 0
        for n in range(fuel):
            r = self.step(e, store)
            if r is None:
                outcome = Done(e)
                break
            if isinstance(r, Stuck):
                outcome = r
                break
            e, label, sym = r
            acc = self.q.seq(acc, label)
            if sym is not None:
                trace.append(sym)
            try:
                after = self.checker.infer(e).effect
            except TypeCheckError as exc:
                report.steps.append(StepAudit(n, self.q.render(label), False, alg.render(chi), "", f"reduct does not typecheck: {exc}"))
                outcome = Stuck("reduct does not typecheck")
                break
            lhs = alg.seq(alg.pure(label), after)
            ok = alg.leq(lhs, chi)
            report.steps.append(StepAudit(n, self.q.render(label), ok, alg.render(chi), alg.render(lhs)))
            chi = after
        else:
            n = fuel
        if outcome is None:
            outcome = Done(e) if S.is_value(e) else FuelExhausted(fuel)
        report.run = RunResult(outcome, n, acc, trace)
        report.final_ok, report.final_reason = self._final_check(chi0, report.run)
        return report

    def _final_check(self, chi0: CEff, run: RunResult) -> tuple[bool, str]:
        q = self.q
        if isinstance(run.outcome, Stuck):
            return False, f"stuck: {run.outcome.reason}"
        if isinstance(run.outcome, Done):
            if chi0.under is None:
                return False, "terminated although the static effect never returns"
            if isinstance(q, TraceQuantale):
                ok = rl.lang_member(run.trace, chi0.under)
                return ok, "" if ok else f"trace {run.trace_text!r} not in {q.render(chi0.under)}"
            ok = q.leq(run.effect, chi0.under)
            return ok, "" if ok else f"effect {q.render(run.effect)} not below {q.render(chi0.under)}"
        # fuel exhausted: the trace must still extend to some normal or jumping run
        if isinstance(q, TraceQuantale):
            lang = chi0.under if chi0.under is not None else rl.EMPTY
            for c in chi0.controls:
                lang = rl.alt(lang, _prefix_of(c))
            ok = rl.lang_prefix_member(run.trace, lang)
            return ok, "" if ok else f"trace {run.trace_text!r} is not a prefix of {q.render(lang)}"
        return True, ""


def _prefix_of(c) -> Any:
    while hasattr(c, "inner"):
        c = c.inner
    return c.prefix
