"""Macro expansion with type-directed call/cc annotations.

Generated names carry a ``%`` which the parser refuses in user programs, so
expansion cannot capture user variables.
"""

from __future__ import annotations

import itertools
import re
from collections.abc import Mapping
from typing import TYPE_CHECKING

from ..conteffect import CEff, Proph, Replace
from . import syntax as S
from .subtype import unfold_ty

if TYPE_CHECKING:
    from ..typechecker import Checker

_GENERATED = re.compile(r"%(\d+)$")


class ExpansionError(Exception):
    def __init__(self, form: str, inner: Exception):
        self.form = form
        self.inner = inner
        super().__init__(f"cannot expand {form}: {inner}")


def _max_index(e) -> int:
    best = 0
    for v in _names(e):
        m = _GENERATED.search(v)
        if m:
            best = max(best, int(m.group(1)))
    return best


def _names(e):
    if isinstance(e, str):
        yield e
        return
    if isinstance(e, tuple):
        for x in e:
            yield from _names(x)
        return
    fields = getattr(e, "__dataclass_fields__", None)
    if not fields:
        return
    for name in fields:
        if name == "span":
            continue
        yield from _names(getattr(e, name))


class Expander:
    def __init__(self, checker: Checker):
        self.checker = checker
        self.alg = checker.alg
        self.q = checker.q
        self._counter = itertools.count(1)

    def expand(self, e: S.Expr, env: Mapping[str, S.Ty] | None = None) -> S.Expr:
        self._counter = itertools.count(_max_index(e) + 1)
        return self._go(e, dict(env or {}))

    def _fresh(self) -> int:
        return next(self._counter)

    def _type_of(self, e: S.Expr, env: dict, form: str):
        try:
            return self.checker.infer(e, env)
        except Exception as exc:  # reported with the macro that needed it
            raise ExpansionError(form, exc) from exc

    def loop_prediction(self, once: CEff, tag: str) -> CEff:
        """Prediction for a loop whose single round has effect ``once``."""
        alg = self.alg
        qp = alg.opt_iterate(once.under)
        cp = alg._norm_ctls([Replace(tag, qp, S.UNIT), *alg.left_acc_set(qp, once.controls)])
        pp = alg.iterate(CEff(once.props, cp, None)).props
        return alg.make(pp, cp, qp)

    def _go(self, e: S.Expr, env: dict) -> S.Expr:
        go = self._go
        sp = getattr(e, "span", None)
        match e:
            case S.Var() | S.Lit() | S.Event() | S.NoneE() | S.Hole() | S.Loc() | S.ContV() | S.CompV():
                return e
            case S.Lam(x, t, body):
                return S.Lam(x, t, go(body, {**env, x: t}), sp)
            case S.App(f, a):
                return S.App(go(f, env), go(a, env), sp)
            case S.If(c, t, o):
                return S.If(go(c, env), go(t, env), go(o, env), sp)
            case S.Seq(a, b):
                return S.Seq(go(a, env), go(b, env), sp)
            case S.Let(x, b, body):
                b2 = go(b, env)
                tx = self._type_of(b2, env, "let").ty
                return S.Let(x, b2, go(body, {**env, x: tx}), sp)
            case S.Prompt(tag, body, h):
                return S.Prompt(tag, go(body, env), go(h, env), sp)
            case S.CallCC(tag, pred, res, fn):
                return S.CallCC(tag, pred, res, go(fn, env), sp)
            case S.CallComp(tag, pred, res, fn):
                return S.CallComp(tag, pred, res, go(fn, env), sp)
            case S.AbortE(tag, t, a):
                return S.AbortE(tag, t, go(a, env), sp)
            case S.PrimApp(name, args):
                return S.PrimApp(name, tuple(go(a, env) for a in args), sp)
            case S.Inj(right, other, a):
                return S.Inj(right, other, go(a, env), sp)
            case S.SomeE(a):
                return S.SomeE(go(a, env), sp)
            case S.Case(s, lx, lb, rx, rb):
                s2 = go(s, env)
                ts = unfold_ty(self._type_of(s2, env, "case").ty)
                lt = ts.left if isinstance(ts, S.TSum) else S.ANY
                rt = ts.right if isinstance(ts, S.TSum) else S.ANY
                return S.Case(s2, lx, go(lb, {**env, lx: lt}), rx, go(rb, {**env, rx: rt}), sp)
            case S.CaseOpt(s, n, x, sm):
                s2 = go(s, env)
                ts = unfold_ty(self._type_of(s2, env, "case-opt").ty)
                xt = ts.elem if isinstance(ts, S.TOption) else S.ANY
                return S.CaseOpt(s2, go(n, env), x, go(sm, {**env, x: xt}), sp)
            case S.LoopM(body):
                return self._loop(go(body, env), env, sp)
            case S.WhileM(c, body):
                return self._while(go(c, env), go(body, env), env, sp)
            case S.TryCatchM(body, exn, h):
                return S.Prompt(S.exn_tag(exn), go(body, env), go(h, env), sp)
            case S.ThrowM(exn, a):
                a2 = go(a, env)
                ta = self._type_of(a2, env, "throw").ty
                return S.AbortE(S.exn_tag(exn), ta, a2, sp)
            case S.IterateM(init, gen, fn):
                return self._iterate(init, gen, go(fn, env), env, sp)
        raise TypeError(f"cannot expand {e!r}")

    def _capture_loop(self, tag: str, pred: CEff, n: int, round_body, sp) -> S.Expr:
        cc, k = f"cc%{n}", f"k%{n}"
        cont_ty = S.TMu("K", S.TCont(tag, S.TVar("K"), pred, S.UNIT))
        capture = S.CallCC(tag, pred, S.UNIT, S.Lam(k, cont_ty, S.Var(k)))
        jump = S.App(S.Var(cc), S.Var(cc))
        return S.Let(cc, capture, round_body(jump), sp)

    def _loop(self, body: S.Expr, env: dict, sp) -> S.Expr:
        once = self._type_of(body, env, "loop").effect
        n = self._fresh()
        tag = f"loop%{n}"
        pred = self.loop_prediction(once, tag)
        inner = self._capture_loop(tag, pred, n, lambda jump: S.Seq(body, jump), sp)
        return S.Prompt(tag, inner, S.Lam(f"_%{n}", S.UNIT, S.Lit(None)), sp)

    def _while(self, cond: S.Expr, body: S.Expr, env: dict, sp) -> S.Expr:
        xc = self._type_of(cond, env, "while").effect
        xe = self._type_of(body, env, "while").effect
        n = self._fresh()
        tag = f"while%{n}"
        pred = self.loop_prediction(self.alg.seq(xe, xc), tag)
        inner = self._capture_loop(
            tag, pred, n, lambda jump: S.Seq(body, S.If(cond, jump, S.Lit(None))), sp
        )
        return S.Prompt(tag, S.If(cond, inner, S.Lit(None)), S.Lam(f"_%{n}", S.UNIT, S.Lit(None)), sp)

    def _iterate(self, init: str, gen: str, fn: S.Expr, env: dict, sp) -> S.Expr:
        f_ty = unfold_ty(self._type_of(fn, env, "iterate").ty)
        yield_ty = unfold_ty(f_ty.arg) if isinstance(f_ty, S.TFun) else None
        props = [p for p in yield_ty.latent.props if isinstance(p, Proph)] if isinstance(yield_ty, S.TFun) else []
        if len(props) != 1:
            raise ExpansionError("iterate", ValueError("the generator's first parameter must be a yield function with one prophecy"))
        pred = props[0].predicted
        elem = yield_ty.arg
        opt = S.TOption(elem)
        n = self._fresh()
        cell, get_next, yld, fin = f"resumption%{n}", f"get-next%{n}", f"yield%{n}", f"finish%{n}"
        cont_ty = S.TCont(gen, S.UNIT, pred, opt)
        stored = S.TSum(cont_ty, S.UNIT)

        def store(v):
            return S.PrimApp("set", (S.Var(cell), S.Inj(True, S.UNIT, v)))

        next_fn = S.Lam(
            f"_%{n}", S.UNIT,
            S.Case(
                S.PrimApp("get", (S.Var(cell),)),
                f"u%{n}", S.NoneE(elem),
                f"r%{n}", S.Case(
                    S.Var(f"r%{n}"),
                    f"resume%{n}", S.Prompt(gen, S.App(S.Var(f"resume%{n}"), S.Lit(None)), S.Lam(f"v%{n}", opt, S.Var(f"v%{n}"))),
                    f"d%{n}", S.NoneE(elem),
                ),
            ),
        )
        yield_fn = S.Lam(
            f"val%{n}", elem,
            S.CallCC(gen, pred, opt, S.Lam(
                f"res%{n}", cont_ty,
                S.Seq(store(S.Inj(False, S.UNIT, S.Var(f"res%{n}"))), S.AbortE(gen, opt, S.SomeE(S.Var(f"val%{n}")))),
            )),
        )
        finish_fn = S.Lam(
            f"_%{n}", S.UNIT,
            S.Seq(store(S.Inj(True, cont_ty, S.Lit(None))), S.AbortE(gen, opt, S.NoneE(elem))),
        )
        cell_env = {**env, cell: S.TRef(S.TSum(S.UNIT, stored))}
        next_ty = self._type_of(next_fn, cell_env, "iterate").ty
        start = S.CallCC(gen, pred, opt, S.Lam(
            f"k%{n}", cont_ty,
            S.Seq(store(S.Inj(False, S.UNIT, S.Var(f"k%{n}"))), S.AbortE(init, next_ty, S.Var(get_next))),
        ))
        run = S.Seq(start, S.Seq(S.App(S.App(fn, S.Var(yld)), S.Var(fin)), S.App(S.Var(fin), S.Lit(None))))
        body = S.Prompt(
            init,
            S.Seq(S.Prompt(gen, run, S.Lam(f"v%{n}", opt, S.Var(f"v%{n}"))), S.Var(get_next)),
            S.Lam(f"g%{n}", next_ty, S.Var(f"g%{n}")),
        )
        out = S.Let(yld, yield_fn, S.Let(fin, finish_fn, body))
        out = S.Let(get_next, next_fn, out)
        return S.Let(cell, S.PrimApp("ref", (S.Inj(False, stored, S.Lit(None)),)), out, sp)