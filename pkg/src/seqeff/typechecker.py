"""Syntax-directed type and effect inference.

Subsumption is folded into the premises that need it (application
arguments, abort arguments, continuation results and prompt validation), so
inference is deterministic.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any

from .conteffect import (
    Abort,
    Blocked,
    BlockedP,
    CEff,
    Mu,
    Proph,
    PVar,
    Replace,
    unfold,
)
from .langcore import syntax as S
from .langcore.contexts import plug
from .langcore.lang import Language
from .langcore.subtype import unfold_ty

__all__ = [
    "Checker",
    "Note",
    "TypeCheckError",
    "TypingOutcome",
    "Violation",
]


@dataclass
class Note:
    rule: str
    text: str
    span: S.Span = None
    left: str | None = None
    right: str | None = None
    holds: bool | None = None
    values: tuple | None = field(default=None, repr=False)


@dataclass
class Violation:
    clause: str
    element: str
    message: str
    left: str | None = None
    right: str | None = None


class TypeCheckError(Exception):
    def __init__(
        self,
        rule: str,
        message: str,
        span: S.Span = None,
        left: str | None = None,
        right: str | None = None,
        violations: Iterable[Violation] = (),
    ):
        self.rule = rule
        self.message = message
        self.span = span
        self.left = left
        self.right = right
        self.violations = list(violations)
        text = f"{rule}: {message}"
        if left is not None:
            text += f"\n  have: {left}\n  need: {right}"
        for v in self.violations:
            text += f"\n  [{v.clause}] {v.element}: {v.message}"
            if v.left is not None:
                text += f"\n    {v.left}  is not below  {v.right}"
        super().__init__(text)


@dataclass
class TypingOutcome:
    ty: S.Ty
    effect: CEff
    notes: list[Note] = field(default_factory=list)


_LIT_TYPES = {type(None): S.UNIT, bool: S.BOOL, int: S.NAT}


class Checker:
    def __init__(self, lang: Language):
        self.lang = lang
        self.q = lang.q
        self.alg = lang.alg
        self.sub = lang.sub
        self._notes: list[Note] = []

    # public entry points

    def infer(self, e: S.Expr, env: Mapping[str, S.Ty] | None = None) -> TypingOutcome:
        self._notes = []
        ty, eff = self._infer(dict(env or {}), e)
        if self.alg.has_top(eff):
            raise TypeCheckError("T-Top", "effect contains ERR", getattr(e, "span", None), self.alg.render(eff))
        return TypingOutcome(ty, eff, self._notes)

    def context_infer(
        self, ctx: tuple, hole_ty: S.Ty, hole_eff: CEff, env: Mapping[str, S.Ty] | None = None
    ) -> tuple[S.Ty, CEff]:
        """Type of ``ctx`` plugged with any term of the given type and effect."""
        saved = self._notes
        self._notes = []
        try:
            return self._infer(dict(env or {}), plug(ctx, S.Hole(hole_ty, hole_eff)))
        finally:
            self._notes = saved

    # helpers

    def _show(self, t: S.Ty) -> str:
        return self.lang.show_ty(t)

    def _need_sub(self, a: S.Ty, b: S.Ty, rule: str, what: str, span: S.Span) -> None:
        if not self.sub.sub(a, b):
            raise TypeCheckError(rule, f"{what}: type mismatch", span, self._show(a), self._show(b))

    def _seq(self, *xs: CEff) -> CEff:
        return self.alg.seq_all(*xs)

    # inference

    def _infer(self, env: dict, e: S.Expr) -> tuple[S.Ty, CEff]:
        alg = self.alg
        unit = alg.unit
        span = getattr(e, "span", None)
        match e:
            case S.Var(name):
                if name not in env:
                    raise TypeCheckError("T-Var", f"unbound variable {name!r}", span)
                return env[name], unit
            case S.Lit(v):
                return _LIT_TYPES[type(v)], unit
            case S.Event(sym):
                return S.UNIT, alg.pure(self.q.event(sym))
            case S.Hole(ty, eff):
                return ty, eff
            case S.Lam(x, t, body):
                tb, xb = self._infer({**env, x: t}, body)
                return S.TFun(t, xb, tb), unit
            case S.App(fn, arg):
                return self._app(env, fn, arg, span)
            case S.If(c, t, o):
                tc, xc = self._infer(env, c)
                if not self.sub.sub(tc, S.BOOL):
                    raise TypeCheckError("T-If", "condition must be bool", span, self._show(tc), "bool")
                tt, xt = self._infer(env, t)
                to, xo = self._infer(env, o)
                ty = self.sub.join(tt, to)
                if ty is None:
                    raise TypeCheckError("T-If", "branches have incompatible types", span, self._show(tt), self._show(to))
                return ty, alg.seq(xc, alg.join(xt, xo))
            case S.Seq(a, b):
                _, xa = self._infer(env, a)
                tb, xb = self._infer(env, b)
                return tb, alg.seq(xa, xb)
            case S.Let(x, b, body):
                tx, xb = self._infer(env, b)
                tb, xbody = self._infer({**env, x: tx}, body)
                return tb, alg.seq(xb, xbody)
            case S.AbortE(tag, t, arg):
                ta, xa = self._infer(env, arg)
                self._need_sub(ta, t, "T-Abort", "thrown value", span)
                return S.ANY, alg.seq(xa, alg.make((), [Abort(tag, self.q.unit, t)], None))
            case S.CallCC(tag, pred, res, fn):
                return self._capture(env, tag, pred, res, fn, False, span)
            case S.CallComp(tag, pred, res, fn):
                return self._capture(env, tag, pred, res, fn, True, span)
            case S.Prompt(tag, body, handler):
                return self._prompt(env, tag, body, handler, span)
            case S.PrimApp(name, args):
                return self._prim(env, name, args, span)
            case S.Inj(right, other, arg):
                ta, xa = self._infer(env, arg)
                return (S.TSum(other, ta) if right else S.TSum(ta, other)), xa
            case S.SomeE(arg):
                ta, xa = self._infer(env, arg)
                return S.TOption(ta), xa
            case S.NoneE(t):
                return S.TOption(t), unit
            case S.Case(scrut, lx, lb, rx, rb):
                ts, xs = self._infer(env, scrut)
                ts = unfold_ty(ts)
                if not isinstance(ts, S.TSum):
                    raise TypeCheckError("T-Case", "scrutinee is not a sum", span, self._show(ts), "(sum _ _)")
                tl, xl = self._infer({**env, lx: ts.left}, lb)
                tr, xr = self._infer({**env, rx: ts.right}, rb)
                ty = self.sub.join(tl, tr)
                if ty is None:
                    raise TypeCheckError("T-Case", "arms have incompatible types", span, self._show(tl), self._show(tr))
                return ty, alg.seq(xs, alg.join(xl, xr))
            case S.CaseOpt(scrut, none, x, some):
                ts, xs = self._infer(env, scrut)
                ts = unfold_ty(ts)
                if not isinstance(ts, S.TOption):
                    raise TypeCheckError("T-CaseOpt", "scrutinee is not an option", span, self._show(ts), "(option _)")
                tn, xn = self._infer(env, none)
                tsm, xsm = self._infer({**env, x: ts.elem}, some)
                ty = self.sub.join(tn, tsm)
                if ty is None:
                    raise TypeCheckError("T-CaseOpt", "arms have incompatible types", span, self._show(tn), self._show(tsm))
                return ty, alg.seq(xs, alg.join(xn, xsm))
            case S.Loc(_, elem):
                return S.TRef(elem), unit
            case S.ContV(tag, arg, pred, res, ctx):
                return self._cont_value(tag, arg, pred, res, ctx, False, span)
            case S.CompV(tag, arg, pred, res, ctx):
                return self._cont_value(tag, arg, pred, res, ctx, True, span)
        if isinstance(e, S.MACROS):
            raise TypeCheckError("T-Macro", f"{type(e).__name__} must be expanded before checking", span)
        raise TypeCheckError("T-Unknown", f"cannot type {e!r}", span)

    def _app(self, env: dict, fn: S.Expr, arg: S.Expr, span: S.Span) -> tuple[S.Ty, CEff]:
        alg = self.alg
        tf, xf = self._infer(env, fn)
        ta, xa = self._infer(env, arg)
        head = unfold_ty(tf)
        if isinstance(head, S.TAny):
            return S.ANY, alg.seq(xf, xa)
        if isinstance(head, S.TFun):
            self._need_sub(ta, head.arg, "T-App", "argument", span)
            return head.res, self._seq(xf, xa, head.latent)
        if isinstance(head, S.TCont):
            self._need_sub(ta, head.arg, "T-AppCont", "argument", span)
            lat = head.latent
            jump = CEff(
                alg.block_props(lat.props, head.tag),
                alg._norm_ctls(
                    list(alg.block_controls(lat.controls, head.tag))
                    + list(alg.left_acc_set(lat.under, [Replace(head.tag, self.q.unit, head.res)]))
                ),
                None,
            )
            return S.ANY, self._seq(xf, xa, jump)
        if isinstance(head, S.TComp):
            self._need_sub(ta, head.arg, "T-AppComp", "argument", span)
            return head.res, self._seq(xf, xa, head.latent)
        raise TypeCheckError("T-App", "applying a non-function", span, self._show(tf), "a function or continuation")

    def _capture(
        self, env: dict, tag: str, pred: CEff, res: S.Ty, fn: S.Expr, comp: bool, span: S.Span
    ) -> tuple[S.Ty, CEff]:
        alg = self.alg
        rule = "T-CallComp" if comp else "T-CallCont"
        if not alg.nontrivial(pred):
            raise TypeCheckError(rule, "predicted effect is trivial (no control effects and no underlying effect)", span)
        tf, xf = self._infer(env, fn)
        head = unfold_ty(tf)
        if not isinstance(head, S.TFun):
            raise TypeCheckError(rule, "body must be a function", span, self._show(tf), "a function")
        param = unfold_ty(head.arg)
        if comp:
            if not isinstance(param, S.TComp):
                raise TypeCheckError(rule, "body parameter must be a composable continuation", span, self._show(head.arg), "(comp ...)")
            actual: S.Ty = S.TComp(param.arg, pred, res)
        else:
            if not isinstance(param, S.TCont) or param.tag != tag:
                raise TypeCheckError(rule, f"body parameter must be a continuation for tag {tag}", span, self._show(head.arg), f"(cont {tag} ...)")
            actual = S.TCont(tag, param.arg, pred, res)
        self._need_sub(actual, head.arg, rule, "continuation parameter", span)
        self._need_sub(head.res, param.arg, rule, "body result", span)
        proph = Proph(tag, pred, res, alg.unit, comp)
        return param.arg, self._seq(xf, head.latent, alg.make([proph], (), self.q.unit))

    def _prompt(self, env: dict, tag: str, body: S.Expr, handler: S.Expr, span: S.Span) -> tuple[S.Ty, CEff]:
        alg = self.alg
        tb, xb = self._infer(env, body)
        th, xh = self._infer(env, handler)
        if not alg.leq(xh, alg.unit):
            raise TypeCheckError("T-Prompt", "handler must be effect-free to evaluate", span, alg.render(xh), alg.render(alg.unit))
        h = unfold_ty(th)
        if not isinstance(h, S.TFun):
            raise TypeCheckError("T-Prompt", "handler must be a function", span, self._show(th), "a function")
        if h.latent.props or h.latent.controls:
            raise TypeCheckError(
                "T-Prompt", "handler has control effects", span, alg.render(h.latent), "{ |  | Q}"
            )
        ty = self.sub.join(tb, h.res)
        if ty is None:
            raise TypeCheckError("T-Prompt", "body and handler results differ", span, self._show(tb), self._show(h.res))
        violations = self.valid_effects(xb.props, xb.controls, xb.under, tag, ty, h.arg, span)
        if violations:
            raise TypeCheckError("V-Effects", f"prompt {tag} rejects its body's effects", span, violations=violations)
        return ty, self.prompt_effect(xb.props, xb.controls, xb.under, tag, h.latent.under)

    def _prim(self, env: dict, name: str, args: tuple, span: S.Span) -> tuple[S.Ty, CEff]:
        typed = [self._infer(env, a) for a in args]
        eff = self._seq(*(x for _, x in typed))
        if name == "ref":
            return S.TRef(typed[0][0]), eff
        cell = unfold_ty(typed[0][0])
        if isinstance(cell, S.TAny):
            return S.ANY, eff
        if not isinstance(cell, S.TRef):
            raise TypeCheckError("T-Prim", f"{name} needs a reference", span, self._show(typed[0][0]), "(ref _)")
        if name == "get":
            return cell.elem, eff
        self._need_sub(typed[1][0], cell.elem, "T-Prim", "stored value", span)
        return S.UNIT, eff

    def _cont_value(
        self, tag: str, arg: S.Ty, pred: CEff, res: S.Ty, ctx: tuple, comp: bool, span: S.Span
    ) -> tuple[S.Ty, CEff]:
        alg = self.alg
        t0, x0 = self.context_infer(ctx, arg, alg.unit)
        rule = "T-CompC" if comp else "T-ContC"
        self._need_sub(t0, res, rule, "context result", span)
        if comp:
            ok = alg.leq(x0, pred)
        else:
            ok = (
                alg.props_leq(alg.unblock_props(x0.props, tag), alg.unblock_props(pred.props, tag))
                and alg.controls_leq(
                    alg._norm_ctls(alg.unblock_controls(x0.controls, tag)),
                    alg._norm_ctls(alg.unblock_controls(pred.controls, tag)),
                )
                and alg.opt_leq(x0.under, pred.under)
            )
        if not ok:
            raise TypeCheckError(rule, "captured context exceeds its predicted effect", span, alg.render(x0), alg.render(pred))
        ty = S.TComp(arg, pred, res) if comp else S.TCont(tag, arg, pred, res)
        return ty, alg.unit

    # prompt validation and conclusion

    def valid_effects(
        self,
        props: Iterable,
        controls: Iterable,
        under: Any,
        tag: str,
        res_ty: S.Ty,
        handler_arg: S.Ty,
        span: S.Span = None,
    ) -> list[Violation]:
        alg = self.alg
        out: list[Violation] = []
        for c in alg.unblock_controls(controls, tag):
            if isinstance(c, Blocked) or c.tag != tag:
                continue
            if isinstance(c, Abort):
                ok = self.sub.sub(c.thrown, handler_arg)
                self._note("V-Effects", f"abort {tag}: thrown type below handler argument", span,
                           self._show(c.thrown), self._show(handler_arg), ok)
                if not ok:
                    out.append(Violation("abort-type", alg.render_ctl(c), "thrown type is not a subtype of the handler argument",
                                         self._show(c.thrown), self._show(handler_arg)))
            elif isinstance(c, Replace):
                ok = self.sub.sub(c.result, res_ty)
                self._note("V-Effects", f"replace {tag}: result type below prompt type", span,
                           self._show(c.result), self._show(res_ty), ok)
                if not ok:
                    out.append(Violation("replace-type", alg.render_ctl(c), "continuation result is not a subtype of the prompt type",
                                         self._show(c.result), self._show(res_ty)))
        for p in alg.unblock_props(props, tag):
            base = unfold(p)
            if isinstance(base, (BlockedP, PVar)) or base.tag != tag:
                continue
            out.extend(self._check_prophecy(base, tag, res_ty, span))
        return out

    def _check_prophecy(self, p: Proph, tag: str, res_ty: S.Ty, span: S.Span) -> list[Violation]:
        alg = self.alg
        out = []
        elem = alg.render_prop(p)
        obs, pred = p.observed, p.predicted
        if p.compositional:
            ok = alg.leq(obs, pred)
            self._note("V-Effects", f"cprophecy {tag}: observation below prediction", span,
                       alg.render(obs), alg.render(pred), ok, (obs, pred))
            if not ok:
                out.append(Violation("cprophecy", elem, "observed effect exceeds the prediction", alg.render(obs), alg.render(pred)))
        else:
            pp = alg.unblock_props(pred.props, tag)
            pc = alg._norm_ctls(alg.unblock_controls(pred.controls, tag))
            checks = [
                ("prophecies", alg.props_leq(obs.props, pp), obs.props, pp,
                 lambda s: "{" + ", ".join(sorted(alg.render_prop(x) for x in s)) + "}"),
                ("controls", alg.controls_leq(obs.controls, pc), obs.controls, pc,
                 lambda s: "{" + ", ".join(sorted(alg.render_ctl(x) for x in s)) + "}"),
                ("underlying", alg.opt_leq(obs.under, pred.under), obs.under, pred.under, alg.render_under),
            ]
            for part, ok, left, right, show in checks:
                self._note("V-Effects", f"prophecy {tag}: observed {part} below predicted", span,
                           show(left), show(right), ok, (left, right))
                if not ok:
                    out.append(Violation("prophecy", elem, f"observed {part} exceed the prediction", show(left), show(right)))
        ok = self.sub.sub(res_ty, p.result)
        if not ok:
            out.append(Violation("cprophecy" if p.compositional else "prophecy", elem,
                                 "prompt type is not a subtype of the predicted result", self._show(res_ty), self._show(p.result)))
        return out

    def prompt_effect(self, props: Iterable, controls: Iterable, under: Any, tag: str, handler_under: Any) -> CEff:
        alg = self.alg
        up = alg.unblock_props(props, tag)
        uc = alg._norm_ctls(alg.unblock_controls(controls, tag))
        u = under
        for extra in alg.project(uc, handler_under, tag):
            u = alg.opt_join(u, extra)
        return alg.make(alg.filter_props(up, handler_under, tag), alg.filter_controls(uc, tag), u)

    def _note(self, rule, text, span, left, right, holds, values=None) -> None:
        self._notes.append(Note(rule, text, span, left, right, holds, values))

    # derived rules

    def derived_infloop(self, body: CEff) -> CEff:
        return self.alg.iterate(body)

    def derived_while(self, cond_u: Any, body_u: Any) -> CEff:
        alg = self.alg
        return alg.pure(alg.opt_seq(cond_u, alg.opt_iterate(alg.opt_seq(body_u, cond_u))))

    def derived_aborting_while(self, cond: CEff, body: CEff, loop_tag: str) -> CEff:
        alg = self.alg
        for name, x in (("condition", cond), ("body", body)):
            if x.props:
                raise TypeCheckError("D-AbortingWhile", f"{name} captures continuations")
            for c in x.controls:
                if not isinstance(c, Abort):
                    raise TypeCheckError("D-AbortingWhile", f"{name} has a non-abort control effect {alg.render_ctl(c)}")
                if c.tag == loop_tag:
                    raise TypeCheckError("D-AbortingWhile", f"{name} aborts to the loop tag {loop_tag}")
        qc, qe = cond.under, body.under
        star = alg.opt_iterate(alg.opt_seq(qe, qc))
        head = alg.opt_seq(qc, star)
        ctls = [
            *cond.controls,
            *alg.left_acc_set(alg.opt_seq(qc, qe), cond.controls),
            *alg.left_acc_set(head, body.controls),
            *alg.left_acc_set(alg.opt_seq(head, qe), cond.controls),
        ]
        return alg.make((), ctls, head)

    def derived_trycatch(self, body: CEff, exn_tag: str, exn_ty: S.Ty, handler_u: Any) -> CEff:
        alg = self.alg
        if body.props:
            raise TypeCheckError("D-TryCatch", "body captures continuations")
        caught, others = None, []
        for c in body.controls:
            if not isinstance(c, Abort):
                raise TypeCheckError("D-TryCatch", f"body has a non-abort control effect {alg.render_ctl(c)}")
            if c.tag == exn_tag:
                if not self.sub.annot_eq(c.thrown, exn_ty):
                    raise TypeCheckError("D-TryCatch", "thrown type differs from the caught type",
                                         left=self._show(c.thrown), right=self._show(exn_ty))
                caught = alg.opt_join(caught, c.prefix)
            else:
                others.append(c)
        under = body.under
        if caught is not None:
            under = alg.opt_join(under, alg.opt_seq(caught, handler_u))
        return alg.make((), others, under)

    def derived_throw(self, arg_u: Any, exn_name: str, exn_ty: S.Ty) -> CEff:
        alg = self.alg
        return alg.make((), alg.left_acc_set(arg_u, [Abort(S.exn_tag(exn_name), self.q.unit, exn_ty)]), None)

    def genprophs_check(self, props: Iterable, gen: str, e_under: Any, elem_ty: S.Ty) -> list[Violation]:
        """Every prophecy targets ``gen`` and is validated by its own prediction."""
        alg = self.alg
        estar = alg.opt_iterate(e_under)
        opt_ty = S.TOption(elem_ty)
        bound = [Abort(gen, estar, opt_ty)]
        out: list[Violation] = []
        seen: set = set()

        def visit(ps: Iterable) -> None:
            for p in ps:
                while isinstance(p, BlockedP):
                    p = p.inner
                if isinstance(p, PVar):
                    continue
                if isinstance(p, Mu):
                    if p in seen:
                        continue
                    seen.add(p)
                    p = unfold(p)
                    visit([p])
                    continue
                check(p)

        def check(p: Proph) -> None:
            elem = alg.render_prop(p)

            def fail(clause: str, msg: str, left: str | None = None, right: str | None = None) -> None:
                out.append(Violation(clause, elem, msg, left, right))

            if p.tag != gen:
                fail("tag", f"targets {p.tag} instead of {gen}")
                return
            if not self.sub.annot_eq(p.result, opt_ty):
                fail("result", "result type is not the generator's option type", self._show(p.result), self._show(opt_ty))
            pred, obs = p.predicted, p.observed
            if not alg.controls_leq(pred.controls, bound):
                fail("predicted controls", "prediction has controls beyond aborting to the generator",
                     alg.render(CEff(frozenset(), pred.controls, None)), alg.render_ctl(bound[0]))
            if not alg.opt_leq(pred.under, estar):
                fail("predicted underlying", "prediction exceeds the iterated step effect",
                     alg.render_under(pred.under), alg.render_under(estar))
            if not alg.props_leq(alg.unblock_props(obs.props, gen), alg.unblock_props(pred.props, gen)):
                fail("observed prophecies", "observed prophecies exceed the prediction")
            if not alg.controls_leq(obs.controls, pred.controls):
                fail("observed controls", "observed controls exceed the prediction",
                     alg.render(CEff(frozenset(), obs.controls, None)), alg.render(CEff(frozenset(), pred.controls, None)))
            if not alg.opt_leq(obs.under, pred.under):
                fail("observed underlying", "observed underlying effect exceeds the prediction",
                     alg.render_under(obs.under), alg.render_under(pred.under))
            visit(pred.props)

        visit(props)
        return out

    def derived_iterate(self, f_ty: S.Ty, init: str, gen: str, elem_ty: S.Ty, e_under: Any) -> TypingOutcome:
        alg = self.alg
        rule = "D-Iterate"
        opt_ty = S.TOption(elem_ty)
        estar = alg.opt_iterate(e_under)
        yield_abort = alg.make((), [Abort(gen, self.q.unit, opt_ty)], None)

        outer = unfold_ty(f_ty)
        if not isinstance(outer, S.TFun):
            raise TypeCheckError(rule, "generator body must be a two-argument function", left=self._show(f_ty))
        inner = unfold_ty(outer.res)
        if not isinstance(inner, S.TFun):
            raise TypeCheckError(rule, "generator body must be a two-argument function", left=self._show(f_ty))
        if not alg.leq(outer.latent, alg.unit):
            raise TypeCheckError(rule, "taking the first argument must be effect-free", left=alg.render(outer.latent))
        yt = unfold_ty(outer.arg)
        if not (isinstance(yt, S.TFun) and self.sub.annot_eq(yt.arg, elem_ty) and self.sub.annot_eq(yt.res, S.UNIT)):
            raise TypeCheckError(rule, "first parameter must be the yield function", left=self._show(outer.arg))
        ylat = yt.latent
        yprops = [p for p in ylat.props if isinstance(p, Proph)]
        if len(yprops) != 1 or len(ylat.props) != 1 or ylat.under is not None:
            raise TypeCheckError(rule, "yield must capture exactly once and never return directly", left=alg.render(ylat))
        yp = yprops[0]
        if (
            yp.tag != gen
            or yp.compositional
            or not self.sub.annot_eq(yp.result, opt_ty)
            or not alg.leq(yp.observed, alg.unit)
            or not alg.controls_leq(ylat.controls, yield_abort.controls)
            or not alg.controls_leq(yield_abort.controls, ylat.controls)
            or not alg.opt_leq(yp.predicted.under, estar)
        ):
            raise TypeCheckError(rule, "yield's latent effect does not have the generator shape", left=alg.render(ylat))
        ft = unfold_ty(inner.arg)
        if not (
            isinstance(ft, S.TFun)
            and self.sub.annot_eq(ft.arg, S.UNIT)
            and self.sub.annot_eq(ft.res, S.UNIT)
            and alg.equiv(ft.latent, yield_abort)
        ):
            raise TypeCheckError(rule, "second parameter must be the finish function", left=self._show(inner.arg))
        if not self.sub.sub(inner.res, S.UNIT):
            raise TypeCheckError(rule, "generator body must return unit", left=self._show(inner.res))
        lat = inner.latent
        if not alg.opt_leq(lat.under, estar):
            raise TypeCheckError(rule, "generator body's underlying effect exceeds E*",
                                 left=alg.render_under(lat.under), right=alg.render_under(estar))
        bound = [Abort(gen, estar, opt_ty)]
        if not alg.controls_leq(lat.controls, bound):
            raise TypeCheckError(rule, "generator body has control effects beyond aborting to the generator",
                                 left=alg.render(CEff(frozenset(), lat.controls, None)), right=alg.render_ctl(bound[0]))
        violations = self.genprophs_check(lat.props, gen, e_under, elem_ty)
        if violations:
            raise TypeCheckError(rule, "generator prophecies are not self-validating", violations=violations)
        return TypingOutcome(S.TFun(S.UNIT, alg.pure(estar), opt_ty), alg.unit, [
            Note(rule, f"iterate {init} {gen}: latent effect {alg.render(alg.pure(estar))}")
        ])
