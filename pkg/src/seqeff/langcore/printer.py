"""Printing types and expressions back to surface syntax."""

from __future__ import annotations

from collections.abc import Callable

from ..conteffect import CEff
from . import syntax as S


class Printer:
    def __init__(self, render_eff: Callable[[CEff], str], unit_eff: Callable[[], CEff]):
        self.render_eff = render_eff
        self.unit_eff = unit_eff

    def ty(self, t: S.Ty) -> str:
        if isinstance(t, S.TUnit):
            return "unit"
        if isinstance(t, S.TBool):
            return "bool"
        if isinstance(t, S.TAny):
            return "any"
        if isinstance(t, S.TPrim):
            return t.name
        if isinstance(t, S.TVar):
            return t.var
        if isinstance(t, S.TFun):
            if t.latent == self.unit_eff():
                return f"(-> {self.ty(t.arg)} {self.ty(t.res)})"
            return f"(-> {self.ty(t.arg)} {self.render_eff(t.latent)} {self.ty(t.res)})"
        if isinstance(t, S.TCont):
            return f"(cont {t.tag} {self.ty(t.arg)} {self.render_eff(t.latent)} {self.ty(t.res)})"
        if isinstance(t, S.TComp):
            return f"(comp {self.ty(t.arg)} {self.render_eff(t.latent)} {self.ty(t.res)})"
        if isinstance(t, S.TMu):
            return f"(mu {t.var} {self.ty(t.body)})"
        if isinstance(t, S.TOption):
            return f"(option {self.ty(t.elem)})"
        if isinstance(t, S.TRef):
            return f"(ref {self.ty(t.elem)})"
        if isinstance(t, S.TSum):
            return f"(sum {self.ty(t.left)} {self.ty(t.right)})"
        raise TypeError(f"not a type: {t!r}")

    def expr(self, e: S.Expr) -> str:
        p = self.expr
        match e:
            case S.Var(name):
                return name
            case S.Lit(v):
                if v is None:
                    return "#u"
                if v is True:
                    return "#t"
                if v is False:
                    return "#f"
                return str(v)
            case S.Lam(x, t, body):
                return f"(lambda ({x} : {self.ty(t)}) {p(body)})"
            case S.App(f, a):
                return f"({p(f)} {p(a)})"
            case S.If(c, t, o):
                return f"(if {p(c)} {p(t)} {p(o)})"
            case S.Prompt(tag, body, h):
                return f"(prompt {tag} {p(body)} {p(h)})"
            case S.CallCC(tag, pred, res, fn):
                return f"(callcc {tag} {self.render_eff(pred)} {self.ty(res)} {p(fn)})"
            case S.CallComp(tag, pred, res, fn):
                return f"(callcomp {tag} {self.render_eff(pred)} {self.ty(res)} {p(fn)})"
            case S.AbortE(tag, t, a):
                return f"(abort {tag} {self.ty(t)} {p(a)})"
            case S.Event(sym):
                return f"(event {sym})"
            case S.PrimApp(name, args):
                return f"({name} {' '.join(p(a) for a in args)})"
            case S.Let(x, b, body):
                return f"(let ({x} {p(b)}) {p(body)})"
            case S.Seq(a, b):
                return f"(seq {p(a)} {p(b)})"
            case S.Inj(right, other, a):
                return f"({'inr' if right else 'inl'} {self.ty(other)} {p(a)})"
            case S.Case(s, lx, lb, rx, rb):
                return f"(case {p(s)} ({lx} {p(lb)}) ({rx} {p(rb)}))"
            case S.SomeE(a):
                return f"(some {p(a)})"
            case S.NoneE(t):
                return f"(none {self.ty(t)})"
            case S.CaseOpt(s, n, x, sb):
                return f"(case-opt {p(s)} {p(n)} ({x} {p(sb)}))"
            case S.LoopM(body):
                return f"(loop {p(body)})"
            case S.WhileM(c, body):
                return f"(while {p(c)} {p(body)})"
            case S.TryCatchM(body, exn, h):
                return f"(try {p(body)} (catch {exn} {p(h)}))"
            case S.ThrowM(exn, a):
                return f"(throw {exn} {p(a)})"
            case S.IterateM(init, gen, fn):
                return f"(iterate {init} {gen} {p(fn)})"
            case S.ContV(tag=tag):
                return f"#<cont {tag}>"
            case S.CompV(tag=tag):
                return f"#<comp {tag}>"
            case S.Loc(addr, _):
                return f"#<cell {addr}>"
            case S.Hole():
                return "[]"
        raise TypeError(f"not an expression: {e!r}")
