"""Equirecursive subtyping.

Recursive types are compared by unfolding on demand; a set of pairs already
assumed related cuts the unfolding off, which is sound for contractive types.
"""

from __future__ import annotations

from collections.abc import Callable

from ..conteffect import Abort, Blocked, BlockedP, CEff, EffectAlgebra, Mu, Proph, PVar, Replace
from . import syntax as S


def map_ceff_types(x: CEff, f: Callable[[S.Ty], S.Ty]) -> CEff:
    """Apply ``f`` to every type annotation inside an effect."""
    if not x.props and not x.controls:
        return x

    def ctl(c):
        if isinstance(c, Blocked):
            return Blocked(ctl(c.inner), c.until)
        if isinstance(c, Replace):
            return Replace(c.tag, c.prefix, f(c.result))
        return Abort(c.tag, c.prefix, f(c.thrown))

    def prop(p):
        if isinstance(p, PVar):
            return p
        if isinstance(p, Mu):
            return Mu(p.binder, prop(p.body))
        if isinstance(p, BlockedP):
            return BlockedP(prop(p.inner), p.until)
        return Proph(p.tag, map_ceff_types(p.predicted, f), f(p.result), map_ceff_types(p.observed, f), p.compositional)

    return CEff(frozenset(prop(p) for p in x.props), frozenset(ctl(c) for c in x.controls), x.under)


def subst_ty(t: S.Ty, var: str, value: S.Ty) -> S.Ty:
    if isinstance(t, S.TVar):
        return value if t.var == var else t
    if isinstance(t, S.TMu):
        return t if t.var == var else S.TMu(t.var, subst_ty(t.body, var, value))
    if isinstance(t, S.TFun):
        return S.TFun(subst_ty(t.arg, var, value), _subst_eff(t.latent, var, value), subst_ty(t.res, var, value))
    if isinstance(t, S.TCont):
        return S.TCont(t.tag, subst_ty(t.arg, var, value), _subst_eff(t.latent, var, value), subst_ty(t.res, var, value))
    if isinstance(t, S.TComp):
        return S.TComp(subst_ty(t.arg, var, value), _subst_eff(t.latent, var, value), subst_ty(t.res, var, value))
    if isinstance(t, S.TOption):
        return S.TOption(subst_ty(t.elem, var, value))
    if isinstance(t, S.TRef):
        return S.TRef(subst_ty(t.elem, var, value))
    if isinstance(t, S.TSum):
        return S.TSum(subst_ty(t.left, var, value), subst_ty(t.right, var, value))
    return t


def _subst_eff(x: CEff, var: str, value: S.Ty) -> CEff:
    return map_ceff_types(x, lambda t: subst_ty(t, var, value))


def unfold_ty(t: S.Ty) -> S.Ty:
    while isinstance(t, S.TMu):
        t = subst_ty(t.body, t.var, t)
    return t


class Subtyper:
    """Subtyping relative to an effect algebra (for latent effects)."""

    def __init__(self, alg: EffectAlgebra | None = None):
        self.alg = alg
        self._cache: dict[tuple[S.Ty, S.Ty], bool] = {}

    def annot_eq(self, a: S.Ty, b: S.Ty) -> bool:
        return a == b or (self.sub(a, b) and self.sub(b, a))

    def sub(self, a: S.Ty, b: S.Ty) -> bool:
        key = (a, b)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._sub(a, b, frozenset())
            self._cache[key] = hit
        return hit

    def _sub(self, a: S.Ty, b: S.Ty, assume: frozenset) -> bool:
        if a == b or isinstance(a, S.TAny):
            return True
        if isinstance(a, S.TMu) or isinstance(b, S.TMu):
            if (a, b) in assume:
                return True
            return self._sub(unfold_ty(a), unfold_ty(b), assume | {(a, b)})
        if isinstance(a, S.TFun) and isinstance(b, S.TFun):
            return (
                self._sub(b.arg, a.arg, assume)
                and self._sub(a.res, b.res, assume)
                and self.alg.leq(a.latent, b.latent)
            )
        if isinstance(a, S.TCont) and isinstance(b, S.TCont):
            return (
                a.tag == b.tag
                and self._sub(b.arg, a.arg, assume)
                and self._sub(a.res, b.res, assume)
                and self.alg.leq(a.latent, b.latent)
            )
        if isinstance(a, S.TComp) and isinstance(b, S.TComp):
            return (
                self._sub(b.arg, a.arg, assume)
                and self._sub(a.res, b.res, assume)
                and self.alg.leq(a.latent, b.latent)
            )
        if isinstance(a, S.TOption) and isinstance(b, S.TOption):
            return self._same(a.elem, b.elem, assume)
        if isinstance(a, S.TRef) and isinstance(b, S.TRef):
            return self._same(a.elem, b.elem, assume)
        if isinstance(a, S.TSum) and isinstance(b, S.TSum):
            return self._same(a.left, b.left, assume) and self._same(a.right, b.right, assume)
        return False

    def _same(self, a: S.Ty, b: S.Ty, assume: frozenset) -> bool:
        return self._sub(a, b, assume) and self._sub(b, a, assume)

    def join(self, a: S.Ty, b: S.Ty) -> S.Ty | None:
        """The larger of two comparable types, or None."""
        if self.sub(a, b):
            return b
        if self.sub(b, a):
            return a
        return None
