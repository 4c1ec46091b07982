"""Continuation effects over an arbitrary effect quantale.

A continuation effect is a triple ``(P, C, Q)``: a set of prophecies about
captured continuations, a set of control effects (aborts and continuation
replacements, possibly blocked until a prompt tag), and an optional
underlying effect, where ``None`` stands for "never returns normally".

All values are immutable and hashable.  Operations live on
:class:`EffectAlgebra`, which is bound to one quantale and one notion of
equality for the opaque result-type annotations.
"""

from __future__ import annotations

import itertools
import random
from collections.abc import Callable, Iterable
from dataclasses import dataclass, fields
from typing import Any, Union

from .quantale import ERR, LawReport, LawResult, Quantale

__all__ = [
    "Replace",
    "Abort",
    "Blocked",
    "Proph",
    "BlockedP",
    "Mu",
    "PVar",
    "CEff",
    "Control",
    "Prophecy",
    "EffectAlgebra",
    "IterationDivergence",
    "outer_tag",
    "random_effect",
    "effect_law_suite",
    "iterate_audit",
]


class _Hashed:
    """Structural equality with a cached hash."""

    def _key(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))  # type: ignore[arg-type]

    def __hash__(self) -> int:
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_h", h)
        return h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        return hash(self) == hash(other) and self._key() == other._key()  # type: ignore[attr-defined]

    def __ne__(self, other: object) -> bool:
        return not self.__eq__(other)


@dataclass(frozen=True, eq=False)
class Replace(_Hashed):
    tag: str
    prefix: Any
    result: Any


@dataclass(frozen=True, eq=False)
class Abort(_Hashed):
    tag: str
    prefix: Any
    thrown: Any


@dataclass(frozen=True, eq=False)
class Blocked(_Hashed):
    inner: Control
    until: str


Control = Union[Replace, Abort, Blocked]


@dataclass(frozen=True, eq=False)
class Proph(_Hashed):
    tag: str
    predicted: CEff
    result: Any
    observed: CEff
    compositional: bool = False


@dataclass(frozen=True, eq=False)
class BlockedP(_Hashed):
    inner: Prophecy
    until: str


@dataclass(frozen=True, eq=False)
class Mu(_Hashed):
    binder: str
    body: Prophecy


@dataclass(frozen=True, eq=False)
class PVar(_Hashed):
    name: str


Prophecy = Union[Proph, BlockedP, Mu, PVar]


@dataclass(frozen=True, eq=False)
class CEff(_Hashed):
    props: frozenset = frozenset()
    controls: frozenset = frozenset()
    under: Any = None

    def __repr__(self) -> str:
        return f"CEff({set(self.props) or '{}'}; {set(self.controls) or '{}'}; {self.under!r})"


class IterationDivergence(Exception):
    """The bounded exact iteration is not covered by the recursive-prophecy form."""


def outer_tag(item: Control | Prophecy) -> str | None:
    if isinstance(item, (Blocked, BlockedP)):
        return item.until
    if isinstance(item, (Replace, Abort, Proph)):
        return item.tag
    if isinstance(item, Mu):
        return outer_tag(item.body)
    return None


def _ctl_parts(c: Control) -> tuple[tuple[str, ...], Control]:
    blocks: list[str] = []
    while isinstance(c, Blocked):
        blocks.append(c.until)
        c = c.inner
    return tuple(blocks), c


def _rewrap_ctl(blocks: tuple[str, ...], c: Control) -> Control:
    for t in reversed(blocks):
        c = Blocked(c, t)
    return c


def _prop_parts(p: Prophecy) -> tuple[tuple[str, ...], Prophecy]:
    blocks: list[str] = []
    while isinstance(p, BlockedP):
        blocks.append(p.until)
        p = p.inner
    return tuple(blocks), p


def _rewrap_prop(blocks: tuple[str, ...], p: Prophecy) -> Prophecy:
    for t in reversed(blocks):
        p = BlockedP(p, t)
    return p


def _binders(p: Prophecy | CEff, out: set[str]) -> set[str]:
    if isinstance(p, CEff):
        for q in p.props:
            _binders(q, out)
    elif isinstance(p, Mu):
        out.add(p.binder)
        _binders(p.body, out)
    elif isinstance(p, BlockedP):
        _binders(p.inner, out)
    elif isinstance(p, Proph):
        _binders(p.predicted, out)
        _binders(p.observed, out)
    return out


class EffectAlgebra:
    """Continuation-effect operations over one underlying quantale.

    ``annot_eq`` decides equality of the result-type annotations carried by
    control effects and prophecies; it defaults to structural equality.
    """

    def __init__(
        self,
        q: Quantale,
        annot_eq: Callable[[Any, Any], bool] | None = None,
        render_annot: Callable[[Any], str] = str,
    ):
        self.q = q
        self.annot_eq = annot_eq or (lambda a, b: a == b)
        self.render_annot = render_annot
        self._seq_cache: dict[tuple[CEff, CEff], CEff] = {}
        self._leq_cache: dict[tuple[CEff, CEff], bool] = {}
        self._top_cache: dict[CEff, bool] = {}

    # constructors

    @property
    def unit(self) -> CEff:
        return CEff(frozenset(), frozenset(), self.q.unit)

    @property
    def bot(self) -> CEff:
        return CEff()

    def pure(self, u: Any) -> CEff:
        return CEff(frozenset(), frozenset(), u)

    def make(self, props: Iterable[Prophecy] = (), controls: Iterable[Control] = (), under: Any = None) -> CEff:
        """Build a normalized effect: same-keyed entries are merged by joining."""
        return CEff(self._norm_props(props), self._norm_ctls(controls), under)

    def normalize(self, x: CEff) -> CEff:
        return self.make(x.props, x.controls, x.under)

    def _norm_ctls(self, cs: Iterable[Control]) -> frozenset:
        groups: dict[tuple, Any] = {}
        for c in cs:
            blocks, base = _ctl_parts(c)
            key = (blocks, type(base), base.tag, base.result if isinstance(base, Replace) else base.thrown)
            prev = groups.get(key)
            groups[key] = base.prefix if prev is None else self.q.join(prev, base.prefix)
        out = set()
        for (blocks, kind, tag, annot), pre in groups.items():
            out.add(_rewrap_ctl(blocks, kind(tag, pre, annot)))
        return frozenset(out)

    def _norm_props(self, ps: Iterable[Prophecy]) -> frozenset:
        groups: dict[tuple, CEff] = {}
        others: set[Prophecy] = set()
        for p in ps:
            blocks, base = _prop_parts(p)
            if not isinstance(base, Proph):
                others.add(p)
                continue
            key = (blocks, base.tag, base.predicted, base.result, base.compositional)
            prev = groups.get(key)
            groups[key] = base.observed if prev is None else self.join(prev, base.observed)
        out = set(others)
        for (blocks, tag, pred, res, comp), obs in groups.items():
            out.add(_rewrap_prop(blocks, Proph(tag, pred, res, obs, comp)))
        return frozenset(out)

    # lifted underlying operations

    def opt_seq(self, a: Any, b: Any) -> Any:
        if a is ERR or b is ERR:
            return ERR
        if a is None or b is None:
            return None
        return self.q.seq(a, b)

    def opt_join(self, a: Any, b: Any) -> Any:
        if a is ERR or b is ERR:
            return ERR
        if a is None:
            return b
        if b is None:
            return a
        return self.q.join(a, b)

    def opt_leq(self, a: Any, b: Any) -> bool:
        if a is None:
            return True
        if b is None:
            return False
        return self.q.leq(a, b)

    def opt_iterate(self, a: Any) -> Any:
        # the least subidempotent element above (a join unit); for an absent
        # effect that is the unit itself
        return self.q.unit if a is None else self.q.iterate(a)

    # accumulation

    def left_acc(self, u: Any, c: Control) -> Control:
        if isinstance(c, Blocked):
            return Blocked(self.left_acc(u, c.inner), c.until)
        if isinstance(c, Replace):
            return Replace(c.tag, self.q.seq(u, c.prefix), c.result)
        return Abort(c.tag, self.q.seq(u, c.prefix), c.thrown)

    def left_acc_set(self, u: Any, cs: Iterable[Control]) -> frozenset:
        if u is None:
            return frozenset()
        return frozenset(self.left_acc(u, c) for c in cs)

    def right_acc(self, p: Prophecy, x: CEff) -> Prophecy:
        if isinstance(p, (BlockedP, PVar)):
            return p
        if isinstance(p, Mu):
            return Mu(p.binder, self.right_acc(p.body, x))
        return Proph(p.tag, p.predicted, p.result, self.seq(p.observed, x), p.compositional)

    def right_acc_set(self, ps: Iterable[Prophecy], x: CEff) -> list[Prophecy]:
        return [self.right_acc(p, x) for p in ps]

    # sequencing and join

    def seq(self, x: CEff, y: CEff) -> CEff:
        key = (x, y)
        hit = self._seq_cache.get(key)
        if hit is not None:
            return hit
        props = self.right_acc_set(x.props, y) + list(y.props)
        ctls = itertools.chain(x.controls, self.left_acc_set(x.under, y.controls))
        out = self.make(props, ctls, self.opt_seq(x.under, y.under))
        if len(self._seq_cache) > 200_000:
            self._seq_cache.clear()
        self._seq_cache[key] = out
        return out

    def seq_all(self, *xs: CEff) -> CEff:
        acc = self.unit
        for x in xs:
            acc = self.seq(acc, x)
        return acc

    def join(self, x: CEff, y: CEff) -> CEff:
        return self.make(
            itertools.chain(x.props, y.props),
            itertools.chain(x.controls, y.controls),
            self.opt_join(x.under, y.under),
        )

    def join_all(self, xs: Iterable[CEff]) -> CEff:
        acc: CEff | None = None
        for x in xs:
            acc = x if acc is None else self.join(acc, x)
        return self.bot if acc is None else acc

    # order and equivalence

    def leq(self, x: CEff, y: CEff) -> bool:
        key = (x, y)
        hit = self._leq_cache.get(key)
        if hit is None:
            hit = self._leq(self.normalize(x), self.normalize(y), frozenset())
            if len(self._leq_cache) > 200_000:
                self._leq_cache.clear()
            self._leq_cache[key] = hit
        return hit

    def _leq(self, x: CEff, y: CEff, assume: frozenset) -> bool:
        return (
            self.opt_leq(x.under, y.under)
            and self.controls_leq(x.controls, y.controls)
            and self._props_leq(x.props, y.props, assume)
        )

    def controls_leq(self, c1: Iterable[Control], c2: Iterable[Control]) -> bool:
        c2 = list(c2)
        return all(any(self._ctl_leq(c, d) for d in c2) for c in c1)

    def _ctl_leq(self, c: Control, d: Control) -> bool:
        if isinstance(c, Blocked):
            return isinstance(d, Blocked) and c.until == d.until and self._ctl_leq(c.inner, d.inner)
        if type(c) is not type(d) or c.tag != d.tag:
            return False
        ca = c.result if isinstance(c, Replace) else c.thrown
        da = d.result if isinstance(d, Replace) else d.thrown
        return self.annot_eq(ca, da) and self.q.leq(c.prefix, d.prefix)

    def props_leq(self, p1: Iterable[Prophecy], p2: Iterable[Prophecy]) -> bool:
        return self._props_leq(p1, p2, frozenset())

    def _props_leq(self, p1: Iterable[Prophecy], p2: Iterable[Prophecy], assume: frozenset) -> bool:
        p2 = list(p2)
        return all(any(self._prop_leq(p, d, assume) for d in p2) for p in p1)

    def _prop_leq(self, p: Prophecy, d: Prophecy, assume: frozenset) -> bool:
        if isinstance(p, Mu) or isinstance(d, Mu):
            if (p, d) in assume:
                return True
            assume = assume | {(p, d)}
            return self._prop_leq(unfold(p), unfold(d), assume)
        if isinstance(p, BlockedP):
            return isinstance(d, BlockedP) and p.until == d.until and self._prop_leq(p.inner, d.inner, assume)
        if not isinstance(p, Proph) or not isinstance(d, Proph):
            return p == d
        return (
            p.tag == d.tag
            and p.compositional == d.compositional
            and self.annot_eq(p.result, d.result)
            and self._same_prediction(p.predicted, d.predicted, assume)
            and self._leq(p.observed, d.observed, assume)
        )

    def _same_prediction(self, a: CEff, b: CEff, assume: frozenset) -> bool:
        return a == b or (self._leq(a, b, assume) and self._leq(b, a, assume))

    def has_top(self, x: CEff) -> bool:
        hit = self._top_cache.get(x)
        if hit is None:
            hit = (
                x.under is ERR
                or any(self._ctl_top(c) for c in x.controls)
                or any(self._prop_top(p) for p in x.props)
            )
            self._top_cache[x] = hit
        return hit

    def _ctl_top(self, c: Control) -> bool:
        _, base = _ctl_parts(c)
        return base.prefix is ERR

    def _prop_top(self, p: Prophecy) -> bool:
        _, base = _prop_parts(p)
        if isinstance(base, Mu):
            return self._prop_top(base.body)
        if isinstance(base, PVar):
            return False
        return self.has_top(base.predicted) or self.has_top(base.observed)

    def equiv(self, x: CEff, y: CEff) -> bool:
        tx, ty = self.has_top(x), self.has_top(y)
        if tx or ty:
            return tx and ty
        return self.leq(x, y) and self.leq(y, x)

    # blocking

    def block_controls(self, cs: Iterable[Control], tag: str) -> frozenset:
        return frozenset(c if isinstance(c, Blocked) and c.until == tag else Blocked(c, tag) for c in cs)

    def block_props(self, ps: Iterable[Prophecy], tag: str) -> frozenset:
        out = set()
        for p in ps:
            base = p.body if isinstance(p, Mu) else p
            out.add(p if isinstance(base, BlockedP) and base.until == tag else BlockedP(p, tag))
        return frozenset(out)

    def unblock_controls(self, cs: Iterable[Control], tag: str) -> frozenset:
        return frozenset(c.inner if isinstance(c, Blocked) and c.until == tag else c for c in cs)

    def unblock_props(self, ps: Iterable[Prophecy], tag: str) -> frozenset:
        return self._norm_props(self._unblock_prop(p, tag) for p in ps)

    def _unblock_prop(self, p: Prophecy, tag: str) -> Prophecy:
        if isinstance(p, PVar):
            return p
        if isinstance(p, Mu):
            return Mu(p.binder, self._unblock_prop(p.body, tag))
        if isinstance(p, BlockedP):
            if p.until != tag:
                return p
            inner = p.inner
            if isinstance(inner, BlockedP):
                return inner
            return self._unblock_prop(inner, tag)
        obs = p.observed
        new_obs = CEff(self.unblock_props(obs.props, tag), self._norm_ctls(self.unblock_controls(obs.controls, tag)), obs.under)
        return Proph(p.tag, p.predicted, p.result, new_obs, p.compositional)

    def unblock(self, x: CEff, tag: str) -> CEff:
        return self.make(self.unblock_props(x.props, tag), self.unblock_controls(x.controls, tag), x.under)

    # prompt auxiliaries

    def filter_controls(self, cs: Iterable[Control], tag: str) -> frozenset:
        return frozenset(c for c in cs if outer_tag(c) != tag)

    def project(self, cs: Iterable[Control], handler: Any, tag: str) -> list[Any]:
        out = []
        for c in cs:
            if isinstance(c, Abort) and c.tag == tag:
                if handler is not None:
                    out.append(self.q.seq(c.prefix, handler))
            elif isinstance(c, Replace) and c.tag == tag:
                out.append(c.prefix)
        return out

    def filter_props(self, ps: Iterable[Prophecy], handler: Any, tag: str) -> frozenset:
        return self._norm_props(self._filter_prop(p, handler, tag) for p in ps if outer_tag(p) != tag)

    def _filter_prop(self, p: Prophecy, handler: Any, tag: str) -> Prophecy:
        if isinstance(p, (PVar, BlockedP)):
            return p
        if isinstance(p, Mu):
            return Mu(p.binder, self._filter_prop(p.body, handler, tag))
        obs = p.observed
        u = obs.under
        for extra in self.project(obs.controls, handler, tag):
            u = self.opt_join(u, extra)
        new_obs = CEff(
            self.filter_props(obs.props, handler, tag),
            self.filter_controls(obs.controls, tag),
            u,
        )
        return Proph(p.tag, p.predicted, p.result, new_obs, p.compositional)

    # iteration

    def nontrivial(self, x: CEff) -> bool:
        return bool(x.controls) or x.under is not None

    def iterate(self, x: CEff, audit_bound: int | None = None) -> CEff:
        """Lax iteration; prophecies are closed off with recursive prophecies.

        With ``audit_bound`` the exact finite unrolling up to that many
        repetitions is computed and must be covered by the result.
        """
        us = self.opt_iterate(x.under)
        cs = self.left_acc_set(us, x.controls)
        if not x.props:
            return self.make((), cs, us)
        props = self._mu_closure(sorted(x.props, key=repr), cs, us)
        out = self.make(props, cs, us)
        if audit_bound is not None:
            exact = self.bounded_prophecy_union(x, audit_bound)
            if not self.props_leq(exact, out.props):
                raise IterationDivergence(
                    f"bounded union up to {audit_bound} repetitions is not below the recursive form"
                )
        return out

    def _mu_closure(self, ps: list[Prophecy], cs: frozenset, us: Any) -> list[Prophecy]:
        # each p becomes p accumulated with (P*, us;C, us), where P* is the set
        # being defined; mutual recursion is expressed by nesting binders
        live = [i for i, p in enumerate(ps) if not isinstance(p, (BlockedP, PVar))]
        taken: set[str] = set()
        for p in ps:
            _binders(p, taken)
        fresh = (f"R{n}" for n in itertools.count() if f"R{n}" not in taken)
        names = {i: next(fresh) for i in live}

        def build(i: int, bound: dict[int, PVar]) -> Prophecy:
            bound = {**bound, i: PVar(names[i])}
            members = [bound[j] if j in bound else build(j, bound) for j in live]
            tail = CEff(frozenset(members), cs, us)
            return Mu(names[i], self.right_acc(ps[i], tail))

        out: list[Prophecy] = [p for i, p in enumerate(ps) if i not in names]
        out.extend(build(i, {}) for i in live)
        return out

    def power(self, x: CEff, n: int) -> CEff:
        acc = self.unit
        for _ in range(n):
            acc = self.seq(acc, x)
        return acc

    def bounded_prophecy_union(self, x: CEff, n: int) -> frozenset:
        """The prophecies of x accumulated with x^i for every i up to n."""
        out: list[Prophecy] = []
        acc = self.unit
        for _ in range(n + 1):
            out.extend(self.right_acc_set(x.props, acc))
            acc = self.seq(acc, x)
        return self._norm_props(out)

    # rendering

    def render(self, x: CEff) -> str:
        ps = ", ".join(sorted(self.render_prop(p) for p in x.props))
        cs = ", ".join(sorted(self.render_ctl(c) for c in x.controls))
        return "{" + ps + " | " + cs + " | " + self.render_under(x.under) + "}"

    def render_under(self, u: Any) -> str:
        return "_|_" if u is None else self.q.render(u)

    def render_ctl(self, c: Control) -> str:
        if isinstance(c, Blocked):
            return f"[{self.render_ctl(c.inner)}]@{c.until}"
        if isinstance(c, Replace):
            return f"replace {c.tag} : {self.q.render(c.prefix)} ~> {self.render_annot(c.result)}"
        return f"abort {c.tag} {self.q.render(c.prefix)} ~> {self.render_annot(c.thrown)}"

    def render_prop(self, p: Prophecy) -> str:
        if isinstance(p, PVar):
            return p.name
        if isinstance(p, Mu):
            return f"mu {p.binder}. {self.render_prop(p.body)}"
        if isinstance(p, BlockedP):
            return f"[{self.render_prop(p.inner)}]@{p.until}"
        kw = "cproph" if p.compositional else "proph"
        return (
            f"{kw} {p.tag} {self.render(p.predicted)} ~> {self.render_annot(p.result)}"
            f" obs {self.render(p.observed)}"
        )


def subst_prop(p: Prophecy, var: str, value: Prophecy) -> Prophecy:
    if isinstance(p, PVar):
        return value if p.name == var else p
    if isinstance(p, Mu):
        if p.binder == var:
            return p
        return Mu(p.binder, subst_prop(p.body, var, value))
    if isinstance(p, BlockedP):
        return BlockedP(subst_prop(p.inner, var, value), p.until)
    return Proph(
        p.tag,
        subst_ceff(p.predicted, var, value),
        p.result,
        subst_ceff(p.observed, var, value),
        p.compositional,
    )


def subst_ceff(x: CEff, var: str, value: Prophecy) -> CEff:
    if not x.props:
        return x
    return CEff(frozenset(subst_prop(p, var, value) for p in x.props), x.controls, x.under)


def unfold(p: Prophecy) -> Prophecy:
    """Replace a top-level recursive binder by one step of its unfolding."""
    while isinstance(p, Mu):
        p = subst_prop(p.body, p.binder, p)
    return p


# random effects and their laws


def random_effect(
    alg: EffectAlgebra,
    rng: random.Random,
    depth: int = 2,
    tags: tuple[str, ...] = ("t", "u"),
    annots: tuple[Any, ...] = ("unit", "nat"),
    with_props: bool = True,
) -> CEff:
    """A small random continuation effect; prophecies nest up to ``depth``."""
    q = alg.q

    def under():
        return q.sample(rng, 2)

    ctls: list[Control] = []
    for _ in range(rng.randint(0, 2)):
        kind = Abort if rng.random() < 0.5 else Replace
        c: Control = kind(rng.choice(tags), under(), rng.choice(annots))
        if rng.random() < 0.2:
            c = Blocked(c, rng.choice(tags))
        ctls.append(c)
    props: list[Prophecy] = []
    if with_props and depth > 0:
        for _ in range(rng.randint(0, 1)):
            inner = lambda: random_effect(alg, rng, depth - 1, tags, annots, with_props)  # noqa: E731
            p: Prophecy = Proph(rng.choice(tags), inner(), rng.choice(annots), inner())
            if rng.random() < 0.2:
                p = BlockedP(p, rng.choice(tags))
            props.append(p)
    u = None if rng.random() < 0.25 else under()
    return alg.make(props, ctls, u)


def _effect_laws(alg: EffectAlgebra):
    s, j, eq, le = alg.seq, alg.join, alg.equiv, alg.leq
    return [
        ("seq associative", 3, lambda x, y, z: eq(s(s(x, y), z), s(x, s(y, z)))),
        ("seq left unit", 1, lambda x: eq(s(alg.unit, x), x)),
        ("seq right unit", 1, lambda x: eq(s(x, alg.unit), x)),
        ("seq distributes left", 3, lambda x, y, z: eq(s(x, j(y, z)), j(s(x, y), s(x, z)))),
        ("seq distributes right", 3, lambda x, y, z: eq(s(j(x, y), z), j(s(x, z), s(y, z)))),
        ("join commutative", 2, lambda x, y: eq(j(x, y), j(y, x))),
        ("join idempotent", 1, lambda x: eq(j(x, x), x)),
        ("join upper bound", 2, lambda x, y: le(x, j(x, y))),
        ("iterate extensive", 1, lambda x: le(x, alg.iterate(x))),
        ("iterate above unit", 1, lambda x: le(alg.unit, alg.iterate(x))),
    ]


def effect_law_suite(alg: EffectAlgebra, n: int = 100, seed: int = 0, **sample_args) -> LawReport:
    """Algebraic laws of continuation effects, checked up to equivalence."""
    rng = random.Random(seed)
    report = LawReport(f"continuation effects over {alg.q.name}", n)
    for law, arity, check in _effect_laws(alg):
        res = LawResult(law)
        for _ in range(n):
            args = tuple(random_effect(alg, rng, **sample_args) for _ in range(arity))
            res.checked += 1
            if not check(*args):
                res.failures += 1
                if res.witness is None:
                    res.witness = args
        report.results.append(res)
    return report


def iterate_audit(alg: EffectAlgebra, n: int = 100, bound: int = 16, seed: int = 0) -> LawResult:
    """The exact union of prophecies over x^i for i up to ``bound`` lies below the recursive form."""
    rng = random.Random(seed)
    res = LawResult(f"iteration covers {bound} unrollings")
    while res.checked < n:
        x = random_effect(alg, rng, depth=1)
        if not x.props:
            continue
        res.checked += 1
        try:
            alg.iterate(x, audit_bound=bound)
        except IterationDivergence:
            res.failures += 1
            if res.witness is None:
                res.witness = (x,)
    return res
