import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqeff.conteffect import (
    Abort,
    Blocked,
    BlockedP,
    CEff,
    IterationDivergence,
    Proph,
    Replace,
    effect_law_suite,
    iterate_audit,
    random_effect,
)
from seqeff.langcore import syntax as S
from seqeff.quantale import ERR

from conftest import Kit

K = Kit()
A, Q = K.alg, K.q
NAT, UNIT = S.NAT, S.UNIT


def re(t):
    return K.re(t)


def eff(t):
    return K.eff(t)


def same(x, y):
    return A.equiv(x, y)


# lifted underlying operations

def test_optional_sequencing():
    assert A.opt_seq(re("a"), None) is None
    assert A.opt_seq(ERR, None) is ERR
    assert Q.equal(A.opt_seq(re("a"), re("b")), re("a.b"))


def test_optional_join():
    assert Q.equal(A.opt_join(None, re("a")), re("a"))
    assert A.opt_join(None, None) is None
    assert Q.equal(A.opt_join(re("a"), re("b")), re("a + b"))


# accumulation

def test_left_accumulation_of_one_control():
    assert A.left_acc(re("d"), Abort("t", Q.unit, NAT)) == Abort("t", re("d"), NAT)
    c = Replace("t", re("a"), UNIT)
    assert A.left_acc(Q.unit, c) == c
    blocked = Blocked(Abort("t2", Q.unit, NAT), "t")
    assert A.left_acc(re("d"), blocked) == Blocked(Abort("t2", re("d"), NAT), "t")


def test_left_accumulation_of_sets():
    cs = {Abort("t", Q.unit, NAT)}
    assert A.left_acc_set(None, cs) == frozenset()
    assert A.left_acc_set(Q.unit, cs) == frozenset(cs)
    assert A.left_acc_set(re("d"), cs) == {Abort("t", re("d"), NAT)}


def test_right_accumulation_updates_the_observation():
    p = Proph("t", eff("{ |  | a.b}"), UNIT, A.unit)
    out = A.right_acc(p, eff("{ |  | a}"))
    assert same(out.observed, eff("{ |  | a}"))
    blocked = BlockedP(p, "u")
    assert A.right_acc(blocked, eff("{ |  | a}")) == blocked
    assert same(A.right_acc(p, A.unit).observed, p.observed)


# sequencing and join

def test_sequencing_accumulates_abort_prefixes():
    x = A.seq_all(eff("{ |  | d}"), eff("{ | abort t %e ~> nat | a}"), eff("{ |  | b}"))
    assert same(x, eff("{ | abort t d ~> nat | d.a.b}"))


def test_sequencing_unit():
    x = eff("{ | abort t a ~> nat | b}")
    assert same(A.seq(A.unit, x), x)
    assert same(A.seq(x, A.unit), x)


def test_prophecy_observes_what_follows():
    p = "proph t { |  | a.b} ~> unit obs { |  | %e}"
    x = A.seq_all(eff("{" + p + " |  | %e}"), eff("{ |  | a}"), eff("{ |  | b}"))
    (q,) = x.props
    assert same(q.observed, eff("{ |  | a.b}"))
    assert Q.equal(x.under, re("a.b"))


def test_join_of_branches():
    assert same(A.join(eff("{ | abort t %e ~> nat | _|_}"), eff("{ |  | a}")), eff("{ | abort t %e ~> nat | a}"))


def test_join_keeps_both_prefixes_up_to_merging():
    x, y = eff("{ | abort l a ~> nat | _|_}"), eff("{ | abort l b ~> nat | _|_}")
    raw = CEff(frozenset(), x.controls | y.controls, None)
    assert len(raw.controls) == 2
    merged = A.join(x, y)
    assert len(merged.controls) == 1
    assert A.equiv(merged, raw)
    assert A.normalize(merged) == merged


# order

def test_each_abort_prefix_is_covered():
    assert A.leq(eff("{ | abort l a ~> nat, abort l b ~> nat | _|_}"), eff("{ | abort l a + b ~> nat | _|_}"))


def test_replacement_below_iterated_replacement():
    assert A.leq(eff("{ | replace t : a.a* ~> unit | _|_}"), eff("{ | replace t : a* ~> unit | _|_}"))


def test_order_is_reflexive():
    x = eff("{proph t { |  | a} ~> unit obs { |  | %e} | abort u b ~> nat | a}")
    assert A.leq(x, x)


def test_error_anywhere_collapses():
    x = A.make((), [Abort("l", ERR, NAT)], re("a"))
    assert A.has_top(x)
    assert A.equiv(x, A.pure(ERR))
    assert A.equiv(x, x)


def test_different_prefixes_are_not_equivalent():
    assert not A.equiv(eff("{ | abort l a ~> nat | _|_}"), eff("{ | abort l b ~> nat | _|_}"))


# blocking, filtering and projection

def test_unblocking():
    c = Abort("t2", Q.unit, NAT)
    assert A.unblock_controls({Blocked(c, "t")}, "t") == {c}
    plain = {Abort("t", re("a"), NAT)}
    assert A.unblock_controls(plain, "t") == plain
    other = {Blocked(c, "t3")}
    assert A.unblock_controls(other, "t") == other


def test_blocking_adds_one_layer():
    inner = Blocked(Abort("l", Q.unit, NAT), "l")
    assert A.block_controls({inner}, "l") == {inner}
    assert A.block_controls(set(), "l") == frozenset()
    assert A.block_controls({Abort("t2", Q.unit, NAT)}, "t") == {Blocked(Abort("t2", Q.unit, NAT), "t")}


def test_filtering_controls():
    assert A.filter_controls({Abort("l", re("a"), NAT)}, "l") == frozenset()
    keep = {Abort("m", re("a"), NAT)}
    assert A.filter_controls(keep, "l") == keep
    blocked = {Blocked(Abort("l", re("a"), NAT), "m")}
    assert A.filter_controls(blocked, "l") == blocked


def test_filtering_prophecies():
    mine = Proph("l", A.unit, UNIT, A.unit)
    assert A.filter_props({mine}, re("g"), "l") == frozenset()
    other = Proph("m", A.unit, UNIT, eff("{ | abort l a ~> nat | h}"))
    (kept,) = A.filter_props({other}, re("g"), "l")
    assert kept.tag == "m"
    assert same(kept.observed, eff("{ |  | h + a.g}"))
    assert A.filter_props(set(), re("g"), "l") == frozenset()


def test_projection():
    (u,) = A.project({Abort("t", Q.unit, NAT)}, re("g"), "t")
    assert Q.equal(u, re("g"))
    (u,) = A.project({Replace("t", re("d.h"), UNIT)}, re("g"), "t")
    assert Q.equal(u, re("d.h"))
    assert A.project({Abort("t2", re("a"), NAT)}, re("g"), "t") == []


# iteration

def test_iterating_pure_effects():
    assert same(A.iterate(eff("{ |  | a}")), eff("{ |  | a*}"))
    assert same(A.iterate(A.unit), A.unit)


def test_iterated_exits_follow_repetitions():
    got = A.iterate(eff("{ | abort l h ~> nat | a}"))
    assert same(got, eff("{ | abort l a*.h ~> nat | a*}"))


def test_nontrivial():
    assert not A.nontrivial(A.bot)
    assert A.nontrivial(A.unit)
    assert A.nontrivial(eff("{ | replace t : a* ~> unit | _|_}"))


def test_iteration_closes_prophecies_recursively():
    x = eff("{proph t { |  | a} ~> unit obs { |  | %e} |  | a}")
    out = A.iterate(x, audit_bound=8)
    assert "mu " in A.render(out)
    assert A.leq(x, out)


def test_iteration_audit_reports_divergence(monkeypatch):
    x = eff("{proph t { |  | a} ~> unit obs { |  | %e} |  | a}")
    monkeypatch.setattr(A, "props_leq", lambda a, b: False)
    with pytest.raises(IterationDivergence):
        A.iterate(x, audit_bound=2)


# laws on random effects

def test_effect_laws_hold():
    report = effect_law_suite(A, n=60, seed=11)
    assert report.passed, [(r.law, r.failures) for r in report.results]


def test_iteration_covers_unrollings():
    res = iterate_audit(A, n=30, bound=16, seed=5)
    assert res.checked == 30 and res.failures == 0


effects = st.integers(0, 100_000).map(lambda s: random_effect(A, random.Random(s), annots=(UNIT, NAT)))


@settings(max_examples=80, deadline=None)
@given(effects, effects, effects)
def test_sequencing_is_associative(x, y, z):
    assert A.equiv(A.seq(A.seq(x, y), z), A.seq(x, A.seq(y, z)))


@settings(max_examples=80, deadline=None)
@given(effects, effects, effects)
def test_sequencing_distributes_over_join(x, y, z):
    assert A.equiv(A.seq(x, A.join(y, z)), A.join(A.seq(x, y), A.seq(x, z)))
    assert A.equiv(A.seq(A.join(x, y), z), A.join(A.seq(x, z), A.seq(y, z)))


@settings(max_examples=80, deadline=None)
@given(effects, effects)
def test_join_is_least_upper_bound(x, y):
    j = A.join(x, y)
    assert A.leq(x, j) and A.leq(y, j)
    assert A.equiv(j, A.join(y, x))


@settings(max_examples=60, deadline=None)
@given(effects, effects)
def test_order_is_transitive_through_join(x, y):
    z = A.join(A.join(x, y), A.unit)
    assert A.leq(x, A.join(x, y)) and A.leq(A.join(x, y), z) and A.leq(x, z)


@settings(max_examples=60, deadline=None)
@given(effects)
def test_rendering_round_trips(x):
    assert A.equiv(K.eff(A.render(x)), x)


@settings(max_examples=60, deadline=None)
@given(effects)
def test_iteration_is_extensive_and_foldable(x):
    it = A.iterate(x)
    assert A.leq(x, it)
    assert A.leq(A.unit, it)
    assert A.leq(A.seq(x, it), it)


def _key(c):
    return (type(c), c.tag, getattr(c, "thrown", getattr(c, "result", None)))


@settings(max_examples=60, deadline=None)
@given(effects, effects)
def test_normalization_merges_by_joining_prefixes(x, y):
    raw = [c for c in x.controls | y.controls if not isinstance(c, Blocked)]
    merged = {_key(c): c for c in A.make((), raw).controls}
    assert len(merged) == len({_key(c) for c in raw})
    for k, c in merged.items():
        expected = Q.join_all(r.prefix for r in raw if _key(r) == k)
        assert Q.equal(c.prefix, expected)
    n = A.make((), raw)
    assert A.make(n.props, n.controls, n.under) == n
