import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqeff import reglang as rl
from seqeff.quantale import ERR, LabelQuantale, TraceQuantale, law_suite, make_quantale

T = TraceQuantale("abdgh")
L = LabelQuantale(["E1", "E2", "E3"])


def re(text):
    return T.parse(text)


def test_trace_sequencing():
    assert T.equal(T.seq(re("a"), re("b")), re("a.b"))


def test_error_absorbs_sequencing():
    assert T.seq(ERR, re("a")) is ERR
    assert T.seq(re("a"), ERR) is ERR


def test_labels_sequence_by_union():
    assert L.seq(frozenset({"E1"}), frozenset({"E2"})) == frozenset({"E1", "E2"})


def test_trace_join():
    assert T.equal(T.join(re("a"), re("b")), re("a + b"))
    assert T.equal(T.join(re("a"), re("a")), re("a"))
    assert T.join(re("a"), ERR) is ERR


def test_trace_order():
    assert T.leq(re("a.a*"), re("a*"))
    assert T.leq(re("a"), ERR)
    assert not T.leq(re("a*"), re("a"))


def test_iteration():
    assert T.equal(T.iterate(re("a")), re("a*"))
    assert T.equal(T.iterate(T.unit), T.unit)
    assert L.iterate(frozenset({"E1"})) == frozenset({"E1"})


def test_unknown_event_rejected():
    with pytest.raises(ValueError):
        T.event("z")


def test_quantales_need_symbols():
    with pytest.raises(ValueError):
        TraceQuantale([])
    with pytest.raises(ValueError):
        make_quantale("locks", "ab")


@pytest.mark.parametrize("q", [T, L], ids=["trace", "labels"])
def test_law_suite_passes(q):
    report = law_suite(q, n=200, seed=3)
    assert report.passed, report.lines()


class Lopsided(TraceQuantale):
    # sequencing that keeps the left operand too; not associative
    def _seq(self, x, y):
        return rl.alt(x, rl.cat(x, y))


def test_law_suite_names_broken_law():
    report = law_suite(Lopsided("ab"), n=100, seed=1)
    failed = {r.law: r for r in report.failed()}
    assert "seq associative" in failed
    assert len(failed["seq associative"].witness) == 3


samples = st.integers(0, 10_000).map(lambda s: T.sample(random.Random(s)))


@settings(max_examples=100, deadline=None)
@given(samples, samples)
def test_iteration_of_a_join_covers_both_iterations(x, y):
    assert T.leq(T.join(T.iterate(x), T.iterate(y)), T.iterate(T.join(x, y)))


@settings(max_examples=100, deadline=None)
@given(samples)
def test_iteration_is_a_closure(x):
    it = T.iterate(x)
    assert T.leq(x, it)
    assert T.equal(T.iterate(it), it)
    assert T.leq(T.seq(it, it), it)
    assert T.leq(T.unit, it)


@settings(max_examples=100, deadline=None)
@given(samples)
def test_render_round_trips(x):
    assert T.equal(T.parse(T.render(x)), x)
