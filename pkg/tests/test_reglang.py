import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqeff import reglang as rl
from seqeff.reglang import EPS, alt, cat, sym, star

from conftest import all_words, words_upto

a, b, d, g = sym("a"), sym("b"), sym("d"), sym("g")
N = 6


def regexes(alphabet=("a", "b")):
    leaves = st.sampled_from([EPS, *map(sym, alphabet)])
    return st.recursive(
        leaves,
        lambda kids: st.one_of(
            st.builds(lambda x, y: cat(x, y), kids, kids),
            st.builds(lambda x, y: alt(x, y), kids, kids),
            st.builds(star, kids),
        ),
        max_leaves=6,
    )


def test_concat_of_single_symbols():
    assert rl.lang_equal(rl.lang_concat(a, b), rl.parse_regex("a.b"))


def test_concat_with_epsilon_is_identity():
    r = rl.parse_regex("a.(b + a)*")
    assert rl.lang_concat(EPS, r) is r


def test_optional_prefix_concat():
    # frozen from the enumeration oracle
    assert words_upto(cat(alt(a, EPS), b), 4) == {"ab", "b"}
    assert rl.lang_equal(cat(alt(a, EPS), b), alt(cat(a, b), b))


def test_union_of_symbols():
    assert words_upto(rl.lang_union(a, b), 3) == {"a", "b"}


def test_star_membership():
    assert rl.lang_member("aaa", star(a))
    assert not rl.lang_member("ab", star(a))
    assert rl.lang_member("", EPS)


def test_branching_traces():
    both = rl.parse_regex("d.a.b + d.g")
    assert rl.lang_member("dab", both)
    assert not rl.lang_member("dg", rl.parse_regex("d.a.b"))


def test_inclusion_examples():
    aastar = cat(a, star(a))
    assert rl.lang_includes(aastar, star(a))
    assert rl.lang_includes(aastar, aastar)
    assert not rl.lang_includes(star(a), aastar)
    assert rl.counterexample(star(a), aastar) == ()


def test_parse_and_render_round_trip():
    for text in ["a", "%e", "a.b", "a + b", "(a + b)*", "d.a.b + d.g", "a.a*"]:
        r = rl.parse_regex(text)
        assert rl.parse_regex(r.text) is r


def test_parse_rejects_garbage():
    with pytest.raises(rl.RegexSyntaxError):
        rl.parse_regex("a + + b")
    with pytest.raises(rl.RegexSyntaxError):
        rl.parse_regex("(a")


def test_parse_rejects_symbols_outside_alphabet():
    with pytest.raises(rl.RegexSyntaxError):
        rl.parse_regex("a.z", alphabet="ab")


@settings(max_examples=150, deadline=None)
@given(regexes())
def test_membership_matches_enumeration(r):
    lang = words_upto(r, N)
    for w in all_words("ab", N):
        assert rl.lang_member(w, r) == (w in lang)


@settings(max_examples=150, deadline=None)
@given(regexes())
def test_prefix_membership_matches_enumeration(r):
    lang = words_upto(r, N)
    for w in all_words("ab", 3):
        got = rl.lang_prefix_member(w, r)
        if any(x.startswith(w) for x in lang):
            assert got
        if got:
            rest = r
            for c in w:
                rest = rest.deriv(c)
            tail = rl.counterexample(rest, rl.EMPTY)
            assert tail is not None and rl.lang_member(list(w) + list(tail), r)


@settings(max_examples=150, deadline=None)
@given(regexes(), regexes())
def test_inclusion_agrees_with_enumeration(r, s):
    ok = rl.lang_includes(r, s)
    small_r, small_s = words_upto(r, N), words_upto(s, N)
    if ok:
        assert small_r <= small_s
    else:
        w = rl.counterexample(r, s)
        assert w is not None
        assert rl.lang_member(w, r) and not rl.lang_member(w, s)


@settings(max_examples=100, deadline=None)
@given(regexes(), regexes(), regexes())
def test_kleene_algebra_identities(x, y, z):
    assert rl.lang_equal(cat(x, alt(y, z)), alt(cat(x, y), cat(x, z)))
    assert rl.lang_equal(cat(cat(x, y), z), cat(x, cat(y, z)))
    assert rl.lang_equal(star(star(x)), star(x))
    assert rl.lang_includes(cat(star(x), star(x)), star(x))
    assert rl.lang_includes(alt(star(x), star(y)), star(alt(x, y)))


@settings(max_examples=100, deadline=None)
@given(regexes())
def test_render_parses_back_to_the_same_language(r):
    assert rl.lang_equal(rl.parse_regex(r.text), r)
