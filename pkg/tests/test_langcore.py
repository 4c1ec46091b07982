import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqeff.langcore import ParseError, subst_ty, unfold_ty
from seqeff.langcore import syntax as S
from seqeff.langcore.contexts import FLet, FPrompt, FSeq, plug
from seqeff.langcore.expand import Expander

from conftest import Kit

K = Kit()
P = K.lang.parse


def test_parse_sequence_of_events():
    assert P("(seq (event a) (event b))") == S.Seq(S.Event("a"), S.Event("b"))


def test_parse_prompt_with_abort():
    e = P("(prompt t (abort t nat #u) (lambda (x : nat) (event g)))")
    assert isinstance(e, S.Prompt) and e.tag == "t"
    assert e.body == S.AbortE("t", S.NAT, S.Lit(None))
    assert e.handler == S.Lam("x", S.NAT, S.Event("g"))


def test_parse_macros():
    assert P("(while c (event a))") == S.WhileM(S.Var("c"), S.Event("a"))
    assert P("(loop (event a))") == S.LoopM(S.Event("a"))
    e = P("(try (throw E #u) (catch E (lambda (x : unit) #u)))")
    assert e == S.TryCatchM(S.ThrowM("E", S.Lit(None)), "E", S.Lam("x", S.UNIT, S.Lit(None)))


def test_seq_is_nary():
    assert P("(seq (event a) (event b) (event d))") == P("(seq (event a) (seq (event b) (event d)))")


def test_untyped_capture_parameter_gets_its_continuation_type():
    e = P("(callcc t {| replace t : a* ~> unit | _|_} unit (lambda (k) k))")
    t = e.fn.ty
    assert isinstance(t, S.TMu) and isinstance(unfold_ty(t), S.TCont)


@pytest.mark.parametrize(
    "src, where",
    [
        ("(prompt t (seq (event a)", "unclosed"),
        ("(event z)", "unknown symbol"),
        ("(lambda (x%1 : unit) x%1)", "reserved"),
        ("(abort t (-> unit) #u)", ""),
        ("(seq)", ""),
    ],
)
def test_parse_errors(src, where):
    with pytest.raises(ParseError) as info:
        P(src)
    assert where in str(info.value)


def test_parse_error_positions():
    with pytest.raises(ParseError) as info:
        P("(seq (event a)\n  (event z))")
    assert (info.value.line, info.value.col) == (2, 10)


ROUND_TRIP = [
    "(seq (event a) (event b))",
    "(prompt t (seq (event d) (if c (seq (event a) (event b)) (abort t nat 3))) (lambda (x : nat) (event g)))",
    "(let (f (lambda (x : unit) (event a))) (f #u))",
    "(callcc t { | replace t : a* ~> unit | _|_} unit (lambda (k : (cont t unit { | replace t : a* ~> unit | _|_} unit)) (k #u)))",
    "(let (r (ref (inl unit #t))) (case (get r) (x (set r (inr bool #u))) (y #u)))",
    "(case-opt (some #t) #f (x x))",
    "(lambda (f : (-> unit { | abort t a ~> nat | _|_} bool)) (f #u))",
    "(lambda (x : (mu X (-> X unit))) (x x))",
]


@pytest.mark.parametrize("src", ROUND_TRIP)
def test_print_parse_round_trip(src):
    e = P(src)
    assert P(K.lang.show_expr(e)) == e


def test_latent_effects_are_covariant():
    small = K.ty("(-> unit { |  | a} unit)")
    big = K.ty("(-> unit { |  | a + b} unit)")
    assert K.lang.sub.sub(small, big)
    assert not K.lang.sub.sub(big, small)


def test_function_arguments_are_contravariant():
    f = K.ty("(-> (-> unit { |  | a + b} unit) unit)")
    g = K.ty("(-> (-> unit { |  | a} unit) unit)")
    assert K.lang.sub.sub(f, g)
    assert not K.lang.sub.sub(g, f)


def test_subtyping_is_reflexive():
    t = K.ty("(cont t unit { | replace t : a* ~> unit | _|_} unit)")
    assert K.lang.sub.sub(t, t)


MU_TYPES = [
    "(mu K (cont t K { | replace t : a* ~> unit | a*} unit))",
    "(mu X (-> X unit))",
    "(mu L (sum unit (ref L)))",
]


@pytest.mark.parametrize("text", MU_TYPES)
def test_recursive_type_equals_its_unfoldings(text):
    t = K.ty(text)
    sub = K.lang.sub.sub
    once = subst_ty(t.body, t.var, t)
    assert sub(t, once) and sub(once, t)
    deep = t
    for _ in range(8):
        deep = subst_ty(t.body, t.var, deep)
        assert sub(t, deep) and sub(deep, t)


def test_loop_expansion_carries_the_synthesized_prediction():
    e = K.prog("(loop (event a))")
    assert isinstance(e, S.Prompt) and e.tag.startswith("loop%")
    capture = e.body.bound
    assert isinstance(capture, S.CallCC)
    want = K.eff("{ | replace %s : a* ~> unit | a*}" % e.tag)
    assert K.alg.equiv(capture.predicted, want)


def test_exception_expansion():
    e = K.prog("(try (seq (event a) (throw E #u)) (catch E (lambda (x : unit) (event g))))")
    assert e == S.Prompt(
        S.exn_tag("E"),
        S.Seq(S.Event("a"), S.AbortE(S.exn_tag("E"), S.UNIT, S.Lit(None))),
        S.Lam("x", S.UNIT, S.Event("g")),
    )


def test_macro_free_programs_are_unchanged():
    for src in ROUND_TRIP:
        e = P(src)
        env = {"c": S.BOOL}
        assert K.expander.expand(e, env) == e


def test_expansions_round_trip_through_the_reserved_parser():
    for src in ["(loop (event a))", "(while c (event a))", "(loop (loop (event b)))"]:
        e = K.prog(src, {"c": S.BOOL})
        assert K.lang.parse(K.lang.show_expr(e), allow_reserved=True) == e


def test_generated_names_never_collide():
    e = K.prog("(seq (loop (event a)) (loop (event b)))")
    tags = {e.first.tag, e.second.tag}
    assert len(tags) == 2
    again = Expander(K.checker).expand(S.Seq(e, S.LoopM(S.Event("d"))))
    assert again.second.tag not in tags


def test_plugging_contexts():
    ctx = (FSeq(S.Event("b")), FLet("x", S.Var("x")), FPrompt("t", S.Lam("v", S.UNIT, S.Var("v"))))
    got = plug(ctx, S.Event("a"))
    assert got == P("(prompt t (let (x (seq (event a) (event b))) x) (lambda (v : unit) v))")


names = st.sampled_from(["x", "y", "f"])
simple = st.recursive(
    st.one_of(st.sampled_from([S.Lit(None), S.Lit(True), S.Event("a"), S.Event("b")]), names.map(S.Var)),
    lambda kids: st.one_of(
        st.builds(S.Seq, kids, kids),
        st.builds(S.If, kids, kids, kids),
        st.builds(lambda x, b: S.Lam(x, S.UNIT, b), names, kids),
        st.builds(S.App, kids, kids),
        st.builds(S.Let, names, kids, kids),
        st.builds(lambda b: S.Prompt("t", b, S.Lam("v", S.UNIT, S.Var("v"))), kids),
    ),
    max_leaves=10,
)


@settings(max_examples=150, deadline=None)
@given(simple)
def test_printing_round_trips_on_random_terms(e):
    assert P(K.lang.show_expr(e)) == e
