import pytest

from seqeff import reglang as rl
from seqeff.conteffect import Abort, CEff, Mu, Proph
from seqeff.langcore import syntax as S
from seqeff.langcore.contexts import FPrompt, FSeq
from seqeff.typechecker import TypeCheckError

from conftest import (
    GEN_ABORT,
    GEN_BODY,
    GEN_PROPH,
    OPT,
    SELF_LOOP,
    SELF_LOOP_EXTRA,
    ABORT_PROG,
    INVOKE_PROG,
    INVOKE_K,
    Kit,
)

K = Kit()
W = Kit("trace", "abcdeght")  # wider alphabet for the derived-rule formulas
A, Q = K.alg, K.q


def eq_under(x, text, kit=K):
    return x is not None and rl.lang_equal(x, kit.re(text))


def test_sequenced_events():
    out = K.infer("(seq (event a) (event b))")
    assert out.ty == S.UNIT
    assert A.equiv(out.effect, K.eff("{ |  | a.b}"))


def test_aborting_prompt():
    out = K.infer(ABORT_PROG, {"c": S.BOOL})
    assert out.ty == S.UNIT
    assert A.equiv(out.effect, K.eff("{ |  | d.a.b + d.g}"))


def test_invoked_continuation_replaces_the_body():
    out = K.infer(INVOKE_PROG, {"c": S.BOOL, "k": K.ty(INVOKE_K)})
    assert A.equiv(out.effect, K.eff("{ |  | d.a.b + d.h}"))


def test_lambda_is_pure():
    out = K.infer("(lambda (x : unit) (event a))")
    assert out.ty == S.TFun(S.UNIT, K.eff("{ |  | a}"), S.UNIT)
    assert A.equiv(out.effect, A.unit)


def test_self_loop_is_validated():
    out = K.infer(SELF_LOOP)
    assert eq_under(out.effect.under, "a.a*")
    checks = [n for n in out.notes if "controls" in n.text]
    assert len(checks) == 1 and checks[0].holds


def test_extra_event_after_the_capture_is_rejected():
    with pytest.raises(TypeCheckError) as info:
        K.infer(SELF_LOOP_EXTRA)
    assert info.value.rule == "V-Effects"
    assert any(v.clause == "prophecy" for v in info.value.violations)


def test_abort_type_must_match_handler():
    with pytest.raises(TypeCheckError) as info:
        K.infer("(prompt t (abort t nat 3) (lambda (x : bool) (event g)))")
    assert [v.clause for v in info.value.violations] == ["abort-type"]


def test_valid_effects_on_the_self_loop_prophecy():
    p = Proph("t", K.eff("{ | replace t : a* ~> unit | _|_}"), S.UNIT, K.eff("{ | replace t : a.a* ~> unit | _|_}"))
    assert K.checker.valid_effects({p}, (), None, "t", S.UNIT, S.UNIT) == []


def test_valid_effects_rejects_a_longer_observation():
    p = Proph("t", K.eff("{ |  | a}"), S.UNIT, K.eff("{ |  | a.b}"))
    out = K.checker.valid_effects({p}, (), Q.unit, "t", S.UNIT, S.UNIT)
    assert [v.clause for v in out] == ["prophecy"]


def test_prompt_effect_projects_aborts_through_the_handler():
    ctl = {Abort("t", K.re("d"), S.NAT)}
    got = K.checker.prompt_effect((), ctl, K.re("d.a.b"), "t", K.re("g"))
    assert A.equiv(got, K.eff("{ |  | d.a.b + d.g}"))


def test_prompt_effect_keeps_replacements_without_the_handler():
    ctl = K.eff("{ | replace t : d.h ~> unit | _|_}").controls
    got = K.checker.prompt_effect((), ctl, K.re("d.a.b"), "t", K.re("g"))
    assert A.equiv(got, K.eff("{ |  | d.a.b + d.h}"))


def test_prompt_effect_of_a_pure_body():
    got = K.checker.prompt_effect((), (), K.re("a"), "t", K.re("g"))
    assert A.equiv(got, K.eff("{ |  | a}"))


# context typing

def test_empty_context():
    hole = K.eff("{ |  | a}")
    assert K.checker.context_infer((), S.UNIT, hole) == (S.UNIT, hole)


def test_context_sequences_after_the_hole():
    ty, eff = K.checker.context_infer((FSeq(S.Event("b")),), S.UNIT, K.eff("{ |  | a}"))
    assert ty == S.UNIT and A.equiv(eff, K.eff("{ |  | a.b}"))


def test_prompt_context_agrees_with_a_concrete_plugging():
    h = S.Lam("x", S.NAT, S.Event("g"))
    ctx = (FSeq(S.Event("b")), FPrompt("t", h))
    hole_eff = K.eff("{ | abort t d ~> nat | a}")
    _, got = K.checker.context_infer(ctx, S.UNIT, hole_eff)
    concrete = K.infer("(prompt t (seq (if c (event a) (seq (event d) (abort t nat 1))) (event b)) (lambda (x : nat) (event g)))", {"c": S.BOOL})
    assert A.equiv(got, concrete.effect)


# derived rules

def test_derived_infinite_loop():
    ch = K.checker
    assert A.equiv(ch.derived_infloop(K.eff("{ |  | a}")), K.eff("{ |  | a*}"))
    assert A.equiv(ch.derived_infloop(A.unit), A.unit)
    got = ch.derived_infloop(K.eff("{ | abort l h ~> nat | a}"))
    assert A.equiv(got, K.eff("{ | abort l a*.h ~> nat | a*}"))


def test_derived_while():
    got = W.checker.derived_while(W.re("c"), W.re("e"))
    assert eq_under(got.under, "c.(e.c)*", W)
    assert not got.controls and not got.props
    unit = W.checker.derived_while(W.q.unit, W.q.unit)
    assert rl.lang_equal(unit.under, rl.EPS)


def test_derived_aborting_while():
    cond = W.eff("{ |  | c}")
    body = W.eff("{ | abort x t ~> nat | e}")
    got = W.checker.derived_aborting_while(cond, body, "w")
    assert eq_under(got.under, "c.(e.c)*", W)
    (ctl,) = got.controls
    assert ctl.tag == "x" and rl.lang_equal(ctl.prefix, W.re("c.(e.c)*.t"))
    plain = W.checker.derived_aborting_while(cond, W.eff("{ |  | e}"), "w")
    assert W.alg.equiv(plain, W.checker.derived_while(W.re("c"), W.re("e")))


def test_derived_aborting_while_refuses_captures():
    with pytest.raises(TypeCheckError):
        W.checker.derived_aborting_while(W.eff("{ | replace w : c ~> unit | c}"), W.eff("{ |  | e}"), "w")


def test_derived_try_catch():
    tag = S.exn_tag("C")
    body = K.eff("{ | abort %s a ~> unit | a.b}" % tag)
    got = K.checker.derived_trycatch(body, tag, S.UNIT, K.re("g"))
    assert A.equiv(got, K.eff("{ |  | a.b + a.g}"))
    pure = K.eff("{ |  | a}")
    assert A.equiv(K.checker.derived_trycatch(pure, tag, S.UNIT, K.re("g")), pure)


def test_derived_throw():
    got = K.checker.derived_throw(K.re("a"), "C", S.UNIT)
    (ctl,) = got.controls
    assert ctl == Abort(S.exn_tag("C"), K.re("a"), S.UNIT) and got.under is None
    (ctl,) = K.checker.derived_throw(Q.unit, "C", S.UNIT).controls
    assert ctl.prefix is Q.unit


# generators

def gen_prophecy():
    return K.eff("{" + GEN_PROPH + " |  | %e}").props


def test_generator_prophecies_check():
    props = gen_prophecy()
    assert isinstance(next(iter(props)), Mu)
    assert K.checker.genprophs_check(props, "gen", Q.unit, S.BOOL) == []


def test_generator_prophecy_for_another_tag_fails():
    out = K.checker.genprophs_check(gen_prophecy(), "other", Q.unit, S.BOOL)
    assert out and out[0].clause == "tag"


def test_generator_prophecy_exceeding_the_step_fails():
    p = Proph("gen", K.eff("{ | %s | a}" % GEN_ABORT), S.TOption(S.BOOL), K.eff("{ |  | %e}"))
    out = K.checker.genprophs_check({p}, "gen", Q.unit, S.BOOL)
    assert "predicted underlying" in [v.clause for v in out]


def test_pure_generator_has_pure_latent_effect():
    f_ty = K.infer(GEN_BODY).ty
    out = K.checker.derived_iterate(f_ty, "init", "gen", S.BOOL, Q.unit)
    assert out.ty.res == S.TOption(S.BOOL)
    assert A.equiv(out.ty.latent, A.unit)


def test_generator_body_aborting_elsewhere_fails():
    body = GEN_BODY.replace("(loop (y #t))", "(abort elsewhere unit #u)")
    f_ty = K.infer(body).ty
    with pytest.raises(TypeCheckError) as info:
        K.checker.derived_iterate(f_ty, "init", "gen", S.BOOL, Q.unit)
    assert info.value.rule == "D-Iterate"


def test_generator_expansion_typechecks():
    out = K.infer(f"(iterate init gen {GEN_BODY})")
    assert out.ty == S.TFun(S.UNIT, A.unit, S.TOption(S.BOOL))
    assert A.equiv(out.effect, A.unit)


# assorted rules

def test_if_branches_must_agree():
    with pytest.raises(TypeCheckError):
        K.infer("(if #t #u #f)")


def test_condition_must_be_boolean():
    with pytest.raises(TypeCheckError):
        K.infer("(if #u #u #u)")


def test_unbound_variable():
    with pytest.raises(TypeCheckError):
        K.infer("x")


def test_handler_must_be_effect_free():
    with pytest.raises(TypeCheckError):
        K.infer("(prompt t #u (seq (event a) (lambda (x : unit) #u)))")


def test_capture_prediction_must_be_nontrivial():
    with pytest.raises(TypeCheckError):
        K.infer("(prompt t (callcc t { |  | _|_} unit (lambda (k) #u)) (lambda (x : unit) #u))")


def test_references():
    out = K.infer("(let (r (ref #t)) (seq (set r #f) (get r)))")
    assert out.ty == S.BOOL


def test_sums_and_options():
    assert K.infer("(case (inl unit #t) (x x) (y #f))").ty == S.BOOL
    assert K.infer("(case-opt (none bool) #f (x x))").ty == S.BOOL
