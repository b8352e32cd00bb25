from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest
from hypothesis import assume, given

from robustcas.calculus import integrate_power
from robustcas.checker import (
    Antiderivative,
    CheckerConfig,
    Identity,
    Inconclusive,
    ProbablyValid,
    Refuted,
    RootsOf,
    Solutions,
    Specialization,
    Unchecked,
    Valid,
    check,
    check_antiderivative,
    check_completeness,
    check_identity,
    check_roots,
    check_solutions,
    derive_seed,
    discharge,
    format_rejected,
    format_solutions,
    identity_report,
    obligation_for,
    parse_proviso,
    parse_rejected,
    parse_solutions,
    verdict_json,
    weakest,
)
from robustcas.errors import NonRationalValue, UndefinedAtPoint
from robustcas.expr import Const, Proviso, Symbol, evaluate, power
from robustcas.ledger import CheckerStatus, Session, record_step
from robustcas.parser import parse, parse_equation
from robustcas.pipelines import integral_session, solve_session
from robustcas.simplify import simplify
from robustcas.solve import Completeness, Equation, Mode, SolutionSet, solve

from strategies import SYMBOLS, X, random_rational_expr, rational_exprs

N = Symbol("n")
P = parse


def equation(text: str) -> Equation:
    lhs, rhs = parse_equation(text)
    return Equation(lhs, rhs, X)


def genuine(witness, lhs, rhs, provisos=()) -> bool:
    """The witness is admissible and really separates the two sides."""
    point = {Symbol(k): v for k, v in witness.items()}
    for s in (lhs, rhs):
        for v in free_symbols_of(s):
            point.setdefault(v, Fraction(0))
    try:
        if any(evaluate(p.subject, point) == 0 for p in provisos):
            return False
        return evaluate(lhs, point) != evaluate(rhs, point)
    except (UndefinedAtPoint, NonRationalValue):
        return False


def free_symbols_of(e):
    from robustcas.expr import free_symbols

    return free_symbols(e)


@pytest.mark.parametrize(
    "trials, bound, resample_limit",
    [(0, 10, 1), (5, 9, 1), (5, 10, 0)],
)
def test_config_validation(trials, bound, resample_limit):
    with pytest.raises(ValueError):
        CheckerConfig(trials, bound, resample_limit)


def test_weakest():
    assert isinstance(weakest([Valid(), ProbablyValid(3, None), Inconclusive("r")]), Inconclusive)
    assert isinstance(weakest([Valid(), Refuted({})]), Refuted)
    assert isinstance(weakest([]), Valid)


def test_seed_is_derived_from_the_obligation():
    assert derive_seed("a") == derive_seed("a")
    assert derive_seed("a") != derive_seed("b")
    assert derive_seed("a", 1) != derive_seed("a", 2)


def test_exact_identity():
    r = identity_report(P("(x+1)^2"), P("x^2 + 2*x + 1"))
    assert isinstance(r.verdict, Valid)
    assert isinstance(r.path_a, Valid)
    assert isinstance(r.path_b, ProbablyValid)
    assert r.agree


def test_structurally_equal_is_valid():
    assert isinstance(check_identity(P("x + y"), P("y + x")), Valid)


def test_cancellation_needs_its_proviso():
    lhs, rhs = P("(x^2-1)/(x-1)"), P("x + 1")
    assert isinstance(check_identity(lhs, rhs), Inconclusive)
    assert isinstance(check_identity(lhs, rhs, [Proviso(P("x - 1"))]), Valid)


def test_covered_by_squarefree_factor():
    # the proviso x^2 - 1 != 0 excludes the zero of x - 1
    lhs, rhs = P("(x^2-1)/(x-1)"), P("x + 1")
    assert isinstance(check_identity(lhs, rhs, [Proviso(P("x^2 - 1"))]), Valid)


def test_refutation_has_genuine_witness():
    lhs, rhs = P("(x+y)^2"), P("x^2 + y^2")
    v = check_identity(lhs, rhs)
    assert isinstance(v, Refuted)
    assert genuine(v.witness, lhs, rhs)


def test_error_bound_is_degree_over_sample_size():
    cfg = CheckerConfig(trials=7, bound=50)
    r = identity_report(P("(x+y)^3"), P("x^3 + 3*x^2*y + 3*x*y^2 + y^3"), cfg=cfg)
    assert r.path_b == ProbablyValid(7, Fraction(3, 101))


def test_ln_is_sampled_only():
    r = identity_report(P("ln(x)*(x + 1)"), P("ln(x)*x + ln(x)"))
    assert r.path_a is None
    assert isinstance(r.verdict, ProbablyValid)
    assert r.verdict.error_bound is None


def test_ln_disagreement_is_not_a_refutation():
    # false as uninterpreted functions, true for the real logarithm on x, y > 0
    v = check_identity(P("ln(x*y)"), P("ln(x) + ln(y)"))
    assert isinstance(v, Inconclusive)


def test_symbolic_exponents_are_sampled():
    v = check_identity(P("x^n*x"), P("x^(n+1)"))
    assert isinstance(v, ProbablyValid)


def test_verdicts_are_deterministic():
    cases = [(P("x^n*x"), P("x^(n+1)")), (P("(x-y)^2"), P("x^2 + y^2"))]
    for lhs, rhs in cases:
        assert identity_report(lhs, rhs) == identity_report(lhs, rhs)


@given(rational_exprs)
def test_simplify_is_never_refuted(e):
    out = simplify(e)
    r = identity_report(e, out.body, out.provisos, CheckerConfig(trials=5))
    assert not isinstance(r.verdict, Refuted)
    assert r.agree is not False


@given(rational_exprs, rational_exprs)
def test_refutations_are_sound(a, b):
    r = identity_report(a, b, cfg=CheckerConfig(trials=5))
    if isinstance(r.verdict, Refuted):
        assert genuine(r.verdict.witness, a, b)
    if isinstance(r.path_a, Valid):
        assert not isinstance(r.path_b, Refuted)


@given(rational_exprs)
def test_dual_paths_agree_on_true_identities(e):
    out = simplify(e)
    assume(out.body != e)
    r = identity_report(e, out.body, out.provisos, CheckerConfig(trials=5))
    if r.path_a is not None and r.path_b is not None:
        assert r.agree


def test_antiderivative_of_symbolic_power():
    F = integrate_power(P("x^n"), X).body
    assert isinstance(check_antiderivative(F, P("x^n"), X), Valid)


@pytest.mark.parametrize("F, f", [("x^2", "x"), ("ln(x)", "x"), ("x^(n+1)/(n+1)", "x^(n+1)")])
def test_wrong_antiderivative_refuted(F, f):
    v = check_antiderivative(P(F), P(f), X)
    assert isinstance(v, (Refuted, Inconclusive))
    assert not isinstance(v, (Valid, ProbablyValid))


def test_wrong_piecewise_default_refuted():
    from robustcas.expr import ln, mul, nonzero, piecewise

    n1 = P("n + 1")
    F = piecewise([([nonzero(n1)], mul(power(X, n1), power(n1, -1)))], mul(2, ln(X)))
    assert isinstance(check_antiderivative(F, P("x^n"), X), Refuted)


def test_solutions_checks():
    e = equation("(x^2-1)/(x-1) = 2")
    naive = check_solutions(e, solve(e, Mode.NAIVE))
    assert isinstance(naive, Refuted)
    assert naive.witness == {"x": Fraction(1)}
    assert isinstance(check_solutions(e, solve(e)), Valid)


def test_surd_solutions_check():
    e = equation("x^2 = 2")
    sols = solve(e)
    assert isinstance(check_solutions(e, sols), Valid)
    assert isinstance(check_completeness(e, sols), Valid)


def test_wrong_solution_refuted():
    e = equation("x^2 = 2")
    v = check_solutions(e, SolutionSet((Const(1),), Completeness.COMPLETE))
    assert isinstance(v, Refuted)
    assert v.witness == {"x": Fraction(1)}


def test_missing_solution_is_inconclusive_not_refuted():
    e = equation("x^2 = 4")
    sols = SolutionSet((Const(2),), Completeness.COMPLETE)
    assert isinstance(check_solutions(e, sols), Valid)
    assert isinstance(check_completeness(e, sols), Inconclusive)


def test_roots_checks():
    assert isinstance(check_roots(P("x^3 - x"), X, [Const(0), Const(1)], Completeness.RATIONAL_ROOTS_ONLY), Valid)
    assert isinstance(check_roots(P("x^2 - 1"), X, [Const(1)], Completeness.COMPLETE), Inconclusive)
    assert isinstance(check_roots(P("x^2 - 1"), X, [Const(2)], Completeness.COMPLETE), Refuted)


def test_specialization_checks():
    F = integrate_power(P("x^n"), X).body
    assert isinstance(check(Specialization(F, {N: Const(-1)}, P("ln(x)"))), Valid)
    assert isinstance(check(Specialization(F, {N: Const(2)}, P("x^3/3"))), Valid)
    assert isinstance(check(Specialization(F, {N: Const(2)}, P("x^3"))), Refuted)
    # ln is uninterpreted, so a mismatch against it cannot be established
    assert isinstance(check(Specialization(F, {N: Const(-1)}, P("x"))), Inconclusive)


def test_dispatch():
    assert isinstance(check(Identity(P("x*x"), P("x^2"))), Valid)
    assert isinstance(check(Antiderivative(P("x^2/2"), P("x"), X)), Valid)
    assert isinstance(check(RootsOf(P("x - 3"), X, (Const(3),), Completeness.COMPLETE)), Valid)
    assert isinstance(check(Unchecked("needs induction")), Inconclusive)
    e = equation("x^2 = 4")
    assert isinstance(check(Solutions(e, solve(e))), Valid)


def test_bogus_rejection_is_flagged():
    from robustcas.solve import DOMAIN_VIOLATION, Rejection

    e = equation("x^2 = 4")
    sols = SolutionSet((Const(-2),), Completeness.COMPLETE, (Rejection(Const(2), DOMAIN_VIOLATION, "made up"),))
    # a wrongly dropped root is a completeness failure, which is never refuted
    v = check(Solutions(e, sols))
    assert isinstance(v, Inconclusive)
    assert "satisfies" in v.reason


@pytest.mark.parametrize(
    "roots, completeness",
    [
        ((), Completeness.COMPLETE),
        ((Const(1), Const(Fraction(-1, 2))), Completeness.RATIONAL_ROOTS_ONLY),
        ((power(Const(2), Const(Fraction(1, 2))),), Completeness.COMPLETE),
    ],
)
def test_solution_text_round_trip(roots, completeness):
    assert parse_solutions(format_solutions(roots, completeness)) == (roots, completeness)


def test_rejection_text_round_trip():
    from robustcas.solve import DOMAIN_VIOLATION, Rejection

    rej = [Rejection(Const(1), DOMAIN_VIOLATION, "denominator x - 1 vanishes")]
    text = "{}" + format_rejected(rej)
    assert parse_rejected(text) == (Const(1),)
    assert parse_rejected("{}") == ()


def test_parse_proviso():
    assert parse_proviso("x - 1 != 0") == Proviso(P("x - 1"))
    with pytest.raises(ValueError):
        parse_proviso("x - 1")


def test_obligations_for_steps():
    s = integral_session()
    assert isinstance(obligation_for(s.step(2)), Antiderivative)
    assert isinstance(obligation_for(s.step(3)), Specialization)
    t = Session()
    record_step(t, "mystery", [], "x")
    assert isinstance(obligation_for(t.step(1)), Unchecked)


def test_discharge_naive_pipeline():
    s = solve_session(mode=Mode.NAIVE)
    report = discharge(s)
    statuses = [st.checker_status for st in s.steps]
    assert statuses[1] == CheckerStatus.UNEXAMINED
    assert statuses[3] == CheckerStatus.REFUTED
    assert report.refuted == [4]
    assert report.verdicts[4].witness == {"x": Fraction(1)}


def test_discharge_report_is_deterministic():
    a = discharge(solve_session(), CheckerConfig(seed=3)).to_json()
    b = discharge(solve_session(), CheckerConfig(seed=3)).to_json()
    assert a == b
    assert json.loads(a)["earliest_weak_step"] == {"4": None}


def test_verdict_json():
    assert verdict_json(Valid()) == {"verdict": "Valid"}
    v = verdict_json(Refuted({"x": Fraction(1, 2)}, "values differ"))
    assert v["verdict"] == "Refuted"
    assert v["witness"] == {"x": "1/2"}


def test_ln_arguments_must_be_positive():
    # -x^2 - 1 is negative everywhere, so no sample point is admissible
    v = check_identity(P("ln(-x^2 - 1)"), P("ln(-x^2 - 1)*x/x"))
    assert isinstance(v, Inconclusive)
    assert "exhausted" in v.reason


def test_dual_path_agreement_over_ten_thousand_trials():
    rng = random.Random(10)
    trials = 0
    for _ in range(3000):
        if trials >= 10_000:
            break
        e = random_rational_expr(rng, depth=5, symbols=SYMBOLS)
        out = simplify(e)
        r = identity_report(e, out.body, out.provisos, CheckerConfig(trials=20, seed=rng.randint(0, 10**9)))
        if r.path_a is None:
            continue
        if isinstance(r.path_a, Valid):
            assert not isinstance(r.path_b, Refuted)
        if isinstance(r.path_b, ProbablyValid):
            trials += r.path_b.trials
    assert trials >= 10_000


def test_empty_session():
    report = discharge(Session())
    assert report.steps == [] and report.verdicts == {} and report.refuted == []
