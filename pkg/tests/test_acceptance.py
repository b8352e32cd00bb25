"""One test group per acceptance criterion; the summary prints PASS/FAIL lines."""

from __future__ import annotations

import itertools
import json
import os
import random
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

from robustcas.calculus import differentiate, general_branch, integrate_power
from robustcas.checker import CheckerConfig, discharge
from robustcas.cli import State, run_line
from robustcas.errors import SpecializationViolation
from robustcas.expr import AnnotatedExpr, Const, Power, Sum, Symbol, add, evaluate, free_symbols, ln, mul, power, sub, substitute
from robustcas.ledger import (
    CheckerStatus,
    Session,
    TrustLevel,
    all_effective,
    ancestors,
    export_certificate,
    import_certificate,
    meet,
    record_step,
    set_status,
)
from robustcas.parser import parse, render
from robustcas.pipelines import binomial_session, binomial_sum, integral_session, solve_session
from robustcas.polynomial import Monomial, Polynomial, expand
from robustcas.simplify import RewriteRule, UNCONDITIONAL, simplify, simplify_traced
from robustcas.solve import Completeness, Equation, Mode, back_substitute, find_roots, solve

from strategies import SYMBOLS, ast_to_dict, ast_to_expr, random_poly_ast, random_rational_expr

X, Y, N = Symbol("x"), Symbol("y"), Symbol("n")
CANCELLED_SOLVE = "solve (x^2-1)/(x-1) = 2 for x"


def session_lines(lines: list[str], naive: bool = False) -> list[str]:
    state = State(naive=naive)
    return [run_line(state, line)[0] for line in lines]


# --- 1 ---------------------------------------------------------------------


@pytest.mark.acceptance(1, "cancelled denominator: naive gives {1}, robust rejects 1, < 1 s")
def test_01_denominator_cancellation():
    start = time.perf_counter()
    (naive,) = session_lines([CANCELLED_SOLVE], naive=True)
    (robust,) = session_lines([CANCELLED_SOLVE])
    assert naive.startswith("#1: x in {1}")
    assert "[naive]" in naive
    assert robust.startswith("#1: no solutions; rejected x = 1 (denominator vanishes)")

    x = Symbol("x")
    eq = Equation(parse("(x^2-1)/(x-1)"), Const(2), x)
    assert solve(eq, Mode.NAIVE).roots == (Const(1),)
    robust_set = solve(eq, Mode.ROBUST)
    assert robust_set.roots == ()
    assert [(r.candidate, r.reason) for r in robust_set.rejected] == [(Const(1), "DomainViolation")]
    assert time.perf_counter() - start < 1.0


# --- 2 ---------------------------------------------------------------------


@pytest.mark.acceptance(2, "integral of x^n splits at n = -1 and specializes to ln(x), < 1 s")
def test_02_specialization():
    start = time.perf_counter()
    out = session_lines(["integrate x^n wrt x", "subst n=-1 in #1"])
    assert out[0].startswith("#1: piecewise{ x^(n+1)/(n+1) if n+1 != 0 ; ln(x) }")
    assert out[1].startswith("#2: ln(x)")

    F = integrate_power(power(X, N), X).body
    assert substitute(F, N, -1).body == ln(X)
    general = general_branch(F)
    assert general.body == mul(power(X, add(N, 1)), power(add(N, 1), -1))
    with pytest.raises(SpecializationViolation):
        substitute(general, N, -1)
    assert time.perf_counter() - start < 1.0


# --- 3 ---------------------------------------------------------------------


def _subst_all(e, point):
    e = e if isinstance(e, AnnotatedExpr) else AnnotatedExpr(e)
    for s, v in point.items():
        e = substitute(e, s, v)
    return e


@pytest.mark.acceptance(3, "simplify and substitute commute at proviso-satisfying points (1000 expressions)")
def test_03_commutation():
    rng = random.Random(3)
    violations, checked, partial = [], 0, 0
    for _ in range(1000):
        e = random_rational_expr(rng, depth=5, symbols=SYMBOLS)
        simplified = simplify(e)
        syms = sorted(free_symbols(e))
        for _ in range(50):
            point = {s: Fraction(rng.randint(-5, 5)) for s in syms}
            try:
                right = _subst_all(simplified, point)
            except SpecializationViolation:
                # the right side refuses a proviso-violating point
                continue
            left = simplify(_subst_all(e, point).body).body
            checked += 1
            if left != right.body:
                violations.append((render(e), point))
            if len(syms) >= 2:
                # all but one variable fixed; both sides renormalized
                fixed = dict(list(point.items())[:-1])
                partial += 1
                a = simplify(_subst_all(e, fixed).body).body
                b = simplify(_subst_all(simplified, fixed).body).body
                if a != b:
                    violations.append((render(e), fixed))
            break
    assert checked == 1000
    assert partial > 400
    assert violations == []


# --- 4 ---------------------------------------------------------------------


def _dict_polynomial(d: dict) -> Polynomial:
    return Polynomial({Monomial([(Symbol(v), k) for v, k in m]): c for m, c in d.items()})


@pytest.mark.acceptance(4, "simplify agrees with a brute-force expansion oracle (1000 polynomials)")
def test_04_oracle_equivalence():
    rng = random.Random(4)
    mismatches = []
    for _ in range(1000):
        tree = random_poly_ast(rng, depth=5)
        oracle = _dict_polynomial(ast_to_dict(tree))
        e = ast_to_expr(tree)
        out = simplify(e)
        if out.body != oracle.to_expr() or out.provisos or expand(e) != oracle:
            mismatches.append(tree)
    assert mismatches == []


# --- 5 ---------------------------------------------------------------------


@pytest.mark.acceptance(5, "differentiate inverts integrate_power for x^k, k in [-5, 10], and symbolic n")
def test_05_calculus_round_trip():
    failures = []
    for k in range(-5, 11):
        f = power(X, k)
        F = integrate_power(f, X)
        if F.provisos or differentiate(F.body, X) != f:
            failures.append(k)
    assert failures == []

    F = integrate_power(power(X, N), X).body
    (conds, general), = F.branches
    # general branch: under n + 1 != 0 the derivative is x^n exactly
    dg = simplify(differentiate(general, X))
    assert dg.body == power(X, N)
    assert {p.subject for p in dg.provisos} <= {add(N, 1)}
    assert {p.subject for p in conds} == {add(N, 1)}
    # and for every rational specialization admitted by the condition
    for k in [Fraction(v) for v in range(-5, 11) if v != -1] + [Fraction(1, 2), Fraction(-7, 3)]:
        assert differentiate(substitute(general, N, k).body, X) == power(X, Const(k))
    # default branch: the excluded value n = -1
    assert differentiate(F.default, X) == power(X, -1)
    assert differentiate(substitute(F, N, -1).body, X) == power(X, -1)


# --- 6 ---------------------------------------------------------------------


def _planted_case(rng: random.Random):
    count = rng.randint(1, 4)
    roots = {Fraction(rng.randint(-12, 12), rng.randint(1, 5)) for _ in range(count)}
    factors = [sub(X, Const(r)) for r in roots]
    extra = None
    if len(roots) <= 2 and rng.random() < 0.5:
        # irreducible over the rationals: no real roots, or two irrational ones
        extra = rng.choice(["x^2 + 3", "x^2 - 2", "x^2 - 5", "x^2 + x + 1"])
        factors.append(parse(extra))
    lead = Const(rng.choice([1, 2, -3, 4, Fraction(1, 2)]))
    return roots, extra, expand(mul(lead, *factors))


@pytest.mark.acceptance(6, "planted rational roots all found, completeness flag accurate, every root back-substitutes")
def test_06_solver():
    rng = random.Random(6)
    problems = []
    for case in range(200):
        roots, extra, p = _planted_case(rng)
        found, completeness = find_roots(p, X)
        rational = {r.value for r in found if isinstance(r, Const)}
        degree = p.degree(X)
        if rational != roots:
            problems.append((case, "rational roots", roots, found))
        if completeness != (Completeness.COMPLETE if degree <= 2 else Completeness.RATIONAL_ROOTS_ONLY):
            problems.append((case, "flag", degree, completeness))
        if completeness == Completeness.COMPLETE:
            real = len(roots) + (2 if extra in ("x^2 - 2", "x^2 - 5") else 0)
            if len(found) != real:
                problems.append((case, "complete but missing roots", found))
        eq = Equation(p.to_expr(), Const(0), X)
        sols = solve(eq)
        for r in sols.roots:
            if back_substitute(eq, r) is not None:
                problems.append((case, "back-substitution", r))
            if isinstance(r, Const) and evaluate(p.to_expr(), {X: r.value}) != 0:
                problems.append((case, "residual", r))
        # the same roots behind a denominator that cancels one of them
        r0 = sorted(roots)[0]
        shifted = Equation(mul(p.to_expr(), power(sub(X, Const(r0)), -1)), Const(0), X)
        robust = solve(shifted)
        for r in robust.roots:
            v = evaluate(shifted.difference, {X: r.value}) if isinstance(r, Const) else None
            if back_substitute(shifted, r) is not None or (v is not None and v != 0):
                problems.append((case, "rational equation soundness", r))
    assert problems == []


# --- 7 ---------------------------------------------------------------------


def _bad_square(e):
    if isinstance(e, Power) and e.exp == Const(2) and isinstance(e.base, Sum):
        first, *rest = e.base.terms
        return add(power(first, 2), power(add(*rest), 2)), ()
    return None


MUTANT = RewriteRule("square_of_sum", UNCONDITIONAL, _bad_square)


def _random_monomial(rng: random.Random, var: Symbol):
    return mul(Const(rng.choice([1, 2, 3, -1, -2, Fraction(1, 2)])), power(var, rng.randint(1, 3)))


def _mutation_run(seed: int, rules):
    rng = random.Random(seed)
    a, b = _random_monomial(rng, X), _random_monomial(rng, Y)
    e = add(mul(Const(rng.randint(1, 5)), power(add(a, b), 2)), _random_monomial(rng, rng.choice([X, Y])))
    session = Session()
    parsed = record_step(session, "parse", [], e, in_exprs=[render(e)])
    trace = simplify_traced(e, rules)
    sid = record_step(session, trace.op, [parsed], trace.result, in_exprs=[render(e)])
    report = discharge(session, CheckerConfig(seed=seed))
    return e, trace.result, session.step(sid), report.verdicts[sid]


@pytest.mark.acceptance(7, "mutation (x+y)^2 -> x^2+y^2 refuted with valid witness in >= 99/100 runs; no false refutations")
def test_07_mutation():
    genuine = 0
    for seed in range(100):
        e, out, step, verdict = _mutation_run(seed, [MUTANT])
        if step.checker_status != CheckerStatus.REFUTED:
            continue
        point = {Symbol(k): v for k, v in verdict.witness.items()}
        if evaluate(e, point) != evaluate(out.body, point):
            genuine += 1
    assert genuine >= 99

    false_refutations = 0
    for seed in range(100):
        _, _, step, _ = _mutation_run(seed, [])
        false_refutations += step.checker_status == CheckerStatus.REFUTED
    for session in (solve_session(), integral_session(), binomial_session()):
        false_refutations += len(discharge(session).refuted)
    assert false_refutations == 0


# --- 8 ---------------------------------------------------------------------

ORDER = ["unchecked", "curated-low", "curated-medium", "curated-high", "verified"]
OPS = ["parse", "simplify", "cancel_rational", "simplify_naive", "integrate_power", "find_roots", "custom_op"]


def _random_dag(rng: random.Random, size: int) -> Session:
    s = Session()
    for i in range(1, size + 1):
        inputs = sorted(rng.sample(range(1, i), rng.randint(0, min(3, i - 1))))
        record_step(s, rng.choice(OPS), inputs, f"e{i}")
    return s


@pytest.mark.acceptance(8, "trust lattice: 25 meet pairs, propagation bound on 100 DAGs, discharge monotone")
def test_08_trust_lattice():
    for a, b in itertools.product(ORDER, ORDER):
        expected = ORDER[min(ORDER.index(a), ORDER.index(b))]
        assert meet(TrustLevel.from_label(a), TrustLevel.from_label(b)).label == expected

    for seed in range(100):
        rng = random.Random(seed)
        s = _random_dag(rng, rng.randint(5, 30))
        eff = all_effective(s)
        # before any checking, effective trust is bounded by every ancestor's intrinsic trust
        for st in s.steps:
            assert all(eff[st.id] <= s.step(j).intrinsic_trust for j in ancestors(s, st.id))
        for st in s.steps:
            if rng.random() < 0.2:
                set_status(s, st.id, CheckerStatus.REFUTED)
        eff = all_effective(s)
        for st in s.steps:
            assert all(eff[st.id] <= s.step(j).own_level for j in ancestors(s, st.id))
        for sid in rng.sample(range(1, len(s) + 1), len(s)):
            if s.step(sid).checker_status != CheckerStatus.UNEXAMINED:
                continue
            before = all_effective(s)
            set_status(s, sid, CheckerStatus.DISCHARGED)
            after = all_effective(s)
            assert all(after[i] >= before[i] for i in before)


# --- 9 ---------------------------------------------------------------------

SCRIPT = """\
simplify (x^2-1)/(x-1)
solve (x^2-1)/(x-1) = 2 for x
mode naive
solve (x^2-1)/(x-1) = 2 for x
mode robust
integrate x^n wrt x
subst n=-1 in #4
check
"""


def _run_batch(tmp: Path, tag: str, hash_seed: str) -> tuple[bytes, bytes]:
    script = tmp / "session.txt"
    script.write_text(SCRIPT, encoding="utf-8")
    cert = tmp / f"cert-{tag}.json"
    env = dict(os.environ, PYTHONHASHSEED=hash_seed)
    proc = subprocess.run(
        [sys.executable, "-m", "robustcas", "--batch", str(script), "--seed", "11", "--export", str(cert)],
        capture_output=True,
        env=env,
        check=False,
    )
    assert proc.returncode == 3, proc.stderr
    return proc.stdout, cert.read_bytes()


@pytest.mark.acceptance(9, "certificate round trip byte-identical; batch transcripts deterministic")
def test_09_certificates(tmp_path):
    sessions = [solve_session(), solve_session(mode=Mode.NAIVE), integral_session()]
    for s in sessions:
        discharge(s)
        text = export_certificate(s)
        assert export_certificate(import_certificate(text)) == text
        assert json.loads(text)["steps"]
    first = _run_batch(tmp_path, "a", "0")
    second = _run_batch(tmp_path, "b", "12345")
    assert first == second
    assert b"Refuted at x = 1" in first[0]


# --- 10 --------------------------------------------------------------------


@pytest.mark.acceptance(10, "(x+y)^n equals the binomial sum for n = 0..12; induction step exported unexamined")
def test_10_binomial():
    for n in range(13):
        assert expand(power(add(X, Y), n)) == expand(binomial_sum(n))
    session = binomial_session(12)
    report = discharge(session)
    steps = json.loads(export_certificate(session))["steps"]
    expands = [st for st in steps if st["op"] == "expand"]
    assert len(expands) == 13
    assert all(report.verdicts[st["id"]].name == "Valid" for st in expands)
    assert all(st["checker_status"] == "discharged" for st in expands)
    for n, st in enumerate(expands):
        assert parse(st["out_expr"]) == expand(binomial_sum(n)).to_expr()
    (induction,) = [st for st in steps if st["op"] == "induction_step"]
    assert induction["checker_status"] == "unexamined"
    assert induction["inputs"] == [st["id"] for st in expands]
