from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from robustcas.errors import (
    DivisionByZeroPolynomial,
    MultivariateUnsupported,
    NonConstantLeadingCoefficient,
    NonRationalValue,
    NotPolynomial,
    UndefinedAtPoint,
)
from robustcas.expr import evaluate
from robustcas.parser import parse
from robustcas.polynomial import Polynomial, expand, poly_divmod, poly_gcd, rational_parts, squarefree_part

from strategies import X, Y, points, poly_exprs


def P(text: str) -> Polynomial:
    return expand(parse(text))


@pytest.mark.parametrize(
    "text, expected",
    [
        ("(x+y)^2", "x^2 + 2*x*y + y^2"),
        ("(x-1)*(x+1)", "x^2 - 1"),
        ("(x+1)^3", "x^3 + 3*x^2 + 3*x + 1"),
        ("x*0 + 5/2", "5/2"),
    ],
)
def test_expand(text, expected):
    assert P(text) == P(expected)


def test_expand_terms_are_graded_lex():
    degrees = [m.degree for m, _ in P("x + y^3 + x^2*y + 1").sorted_terms()]
    assert degrees == sorted(degrees, reverse=True)


@pytest.mark.parametrize("text", ["1/x", "x^n", "ln(x)", "x^(1/2)"])
def test_expand_rejects_non_polynomials(text):
    with pytest.raises(NotPolynomial) as info:
        expand(parse(text))
    assert info.value.subterm is not None


# Oracle values below were computed once with an independent CAS and frozen.
@pytest.mark.parametrize(
    "p, d, q, r",
    [
        ("x^2 - 1", "x - 1", "x + 1", "0"),
        ("x^2 + 1", "x - 1", "x + 1", "2"),
        ("x^4 - 1", "x^2 + 1", "x^2 - 1", "0"),
        ("x^2*y + x + y", "x + 1", "x*y - y + 1", "2*y - 1"),
    ],
)
def test_divmod(p, d, q, r):
    assert poly_divmod(P(p), P(d), X) == (P(q), P(r))


def test_divmod_errors():
    with pytest.raises(DivisionByZeroPolynomial):
        poly_divmod(P("x"), Polynomial(), X)
    with pytest.raises(NonConstantLeadingCoefficient):
        poly_divmod(P("x^2"), P("x*y + 1"), X)


@pytest.mark.parametrize(
    "p, q, g",
    [
        ("x^2 - 1", "x - 1", "x - 1"),
        ("x^2 + 2*x + 1", "x^2 - 1", "x + 1"),
        ("x^2 + 1", "0", "x^2 + 1"),
        ("2*x^2 + 2", "0", "x^2 + 1"),
        ("x^4 - 1", "x^3 - x^2 + x - 1", "x^3 - x^2 + x - 1"),
        ("x^2 + 1", "x - 1", "1"),
    ],
)
def test_gcd(p, q, g):
    assert poly_gcd(P(p), P(q), X) == P(g)


def test_gcd_is_univariate_only():
    with pytest.raises(MultivariateUnsupported):
        poly_gcd(P("x*y"), P("x"), X)


def test_squarefree_part():
    assert squarefree_part(P("(x-1)^3*(x+2)"), X) == P("(x-1)*(x+2)")


def test_rational_parts_collects_guards():
    rf = rational_parts(parse("1/(x-1) + 1/(x^2-1)"))
    assert P("x - 1") in rf.guards and P("x^2 - 1") in rf.guards
    point = {X: Fraction(3)}
    assert rf.num.evaluate(point) / rf.den.evaluate(point) == Fraction(1, 2) + Fraction(1, 8)


def test_rational_parts_atoms():
    rf = rational_parts(parse("ln(x) + x^n"))
    assert len(rf.atoms) == 2
    with pytest.raises(NotPolynomial):
        rational_parts(parse("ln(x)"), allow_atoms=False)


small_polys = poly_exprs.map(expand)


def _univariate(coeffs):
    return sum((Polynomial.const(c) * Polynomial.var(X) ** i for i, c in enumerate(coeffs)), Polynomial())


univariate_polys = st.lists(st.integers(-5, 5), min_size=1, max_size=5).map(_univariate)


@given(small_polys, small_polys, small_polys)
def test_ring_axioms(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert p * q == q * p
    assert p * (q + r) == p * q + p * r
    assert p - p == Polynomial()
    assert p * Polynomial.const(1) == p


@given(poly_exprs, points([X, Y, parse("z")]))
def test_expand_is_faithful(e, point):
    try:
        expected = evaluate(e, point)
    except (UndefinedAtPoint, NonRationalValue):
        assume(False)
    assert evaluate(expand(e).to_expr(), point) == expected
    assert expand(e).evaluate(point) == expected


@given(small_polys, univariate_polys)
def test_division_identity(p, d):
    assume(not d.is_zero())
    q, r = poly_divmod(p, d, X)
    assert q * d + r == p
    assert r.degree(X) < d.degree(X)


def _monic_divisors(p: Polynomial) -> list[Polynomial]:
    """Brute force: every monic divisor of p among products of its linear and
    quadratic factors with small integer coefficients."""
    candidates = [Polynomial.const(1)]
    for a in range(-6, 7):
        candidates.append(_univariate([a, 1]))
        for b in range(-6, 7):
            candidates.append(_univariate([b, a, 1]))
    out = []
    for c in candidates:
        if poly_divmod(p, c, X)[1].is_zero():
            out.append(c)
    return out


@settings(max_examples=60)
@given(
    st.lists(st.integers(-3, 3), min_size=0, max_size=3),
    st.lists(st.integers(-3, 3), min_size=0, max_size=3),
    st.lists(st.integers(-3, 3), min_size=0, max_size=2),
)
def test_gcd_against_brute_force(roots_p, roots_q, shared):
    def from_roots(rs):
        out = Polynomial.const(1)
        for r in rs:
            out = out * _univariate([-r, 1])
        return out

    p = from_roots(roots_p + shared) * _univariate([1, 0, 1])
    q = from_roots(roots_q + shared)
    assume(p.degree(X) <= 4 or q.degree(X) <= 4)
    g = poly_gcd(p, q, X)
    assert g.leading_coefficient() == 1
    assert poly_divmod(p, g, X)[1].is_zero()
    assert poly_divmod(q, g, X)[1].is_zero()
    for c in _monic_divisors(q):
        if poly_divmod(p, c, X)[1].is_zero():
            assert poly_divmod(g, c, X)[1].is_zero()


def test_gcd_brute_force_small_cases():
    polys = [_univariate(c) for c in itertools.product([-1, 0, 1], repeat=3) if any(c)]
    for p, q in itertools.product(polys, repeat=2):
        g = poly_gcd(p, q, X)
        assert poly_divmod(p, g, X)[1].is_zero() and poly_divmod(q, g, X)[1].is_zero()
        assert g.leading_coefficient() == Fraction(1)
