"""Differentiation and the power-rule integrator.

``integrate_power`` never emits the general formula ``x^(k+1)/(k+1)`` alone
when ``k`` is symbolic: it returns a piecewise whose general branch carries
the condition ``k + 1 != 0`` and whose default is the logarithm, so that
substituting ``k = -1`` later selects ``ln(x)`` instead of dividing by zero.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import UnsupportedIntegrand, UnsupportedNode
from .expr import (
    ONE,
    ZERO,
    AnnotatedExpr,
    Const,
    Expr,
    Ln,
    Piecewise,
    Power,
    Product,
    Sum,
    Symbol,
    add,
    as_expr,
    free_symbols,
    ln,
    mul,
    nonzero,
    piecewise,
    power,
)


def differentiate(e: Expr, s) -> Expr:
    s = as_expr(s)
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Symbol):
        return ONE if e == s else ZERO
    if s not in free_symbols(e):
        return ZERO
    if isinstance(e, Sum):
        return add(*(differentiate(t, s) for t in e.terms))
    if isinstance(e, Product):
        fs = e.factors
        return add(*(mul(differentiate(f, s), *fs[:i], *fs[i + 1 :]) for i, f in enumerate(fs)))
    if isinstance(e, Power):
        b, k = e.base, e.exp
        if s not in free_symbols(k):
            return mul(k, power(b, add(k, -1)), differentiate(b, s))
        # d(b^k) = b^k * (k' ln b + k b'/b)
        return mul(e, add(mul(differentiate(k, s), ln(b)), mul(k, differentiate(b, s), power(b, -1))))
    if isinstance(e, Ln):
        return mul(differentiate(e.arg, s), power(e.arg, -1))
    if isinstance(e, Piecewise):
        return piecewise(
            ((conds, differentiate(body, s)) for conds, body in e.branches),
            differentiate(e.default, s),
        )
    raise UnsupportedNode(f"cannot differentiate {e!r}")


def _power_shape(term: Expr, s: Symbol) -> tuple[Expr, Expr]:
    """Split ``term`` as (c, k) with term = c * s^k, c and k free of s."""
    factors = term.factors if isinstance(term, Product) else (term,)
    coeff, exponent = [], None
    for f in factors:
        if s not in free_symbols(f):
            coeff.append(f)
        elif f == s and exponent is None:
            exponent = ONE
        elif isinstance(f, Power) and f.base == s and s not in free_symbols(f.exp) and exponent is None:
            exponent = f.exp
        else:
            raise UnsupportedIntegrand(f"{term} is not of the form c*{s}^k")
    return mul(*coeff), (ZERO if exponent is None else exponent)


def _integrate_term(term: Expr, s: Symbol) -> Expr:
    c, k = _power_shape(term, s)
    if isinstance(k, Const):
        if k.value == -1:
            return mul(c, ln(s))
        return mul(c, power(s, Const(k.value + 1)), Const(1 / (k.value + Fraction(1))))
    k1 = add(k, 1)
    general = mul(c, power(s, k1), power(k1, -1))
    cond = nonzero(k1)
    conds = [cond] if cond is not None else []
    return piecewise([(conds, general)], mul(c, ln(s)))


def integrate_power(e: Expr, s) -> AnnotatedExpr:
    """Antiderivative (no integration constant) for sums of ``c*s^k`` terms."""
    s = as_expr(s)
    if not isinstance(s, Symbol):
        raise TypeError("integration variable must be a symbol")
    terms = e.terms if isinstance(e, Sum) else (e,)
    return AnnotatedExpr(add(*(_integrate_term(t, s) for t in terms)))


def integrate_power_naive(e: Expr, s) -> AnnotatedExpr:
    """The general power-rule formula with no case split (flawed-CAS model)."""
    s = as_expr(s)
    terms = e.terms if isinstance(e, Sum) else (e,)
    out = []
    for t in terms:
        c, k = _power_shape(t, s)
        if k == Const(-1):
            out.append(mul(c, ln(s)))
        else:
            k1 = add(k, 1)
            out.append(mul(c, power(s, k1), power(k1, -1)))
    return AnnotatedExpr(add(*out))


def general_branch(F: Expr) -> AnnotatedExpr:
    """The first branch of a piecewise antiderivative with its condition as provisos."""
    if not isinstance(F, Piecewise):
        raise TypeError("not a piecewise expression")
    conds, body = F.branches[0]
    return AnnotatedExpr(body, conds)
