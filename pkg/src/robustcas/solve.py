"""Exact univariate equation solving with back-substitution.

Robust mode takes candidate roots from the numerator of the *original*
``lhs - rhs`` and keeps only those at which the original equation is defined
and vanishes.  Naive mode first runs ``simplify_naive`` (cancelling common
factors without provisos) and trusts whatever roots come out, which is how a
cancelled denominator factor turns into a spurious solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .errors import (
    MultivariateUnsupported,
    NotPolynomial,
    NotRationalFunction,
    UndefinedAtPoint,
    UnsupportedDegree,
    ZeroPolynomial,
)
from .expr import (
    AnnotatedExpr,
    Const,
    Expr,
    Power,
    Product,
    Sum,
    Symbol,
    add,
    as_expr,
    evaluate,
    free_symbols,
    integer_root,
    mul,
    power,
    sub,
)
from .polynomial import Polynomial, rational_parts
from .simplify import simplify_naive

MAX_DEGREE = 6


class Completeness(str, Enum):
    COMPLETE = "complete"
    RATIONAL_ROOTS_ONLY = "rational-roots-only"


class Mode(str, Enum):
    ROBUST = "robust"
    NAIVE = "naive"


DOMAIN_VIOLATION = "DomainViolation"
PROVISO_VIOLATION = "ProvisoViolation"


@dataclass(frozen=True)
class Equation:
    lhs: Expr
    rhs: Expr
    unknown: Symbol
    provisos: frozenset = frozenset()

    def __post_init__(self):
        if isinstance(self.unknown, str):
            object.__setattr__(self, "unknown", Symbol(self.unknown))
        if self.unknown not in free_symbols(sub(self.lhs, self.rhs)):
            raise ValueError(f"{self.unknown} does not occur in the equation")

    @property
    def difference(self) -> Expr:
        return sub(self.lhs, self.rhs)

    def __str__(self) -> str:
        return f"{self.lhs} = {self.rhs}"


@dataclass(frozen=True)
class Rejection:
    candidate: Expr
    reason: str  # DOMAIN_VIOLATION | PROVISO_VIOLATION
    detail: str


@dataclass(frozen=True)
class SolutionSet:
    roots: tuple[Expr, ...]
    completeness: Completeness
    rejected: tuple[Rejection, ...] = field(default=())

    def __post_init__(self):
        if len(set(self.roots)) != len(self.roots):
            raise ValueError("duplicate roots")


# --- quadratic surds -------------------------------------------------------


@dataclass(frozen=True)
class QuadraticNumber:
    """``a + b*sqrt(d)`` with rational a, b and a fixed non-square radicand d."""

    a: Fraction
    b: Fraction
    d: Fraction

    def __add__(self, other):
        if not isinstance(other, QuadraticNumber):
            return QuadraticNumber(self.a + other, self.b, self.d)
        return QuadraticNumber(self.a + other.a, self.b + other.b, self.d)

    def __mul__(self, other):
        if not isinstance(other, QuadraticNumber):
            return QuadraticNumber(self.a * other, self.b * other, self.d)
        return QuadraticNumber(
            self.a * other.a + self.b * other.b * self.d,
            self.a * other.b + self.b * other.a,
            self.d,
        )

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0


def surd_parts(e: Expr) -> tuple[Fraction, Fraction, Fraction] | None:
    """Decompose ``a + b*d^(1/2)`` into (a, b, d); None if e has another shape."""

    def radical(t: Expr):
        if isinstance(t, Power) and isinstance(t.base, Const) and t.exp == Const(Fraction(1, 2)):
            return Fraction(1), t.base.value
        if (
            isinstance(t, Product)
            and len(t.factors) == 2
            and isinstance(t.factors[0], Const)
        ):
            inner = radical(t.factors[1])
            if inner is not None:
                return t.factors[0].value * inner[0], inner[1]
        return None

    terms = e.terms if isinstance(e, Sum) else (e,)
    a = Fraction(0)
    found = None
    for t in terms:
        if isinstance(t, Const):
            a += t.value
            continue
        r = radical(t)
        if r is None or found is not None:
            return None
        found = r
    if found is None:
        return None
    return a, found[0], found[1]


def _horner(coeffs: list[Fraction], x):
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def poly_at_surd(p: Polynomial, s: Expr, root: tuple[Fraction, Fraction, Fraction]) -> QuadraticNumber:
    a, b, d = root
    x = QuadraticNumber(a, b, d)
    acc = QuadraticNumber(Fraction(0), Fraction(0), d)
    for c in reversed(p.univariate_coeffs(s)):
        acc = acc * x + c
    return acc


# --- root finding ----------------------------------------------------------


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    i = 1
    while i * i <= n:
        if n % i == 0:
            small.append(i)
            if i != n // i:
                large.append(n // i)
        i += 1
    return small + large[::-1]


def _square_split(n: int) -> tuple[int, int]:
    """n = f^2 * r with r free of squares of primes below 10^4 (n > 0)."""
    f, r = 1, n
    p = 2
    while p * p <= r and p < 10_000:
        while r % (p * p) == 0:
            r //= p * p
            f *= p
        p += 1 if p == 2 else 2
    root = integer_root(r, 2)
    if root is not None:
        return f * root, 1
    return f, r


def _integer_coeffs(coeffs: list[Fraction]) -> list[int]:
    lcm = 1
    for c in coeffs:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in coeffs]
    g = 0
    for c in ints:
        g = math.gcd(g, c)
    return [c // g for c in ints] if g > 1 else ints


def find_roots(p: Polynomial, s) -> tuple[list[Expr], Completeness]:
    """Real roots of a univariate polynomial of degree <= 6.

    Degree 1-2: every real root, exactly (quadratic surds when needed).
    Degree 3-6: the rational roots only.
    """
    s = as_expr(s)
    if p.is_zero():
        raise ZeroPolynomial("the zero polynomial has every point as a root")
    if not p.is_univariate_in(s):
        raise MultivariateUnsupported(f"{p} is not univariate in {s}")
    n = p.degree(s)
    if n > MAX_DEGREE:
        raise UnsupportedDegree(f"degree {n} exceeds {MAX_DEGREE}")
    if n <= 0:
        return [], Completeness.COMPLETE
    c = _integer_coeffs(p.univariate_coeffs(s))
    if n == 1:
        return [Const(Fraction(-c[0], c[1]))], Completeness.COMPLETE
    if n == 2:
        return _quadratic_roots(c[2], c[1], c[0]), Completeness.COMPLETE
    return _rational_roots(c), Completeness.RATIONAL_ROOTS_ONLY


def _quadratic_roots(a: int, b: int, c: int) -> list[Expr]:
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    if disc == 0:
        return [Const(Fraction(-b, 2 * a))]
    f, r = _square_split(disc)
    if r == 1:
        return [Const(Fraction(-b + f, 2 * a)), Const(Fraction(-b - f, 2 * a))]
    half = Fraction(f, 2 * a)
    rad = power(Const(r), Const(Fraction(1, 2)))
    centre = Const(Fraction(-b, 2 * a))
    return [add(centre, mul(Const(half), rad)), add(centre, mul(Const(-half), rad))]


def _rational_roots(c: list[int]) -> list[Expr]:
    roots: list[Fraction] = []
    while c and c[0] == 0:
        if Fraction(0) not in roots:
            roots.append(Fraction(0))
        c = c[1:]
    if len(c) <= 1:
        return [Const(r) for r in roots]
    coeffs = [Fraction(x) for x in c]
    for q in _divisors(c[-1]):
        for p in _divisors(c[0]):
            for cand in (Fraction(p, q), Fraction(-p, q)):
                if cand not in roots and _horner(coeffs, cand) == 0:
                    roots.append(cand)
    return [Const(r) for r in roots]


# --- solving ---------------------------------------------------------------


def _numerator(f: Expr, x: Symbol):
    try:
        rf = rational_parts(f, allow_atoms=False)
    except NotPolynomial as err:
        raise NotRationalFunction(str(err)) from None
    if not rf.num.is_univariate_in(x) or not rf.den.is_univariate_in(x):
        raise NotRationalFunction(f"coefficients must be rational constants, not functions of {sorted(v.key for v in rf.num.variables - {x})}")
    return rf


def back_substitute(eq: Equation, candidate: Expr) -> Rejection | None:
    """None if ``candidate`` satisfies the original equation, else its Rejection."""
    x = eq.unknown
    f = eq.difference
    if isinstance(candidate, Const):
        point = {x: candidate.value}
        for p in sorted(eq.provisos):
            try:
                v = evaluate(p.subject, point)
            except UndefinedAtPoint:
                v = Fraction(0)
            if v == 0:
                return Rejection(candidate, PROVISO_VIOLATION, f"proviso {p} fails")
        try:
            value = evaluate(f, point)
        except UndefinedAtPoint:
            rf = rational_parts(f, allow_atoms=True)
            for g in rf.guards:
                try:
                    if g.evaluate(point) == 0:
                        return Rejection(candidate, DOMAIN_VIOLATION, f"denominator {g} vanishes")
                except UndefinedAtPoint:
                    continue
            return Rejection(candidate, DOMAIN_VIOLATION, "equation undefined")
        if value != 0:
            return Rejection(candidate, DOMAIN_VIOLATION, f"residual {value} is not zero")
        return None
    parts = surd_parts(candidate)
    if parts is None:
        raise ValueError(f"cannot back-substitute {candidate}")
    rf = _numerator(f, x)
    for p in sorted(eq.provisos):
        prf = _numerator(p.subject, x)
        if poly_at_surd(prf.num, x, parts).is_zero():
            return Rejection(candidate, PROVISO_VIOLATION, f"proviso {p} fails")
    for g in rf.guards:
        if poly_at_surd(g, x, parts).is_zero():
            return Rejection(candidate, DOMAIN_VIOLATION, f"denominator {g} vanishes")
    if not poly_at_surd(rf.num, x, parts).is_zero():
        return Rejection(candidate, DOMAIN_VIOLATION, "residual is not zero")
    return None


def candidates(eq: Equation, mode: Mode = Mode.ROBUST) -> tuple[Polynomial, list[Expr], Completeness]:
    """Polynomial whose roots are the candidates, the candidates, completeness."""
    f = eq.difference if mode == Mode.ROBUST else simplify_naive(eq.difference)
    rf = _numerator(f, eq.unknown)
    roots, completeness = find_roots(rf.num, eq.unknown)
    return rf.num, roots, completeness


def solve(eq: Equation, mode: Mode | str = Mode.ROBUST) -> SolutionSet:
    mode = Mode(mode)
    _, found, completeness = candidates(eq, mode)
    if mode == Mode.NAIVE:
        return SolutionSet(tuple(found), completeness)
    roots, rejected = [], []
    for c in found:
        r = back_substitute(eq, c)
        if r is None:
            roots.append(c)
        else:
            rejected.append(r)
    return SolutionSet(tuple(roots), completeness, tuple(rejected))


def equation_from(lhs, rhs, unknown) -> Equation:
    if isinstance(lhs, AnnotatedExpr):
        return Equation(lhs.body, as_expr(rhs), as_expr(unknown), lhs.provisos)
    return Equation(as_expr(lhs), as_expr(rhs), as_expr(unknown))
