"""Exact multivariate polynomials over the rationals.

Variables are expressions: ordinarily symbols, but the rational-function
view used by the simplifier and checker also admits opaque *atoms* such as
``ln(x)`` or ``x^n`` as independent indeterminates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import (
    DivisionByZeroPolynomial,
    MultivariateUnsupported,
    NonConstantLeadingCoefficient,
    NotPolynomial,
)
from .expr import (
    Const,
    Expr,
    Ln,
    Piecewise,
    Power,
    Product,
    Sum,
    Symbol,
    add,
    evaluate,
    is_integer_const,
    mul,
    power,
)

_END = ((100,), 0)


class Monomial:
    """Sorted tuple of (variable, positive exponent) pairs."""

    __slots__ = ("powers", "_hash")

    def __init__(self, powers: Iterable[tuple[Expr, int]] = ()):
        merged: dict[Expr, int] = {}
        for v, e in powers:
            merged[v] = merged.get(v, 0) + e
        items = tuple(sorted(((v, e) for v, e in merged.items() if e != 0), key=lambda p: p[0].key))
        if any(e < 0 for _, e in items):
            raise ValueError("negative exponent in monomial")
        object.__setattr__(self, "powers", items)
        object.__setattr__(self, "_hash", hash(items))

    def __setattr__(self, name, value):
        raise AttributeError("Monomial is immutable")

    def __eq__(self, other):
        return isinstance(other, Monomial) and self.powers == other.powers

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "Monomial(" + ", ".join(f"{v}^{e}" for v, e in self.powers) + ")"

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.powers)

    def degree_in(self, v: Expr) -> int:
        for w, e in self.powers:
            if w == v:
                return e
        return 0

    def without(self, v: Expr) -> "Monomial":
        return Monomial((w, e) for w, e in self.powers if w != v)

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.powers + other.powers)

    def order_key(self) -> tuple:
        # Ascending sort by this key lists monomials in descending graded-lex order.
        return (-self.degree, tuple((v.key, -e) for v, e in self.powers) + (_END,))


ONE_MONOMIAL = Monomial()


class Polynomial:
    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        clean = {m: Fraction(c) for m, c in (terms or {}).items() if c != 0}
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @classmethod
    def const(cls, c) -> "Polynomial":
        return cls({ONE_MONOMIAL: Fraction(c)})

    @classmethod
    def var(cls, v: Expr | str) -> "Polynomial":
        if isinstance(v, str):
            v = Symbol(v)
        return cls({Monomial([(v, 1)]): Fraction(1)})

    # -- structure --

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        return sorted(self.terms.items(), key=lambda mc: mc[0].order_key())

    @property
    def variables(self) -> frozenset:
        return frozenset(v for m in self.terms for v, _ in m.powers)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(m == ONE_MONOMIAL for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms.get(ONE_MONOMIAL, Fraction(0))

    def total_degree(self) -> int:
        return max((m.degree for m in self.terms), default=-1)

    def degree(self, v: Expr) -> int:
        """Degree in ``v``; -1 for the zero polynomial."""
        return max((m.degree_in(v) for m in self.terms), default=-1)

    def leading_coefficient(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        return self.sorted_terms()[0][1]

    def monic(self) -> "Polynomial":
        if not self.terms:
            return self
        return self.scale(1 / self.leading_coefficient())

    def coefficients_in(self, v: Expr) -> dict[int, "Polynomial"]:
        """Map k -> coefficient polynomial of v^k (in the remaining variables)."""
        groups: dict[int, dict[Monomial, Fraction]] = {}
        for m, c in self.terms.items():
            groups.setdefault(m.degree_in(v), {})[m.without(v)] = c
        return {k: Polynomial(t) for k, t in groups.items()}

    def coefficients_in_others(self, v: Expr) -> list["Polynomial"]:
        """Univariate-in-v coefficients of each monomial in the other variables."""
        groups: dict[Monomial, dict[Monomial, Fraction]] = {}
        for m, c in self.terms.items():
            groups.setdefault(m.without(v), {})[Monomial([(v, m.degree_in(v))])] = c
        return [Polynomial(t) for _, t in sorted(groups.items(), key=lambda kv: kv[0].order_key())]

    def is_univariate_in(self, v: Expr) -> bool:
        return self.variables <= {v}

    def univariate_coeffs(self, v: Expr) -> list[Fraction]:
        """Dense coefficient list, lowest degree first."""
        if not self.is_univariate_in(v):
            raise MultivariateUnsupported(f"polynomial involves variables other than {v}")
        out = [Fraction(0)] * (self.degree(v) + 1)
        for m, c in self.terms.items():
            out[m.degree_in(v)] = c
        return out

    # -- arithmetic --

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.const(other)
        return isinstance(other, Polynomial) and self.terms == other.terms

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(frozenset(self.terms.items()))
            object.__setattr__(self, "_hash", h)
        return h

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        return Polynomial.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c) -> "Polynomial":
        c = Fraction(c)
        return Polynomial({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 * m2
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative polynomial power")
        result = Polynomial.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def derivative(self, v: Expr) -> "Polynomial":
        out: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            k = m.degree_in(v)
            if k:
                nm = Monomial(m.without(v).powers + ((v, k - 1),))
                out[nm] = out.get(nm, Fraction(0)) + c * k
        return Polynomial(out)

    # -- conversion --

    def to_expr(self) -> Expr:
        return add(*(mul(Const(c), *(power(v, e) for v, e in m.powers)) for m, c in self.sorted_terms()))

    def evaluate(self, point: Mapping) -> Fraction:
        return evaluate(self.to_expr(), point)

    def __repr__(self):
        return f"Polynomial({self.to_expr()})"

    def __str__(self):
        return str(self.to_expr())


def _is_atom(e: Expr) -> bool:
    return not isinstance(e, (Const, Symbol, Sum, Product)) and not (
        isinstance(e, Power) and is_integer_const(e.exp) and not isinstance(e.base, Const)
    )


def expand(e: Expr) -> Polynomial:
    """Distributed normal form of a polynomial expression.

    Raises NotPolynomial naming the first non-polynomial subterm.
    """
    if isinstance(e, Const):
        return Polynomial.const(e.value)
    if isinstance(e, Symbol):
        return Polynomial.var(e)
    if isinstance(e, Sum):
        out = Polynomial()
        for t in e.terms:
            out = out + expand(t)
        return out
    if isinstance(e, Product):
        out = Polynomial.const(1)
        for f in e.factors:
            out = out * expand(f)
        return out
    # a literal base that survived canonicalization is 0^0, which is undefined
    if isinstance(e, Power) and is_integer_const(e.exp) and e.exp.value >= 0 and not isinstance(e.base, Const):
        return expand(e.base) ** int(e.exp.value)
    raise NotPolynomial(f"not a polynomial: {e}", e)


def poly_divmod(p: Polynomial, d: Polynomial, s: Expr) -> tuple[Polynomial, Polynomial]:
    """Division in ``s`` with polynomial coefficients: p = q*d + r, deg_s r < deg_s d."""
    if d.is_zero():
        raise DivisionByZeroPolynomial("division by the zero polynomial")
    n = d.degree(s)
    lead = d.coefficients_in(s)[n]
    if not lead.is_constant():
        raise NonConstantLeadingCoefficient(f"leading coefficient {lead} of the divisor in {s} is not a rational constant")
    inv = 1 / lead.constant_value()
    q = Polynomial()
    r = p
    while not r.is_zero() and r.degree(s) >= n:
        k = r.degree(s)
        lc = r.coefficients_in(s)[k]
        t = lc.scale(inv) * (Polynomial.var(s) ** (k - n))
        q = q + t
        r = r - t * d
    return q, r


def poly_gcd(p: Polynomial, q: Polynomial, s: Expr) -> Polynomial:
    """Monic gcd of two univariate polynomials in ``s``."""
    for poly in (p, q):
        if not poly.is_univariate_in(s):
            raise MultivariateUnsupported(f"{poly} is not univariate in {s}")
    a, b = p, q
    while not b.is_zero():
        a, b = b, poly_divmod(a, b, s)[1]
    return a.monic()


def squarefree_part(p: Polynomial, s: Expr) -> Polynomial:
    """Monic product of the distinct irreducible factors of a univariate p."""
    if p.is_zero() or p.degree(s) <= 0:
        return p.monic()
    g = poly_gcd(p, p.derivative(s), s)
    return poly_divmod(p, g, s)[0].monic()


@dataclass(frozen=True)
class RationalFunction:
    """``num/den`` over symbols and atoms; ``guards`` are the monic polynomials
    whose vanishing makes the source expression undefined (each den factor
    included)."""

    num: Polynomial
    den: Polynomial
    guards: tuple[Polynomial, ...]
    atoms: frozenset


def _add_guards(*groups: Iterable[Polynomial]) -> tuple[Polynomial, ...]:
    out: list[Polynomial] = []
    for g in groups:
        for p in g:
            if not p.is_constant() and p not in out:
                out.append(p)
    return tuple(out)


def rational_parts(e: Expr, allow_atoms: bool = True) -> RationalFunction:
    """View ``e`` as a quotient of polynomials.

    Non-rational subterms (ln, piecewise, non-integer or symbolic powers,
    powers of the literal 0 with non-positive exponents) become atoms when
    ``allow_atoms``; otherwise NotPolynomial is raised for them.
    """
    atoms: set = set()

    def atom(node: Expr):
        if not allow_atoms:
            raise NotPolynomial(f"not a rational function: {node}", node)
        atoms.add(node)
        return Polynomial.var(node), Polynomial.const(1), ()

    def walk(node: Expr):
        if isinstance(node, Const):
            return Polynomial.const(node.value), Polynomial.const(1), ()
        if isinstance(node, Symbol):
            return Polynomial.var(node), Polynomial.const(1), ()
        if isinstance(node, Sum):
            num, den, guards = walk(node.terms[0])
            for t in node.terms[1:]:
                n2, d2, g2 = walk(t)
                if d2 == den:
                    num = num + n2
                else:
                    num = num * d2 + n2 * den
                    den = den * d2
                guards = _add_guards(guards, g2)
            return num, den, guards
        if isinstance(node, Product):
            num, den, guards = Polynomial.const(1), Polynomial.const(1), ()
            for f in node.factors:
                n2, d2, g2 = walk(f)
                num, den, guards = num * n2, den * d2, _add_guards(guards, g2)
            return num, den, guards
        if isinstance(node, Power) and is_integer_const(node.exp) and not isinstance(node.base, Const):
            k = int(node.exp.value)
            n, d, g = walk(node.base)
            if k >= 0:
                return n**k, d**k, g
            if n.is_zero():
                raise DivisionByZeroPolynomial(f"{node} divides by zero")
            return d ** (-k), n ** (-k), _add_guards(g, [n.monic()])
        if isinstance(node, Power) and isinstance(node.base, Const) and is_integer_const(node.exp):
            # Only unfoldable numeric powers reach here: 0^k with k <= 0.
            return atom(node)
        if isinstance(node, (Power, Ln, Piecewise)):
            return atom(node)
        raise TypeError(f"not an expression node: {node!r}")

    num, den, guards = walk(e)
    return RationalFunction(num, den, guards, frozenset(atoms))
