"""Canonical immutable expressions, provisos and exact point evaluation.

Expressions are built through the smart constructors ``add``, ``mul``,
``power``, ``ln`` and ``piecewise``; each returns a node already in canonical
form.  The raw node classes (``Sum``, ``Product`` ...) can be instantiated
directly to build arbitrary trees, which ``canonicalize`` then normalizes.

Canonical form:

* Sum/Product have at least two operands, sorted by ``sort_key``, never nested
  in a node of the same kind.
* Like terms are collected (``x + x -> 2*x``); the numeric coefficient of a
  product is its first factor.
* Integer powers of a common base are merged only when the exponents share a
  sign, so ``x*x^-1`` is *not* folded to 1.  Cancelling such pairs changes
  the domain of definition and is the simplifier's job, where it must emit a
  proviso.
* ``b^0 -> 1``, ``b^1 -> b``, numeric powers fold when the result is rational.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

from .errors import (
    NonRationalValue,
    SpecializationViolation,
    UndefinedAtPoint,
    ZeroProviso,
)

Rational = Fraction
Number = Union[int, Fraction]

# Kind tags double as the first component of the total order.
CONST, SYMBOL, POWER, PRODUCT, SUM, LN, PIECEWISE = range(7)


class Expr:
    __slots__ = ("_key", "_hash")
    tag: int = -1

    def _init_key(self, key: tuple) -> None:
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))

    @property
    def key(self) -> tuple:
        return self._key

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return self._hash == other._hash and self._key == other._key

    def __ne__(self, other: object) -> bool:
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Expr") -> bool:
        return self._key < other._key

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __str__(self) -> str:
        from .parser import render

        return render(self)

    def children(self) -> tuple["Expr", ...]:
        return ()

    # Operator sugar, mostly for tests and interactive use.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(-1, other))

    def __rsub__(self, other):
        return add(other, mul(-1, self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return mul(self, power(other, -1))

    def __rtruediv__(self, other):
        return mul(other, power(self, -1))

    def __pow__(self, other):
        return power(self, other)

    def __neg__(self):
        return mul(-1, self)


class Const(Expr):
    __slots__ = ("value",)
    tag = CONST

    def __init__(self, value: Number):
        object.__setattr__(self, "value", Fraction(value))
        self._init_key((CONST, self.value))

    def __repr__(self) -> str:
        return f"Const({self.value})"


class Symbol(Expr):
    __slots__ = ("name",)
    tag = SYMBOL

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)
        self._init_key((SYMBOL, name))

    def __repr__(self) -> str:
        return f"Symbol({self.name!r})"


class Sum(Expr):
    __slots__ = ("terms",)
    tag = SUM

    def __init__(self, terms: Iterable[Expr]):
        terms = tuple(terms)
        object.__setattr__(self, "terms", terms)
        self._init_key((SUM, tuple(t.key for t in terms)))

    def children(self):
        return self.terms

    def __repr__(self) -> str:
        return f"Sum({list(self.terms)!r})"


class Product(Expr):
    __slots__ = ("factors",)
    tag = PRODUCT

    def __init__(self, factors: Iterable[Expr]):
        factors = tuple(factors)
        object.__setattr__(self, "factors", factors)
        self._init_key((PRODUCT, tuple(f.key for f in factors)))

    def children(self):
        return self.factors

    def __repr__(self) -> str:
        return f"Product({list(self.factors)!r})"


class Power(Expr):
    __slots__ = ("base", "exp")
    tag = POWER

    def __init__(self, base: Expr, exp: Expr):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exp", exp)
        self._init_key((POWER, base.key, exp.key))

    def children(self):
        return (self.base, self.exp)

    def __repr__(self) -> str:
        return f"Power({self.base!r}, {self.exp!r})"


class Ln(Expr):
    __slots__ = ("arg",)
    tag = LN

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)
        self._init_key((LN, arg.key))

    def children(self):
        return (self.arg,)

    def __repr__(self) -> str:
        return f"Ln({self.arg!r})"


@dataclass(frozen=True)
class Proviso:
    """Side condition ``subject != 0``."""

    subject: Expr

    def __post_init__(self):
        if isinstance(self.subject, Const):
            if self.subject.value == 0:
                raise ZeroProviso("NonZero(0) can never hold")
            raise ValueError("nonzero constant provisos are discharged, not stored")

    @property
    def key(self) -> tuple:
        return self.subject.key

    def __lt__(self, other: "Proviso") -> bool:
        return self.key < other.key

    def __str__(self) -> str:
        return f"{self.subject} != 0"


class Piecewise(Expr):
    """``branches`` is a tuple of (conditions, body); ``default`` applies otherwise."""

    __slots__ = ("branches", "default")
    tag = PIECEWISE

    def __init__(self, branches: Iterable[tuple[frozenset, Expr]], default: Expr):
        branches = tuple((frozenset(c), b) for c, b in branches)
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "default", default)
        self._init_key(
            (
                PIECEWISE,
                tuple((tuple(sorted(p.key for p in c)), b.key) for c, b in branches),
                default.key,
            )
        )

    def children(self):
        out = []
        for conds, body in self.branches:
            out.extend(p.subject for p in sorted(conds))
            out.append(body)
        out.append(self.default)
        return tuple(out)

    def __repr__(self) -> str:
        return f"Piecewise({list(self.branches)!r}, {self.default!r})"


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)


def sort_key(e: Expr) -> tuple:
    return e.key


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        return Const(x)
    if isinstance(x, str):
        return Symbol(x)
    raise TypeError(f"cannot convert {x!r} to an expression")


def is_const(e: Expr, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def is_integer_const(e: Expr) -> bool:
    return isinstance(e, Const) and e.value.denominator == 1


# --- exact roots -----------------------------------------------------------


def integer_root(n: int, k: int) -> int | None:
    """Exact k-th root of a non-negative integer, or None."""
    if n < 0:
        raise ValueError("negative radicand")
    if n < 2:
        return n
    x = 1 << ((n.bit_length() + k - 1) // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    return x if x**k == n else None


def rational_root(q: Fraction, k: int) -> Fraction | None:
    """Exact real k-th root of ``q`` when it is rational (odd k allows q < 0)."""
    if q < 0:
        if k % 2 == 0:
            return None
        r = rational_root(-q, k)
        return None if r is None else -r
    num = integer_root(q.numerator, k)
    den = integer_root(q.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den)


# --- smart constructors ----------------------------------------------------


def _split_coeff(t: Expr) -> tuple[Fraction, Expr]:
    if isinstance(t, Const):
        return t.value, ONE
    if isinstance(t, Product) and isinstance(t.factors[0], Const):
        rest = t.factors[1:]
        return t.factors[0].value, rest[0] if len(rest) == 1 else Product(rest)
    return Fraction(1), t


def _scale(rest: Expr, c: Fraction) -> Expr:
    if rest == ONE:
        return Const(c)
    if c == 1:
        return rest
    if isinstance(rest, Product):
        return Product((Const(c),) + rest.factors)
    return Product((Const(c), rest))


def add(*args) -> Expr:
    const = Fraction(0)
    coeffs: dict[Expr, Fraction] = {}
    flat: list[Expr] = []
    for a in args:
        a = as_expr(a)
        if isinstance(a, Sum):
            flat.extend(a.terms)
        else:
            flat.append(a)
    for t in flat:
        if isinstance(t, Const):
            const += t.value
            continue
        c, rest = _split_coeff(t)
        coeffs[rest] = coeffs.get(rest, Fraction(0)) + c
    terms = [_scale(rest, c) for rest, c in coeffs.items() if c != 0]
    if const != 0:
        terms.append(Const(const))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    terms.sort(key=sort_key)
    return Sum(terms)


def mul(*args) -> Expr:
    coef = Fraction(1)
    flat: list[Expr] = []
    for a in args:
        a = as_expr(a)
        if isinstance(a, Product):
            flat.extend(a.factors)
        else:
            flat.append(a)
    groups: dict[tuple[Expr, bool], Fraction] = {}
    others: list[Expr] = []
    for f in flat:
        if isinstance(f, Const):
            coef *= f.value
            continue
        base, exp = (f.base, f.exp) if isinstance(f, Power) else (f, ONE)
        if isinstance(base, Const) or not is_integer_const(exp):
            others.append(f)
            continue
        k = (base, exp.value > 0)
        groups[k] = groups.get(k, Fraction(0)) + exp.value
    if coef == 0:
        return ZERO
    factors: list[Expr] = []
    for (base, _), n in groups.items():
        p = power(base, Const(n))
        if isinstance(p, Const):
            coef *= p.value
        elif isinstance(p, Product):
            for f in p.factors:
                if isinstance(f, Const):
                    coef *= f.value
                else:
                    factors.append(f)
        else:
            factors.append(p)
    factors.extend(others)
    if coef == 0:
        return ZERO
    factors.sort(key=sort_key)
    if not factors:
        return Const(coef)
    if coef == 1 and len(factors) == 1:
        return factors[0]
    if coef != 1:
        factors.insert(0, Const(coef))
    return Product(factors)


def _fold_numeric_power(b: Fraction, e: Fraction) -> Fraction | None:
    if e.denominator == 1:
        n = int(e)
        if b == 0 and n <= 0:
            return None
        return b**n
    if b == 0:
        return Fraction(0) if e > 0 else None
    r = rational_root(b, e.denominator)
    if r is None:
        return None
    return r**e.numerator


def power(base, exp) -> Expr:
    b = as_expr(base)
    e = as_expr(exp)
    if isinstance(e, Const):
        if e.value == 0:
            return Power(b, e) if is_const(b, 0) else ONE
        if e.value == 1:
            return b
    if isinstance(b, Const):
        if b.value == 1:
            return ONE
        if isinstance(e, Const):
            v = _fold_numeric_power(b.value, e.value)
            if v is not None:
                return Const(v)
        return Power(b, e)
    if is_integer_const(e):
        n = e.value
        if isinstance(b, Power) and is_integer_const(b.exp):
            a = b.exp.value
            if not (a < 0 and n < 0):
                return power(b.base, Const(a * n))
            # (c^a)^n with a, n < 0 equals c^(a*n) except at c = 0; keep that
            # exclusion in the single form (c^-1)^-(a*n)
            inner = b.base
            if isinstance(inner, Power) and inner.exp == MINUS_ONE:
                return power(inner.base, Const(-a * n))
            if a == -1:
                return Power(b, e)
            return power(power(inner, -1), Const(-a * n))
        if isinstance(b, Product):
            return mul(*(power(f, e) for f in b.factors))
    return Power(b, e)


def ln(arg) -> Expr:
    return Ln(as_expr(arg))


def piecewise(branches: Iterable[tuple[Iterable, Expr]], default) -> Expr:
    """Build a canonical piecewise; conditions may be Provisos or subject Exprs.

    Conditions that fold to a nonzero constant are dropped (they hold); a
    condition folding to 0 removes its branch.  The first branch whose
    conditions all hold absorbs everything after it.
    """
    default = as_expr(default)
    kept: list[tuple[frozenset, Expr]] = []
    for conds, body in branches:
        body = as_expr(body)
        live = set()
        dead = False
        for c in conds:
            subject = c.subject if isinstance(c, Proviso) else as_expr(c)
            if isinstance(subject, Const):
                if subject.value == 0:
                    dead = True
                    break
                continue
            live.add(Proviso(subject))
        if dead:
            continue
        if not live:
            default = body
            break
        kept.append((frozenset(live), body))
    if not kept:
        return default
    return Piecewise(kept, default)


def neg(e) -> Expr:
    return mul(-1, e)


def sub(a, b) -> Expr:
    return add(a, mul(-1, b))


def div(a, b) -> Expr:
    return mul(a, power(b, -1))


def canonicalize(e: Expr) -> Expr:
    if isinstance(e, (Const, Symbol)):
        return e
    if isinstance(e, Sum):
        return add(*(canonicalize(t) for t in e.terms))
    if isinstance(e, Product):
        return mul(*(canonicalize(f) for f in e.factors))
    if isinstance(e, Power):
        return power(canonicalize(e.base), canonicalize(e.exp))
    if isinstance(e, Ln):
        return Ln(canonicalize(e.arg))
    if isinstance(e, Piecewise):
        return piecewise(
            (((canonicalize(p.subject) for p in conds), canonicalize(body)) for conds, body in e.branches),
            canonicalize(e.default),
        )
    raise TypeError(f"not an expression node: {e!r}")


def nonzero(subject) -> Proviso | None:
    """Create ``NonZero(subject)``; nonzero constants are discharged (None)."""
    s = canonicalize(as_expr(subject))
    if isinstance(s, Const):
        if s.value == 0:
            raise ZeroProviso("NonZero(0) can never hold")
        return None
    return Proviso(s)


@dataclass(frozen=True)
class AnnotatedExpr:
    """``body`` equals the originating expression wherever every proviso holds."""

    body: Expr
    provisos: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "provisos", frozenset(self.provisos))

    def sorted_provisos(self) -> list[Proviso]:
        return sorted(self.provisos)

    def __str__(self) -> str:
        if not self.provisos:
            return str(self.body)
        conds = ", ".join(str(p) for p in self.sorted_provisos())
        return f"{self.body}  provided {conds}"


# --- traversal -------------------------------------------------------------


def free_symbols(e) -> set[Symbol]:
    if isinstance(e, AnnotatedExpr):
        out = free_symbols(e.body)
        for p in e.provisos:
            out |= free_symbols(p.subject)
        return out
    if isinstance(e, Proviso):
        return free_symbols(e.subject)
    out: set[Symbol] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Symbol):
            out.add(node)
        else:
            stack.extend(node.children())
    return out


def contains(e: Expr, predicate: Callable[[Expr], bool]) -> bool:
    stack = [e]
    while stack:
        node = stack.pop()
        if predicate(node):
            return True
        stack.extend(node.children())
    return False


def subs(e: Expr, mapping: Mapping[Symbol, Expr]) -> Expr:
    """Replace symbols and re-canonicalize in one bottom-up pass."""
    if not mapping:
        return e
    if isinstance(e, Symbol):
        return mapping.get(e, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Sum):
        return add(*(subs(t, mapping) for t in e.terms))
    if isinstance(e, Product):
        return mul(*(subs(f, mapping) for f in e.factors))
    if isinstance(e, Power):
        return power(subs(e.base, mapping), subs(e.exp, mapping))
    if isinstance(e, Ln):
        return Ln(subs(e.arg, mapping))
    if isinstance(e, Piecewise):
        return piecewise(
            (((subs(p.subject, mapping) for p in conds), subs(body, mapping)) for conds, body in e.branches),
            subs(e.default, mapping),
        )
    raise TypeError(f"not an expression node: {e!r}")


def substitute(e, s, v) -> AnnotatedExpr:
    """Substitute ``v`` for symbol ``s`` in an annotated expression.

    Raises SpecializationViolation if any proviso becomes NonZero(0).
    Provisos that become nonzero constants are discharged.
    """
    if isinstance(e, Expr):
        e = AnnotatedExpr(e)
    s = as_expr(s)
    if not isinstance(s, Symbol):
        raise TypeError("substitution target must be a symbol")
    mapping = {s: canonicalize(as_expr(v))}
    provisos = set()
    for p in e.sorted_provisos():
        subject = subs(p.subject, mapping)
        if isinstance(subject, Const):
            if subject.value == 0:
                raise SpecializationViolation(
                    f"substituting {s} = {mapping[s]} violates the proviso {p}", p
                )
            continue
        provisos.add(Proviso(subject))
    return AnnotatedExpr(subs(e.body, mapping), frozenset(provisos))


# --- evaluation ------------------------------------------------------------


def _point(a: Mapping) -> dict[str, Fraction]:
    out = {}
    for k, v in a.items():
        name = k.name if isinstance(k, Symbol) else k
        out[name] = Fraction(v)
    return out


def power_value(b: Fraction, e: Fraction) -> Fraction:
    if e.denominator == 1:
        n = int(e)
        if b == 0 and n <= 0:
            raise UndefinedAtPoint(f"0^{n} is undefined")
        return b**n
    if b == 0:
        if e > 0:
            return Fraction(0)
        raise UndefinedAtPoint(f"0^({e}) is undefined")
    if b < 0 and e.denominator % 2 == 0:
        raise UndefinedAtPoint(f"({b})^({e}) has no real value")
    r = rational_root(b, e.denominator)
    if r is None:
        raise NonRationalValue(f"({b})^({e}) is irrational")
    return r**e.numerator


def evaluate(e: Expr, a: Mapping, ln_value: Callable[[Fraction], Fraction] | None = None) -> Fraction:
    """Exact value of ``e`` at the point ``a`` (symbol or name -> rational).

    ``ln_value`` optionally interprets ln at positive rational arguments;
    without it, any ln raises NonRationalValue.
    """
    point = _point(a)

    def ev(node: Expr) -> Fraction:
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Symbol):
            try:
                return point[node.name]
            except KeyError:
                raise KeyError(f"no value assigned to {node.name}") from None
        if isinstance(node, Sum):
            return sum((ev(t) for t in node.terms), Fraction(0))
        if isinstance(node, Product):
            vals = [ev(f) for f in node.factors]
            out = Fraction(1)
            for v in vals:
                out *= v
            return out
        if isinstance(node, Power):
            return power_value(ev(node.base), ev(node.exp))
        if isinstance(node, Ln):
            v = ev(node.arg)
            if v <= 0:
                raise UndefinedAtPoint(f"ln({v}) is undefined")
            if ln_value is None:
                raise NonRationalValue(f"ln({v}) is not evaluated in exact mode")
            return Fraction(ln_value(v))
        if isinstance(node, Piecewise):
            for conds, body in node.branches:
                values = [ev(p.subject) for p in sorted(conds)]
                if all(v != 0 for v in values):
                    return ev(body)
            return ev(node.default)
        raise TypeError(f"not an expression node: {node!r}")

    return ev(e)
