"""Proviso-emitting simplification.

``simplify`` runs any local rewrite rules innermost-first to a fixpoint
(bounded by a firing budget), then brings the expression to rational normal
form: numerator and denominator expanded, common univariate factors
cancelled.  Every denominator met on the way becomes a ``NonZero`` proviso
on the result, so the body is only claimed equal to the input where the
input is defined.  ``simplify_naive`` performs the same rewriting and throws
the provisos away.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import DivisionByZeroPolynomial, MultivariateUnsupported
from .expr import (
    AnnotatedExpr,
    Const,
    Expr,
    Ln,
    Piecewise,
    Power,
    Product,
    Proviso,
    Sum,
    Symbol,
    add,
    canonicalize,
    is_integer_const,
    mul,
    nonzero,
    piecewise,
    power,
)
from .polynomial import Polynomial, poly_divmod, poly_gcd, rational_parts

DEFAULT_BUDGET = 10_000

UNCONDITIONAL = "unconditional"
CONDITIONAL = "conditional"


@dataclass(frozen=True)
class RewriteRule:
    """A local rewrite.  ``apply`` returns (replacement, provisos) or None.

    ``op`` is the operation name under which the rule is looked up in the
    trust table.
    """

    name: str
    soundness: str
    apply: Callable[[Expr], tuple[Expr, Sequence[Expr]] | None]
    op: str = "simplify"


# Built-in normalization phases, listed for the trust table and traces.
EXPAND_RULE = RewriteRule("expand_and_collect", UNCONDITIONAL, lambda e: None, "simplify")
CANCEL_RULE = RewriteRule("cancel_rational", CONDITIONAL, lambda e: None, "cancel_rational")

LOCAL_RULES: tuple[RewriteRule, ...] = ()


@dataclass
class SimplifyTrace:
    result: AnnotatedExpr
    fired: list[str] = field(default_factory=list)

    @property
    def op(self) -> str:
        """Ledger operation name: conditional steps are tracked separately."""
        return "cancel_rational" if CANCEL_RULE.name in self.fired else "simplify"


@dataclass
class _State:
    rules: Sequence[RewriteRule]
    budget: int
    provisos: set = field(default_factory=set)
    fired: list = field(default_factory=list)

    def fire(self, name: str) -> None:
        if name not in self.fired:
            self.fired.append(name)

    def add_proviso(self, subject: Expr) -> None:
        p = subject if isinstance(subject, Proviso) else nonzero(subject)
        if p is not None:
            self.provisos.add(p)


def _rebuild(node: Expr, f: Callable[[Expr], Expr]) -> Expr:
    if isinstance(node, Sum):
        return add(*(f(t) for t in node.terms))
    if isinstance(node, Product):
        return mul(*(f(x) for x in node.factors))
    if isinstance(node, Power):
        return power(f(node.base), f(node.exp))
    if isinstance(node, Ln):
        return Ln(f(node.arg))
    if isinstance(node, Piecewise):
        return piecewise(((conds, f(body)) for conds, body in node.branches), f(node.default))
    return node


def _rewrite(node: Expr, st: _State) -> Expr:
    node = _rebuild(node, lambda c: _rewrite(c, st))
    while st.budget > 0:
        for rule in st.rules:
            out = rule.apply(node)
            if out is None:
                continue
            new, provisos = out
            new = canonicalize(new)
            if new == node:
                continue
            st.budget -= 1
            st.fire(rule.name)
            for p in provisos:
                st.add_proviso(p)
            node = _rebuild(new, lambda c: _rewrite(c, st))
            break
        else:
            break
    return node


def _lowest_terms(num: Polynomial, den: Polynomial, s: Expr | None = None) -> tuple[Polynomial, Polynomial]:
    """Cancel common factors when the denominator is univariate.

    The numerator may involve other variables; its gcd with the
    denominator is taken coefficient-wise in ``s``.
    """
    if den.is_zero():
        raise DivisionByZeroPolynomial("zero denominator")
    if num.is_zero():
        return num, Polynomial.const(1)
    if den.is_constant():
        return num.scale(1 / den.constant_value()), Polynomial.const(1)
    dvars = den.variables
    if s is None:
        if len(dvars) != 1:
            return _monic_den(num, den)
        (s,) = dvars
    if not den.is_univariate_in(s):
        return _monic_den(num, den)
    g = den
    for coeff in num.coefficients_in_others(s):
        g = poly_gcd(g, coeff, s)
        if g.is_constant():
            break
    if not g.is_constant():
        num = poly_divmod(num, g, s)[0]
        den = poly_divmod(den, g, s)[0]
    return _monic_den(num, den)


def _monic_den(num: Polynomial, den: Polynomial) -> tuple[Polynomial, Polynomial]:
    lc = den.leading_coefficient()
    return num.scale(1 / lc), den.scale(1 / lc)


def _quotient_expr(num: Polynomial, den: Polynomial) -> Expr:
    if den == Polynomial.const(1):
        return num.to_expr()
    return mul(num.to_expr(), power(den.to_expr(), -1))


def cancel_rational(num: Polynomial, den: Polynomial, s: Expr) -> AnnotatedExpr:
    """``num/den`` in lowest terms with the proviso NonZero(den).

    The proviso names the full original denominator, not only the factor
    that was cancelled.
    """
    if den.is_zero():
        raise DivisionByZeroPolynomial("cancel_rational: zero denominator")
    try:
        n2, d2 = _lowest_terms(num, den, s)
    except MultivariateUnsupported:
        n2, d2 = _monic_den(num, den)
    provisos = set()
    p = nonzero(den.to_expr())
    if p is not None:
        provisos.add(p)
    return AnnotatedExpr(_quotient_expr(n2, d2), frozenset(provisos))


def _is_rational_node(node: Expr) -> bool:
    return isinstance(node, (Const, Symbol, Sum, Product)) or (
        isinstance(node, Power) and is_integer_const(node.exp) and not isinstance(node.base, Const)
    )


def _map_atoms(node: Expr, f: Callable[[Expr], Expr]) -> Expr:
    if isinstance(node, (Const, Symbol)):
        return node
    if _is_rational_node(node):
        return _rebuild(node, lambda c: _map_atoms(c, f))
    return f(node)


def _normalize_atom(node: Expr, st: _State) -> Expr:
    if isinstance(node, Ln):
        return Ln(_normalize(node.arg, st))
    if isinstance(node, Power):
        return power(_normalize(node.base, st), _normalize(node.exp, st))
    if isinstance(node, Piecewise):
        branches = []
        for conds, body in node.branches:
            local = _State(st.rules, st.budget)
            new_body = _normalize(body, local)
            st.fired.extend(n for n in local.fired if n not in st.fired)
            branches.append((set(conds) | local.provisos, new_body))
        return piecewise(branches, _normalize(node.default, st))
    return node


def _normalize(node: Expr, st: _State) -> Expr:
    node = _map_atoms(node, lambda a: _normalize_atom(a, st))
    try:
        rf = rational_parts(node)
    except DivisionByZeroPolynomial:
        return node
    if rf.guards:
        st.fire(CANCEL_RULE.name)
        for g in rf.guards:
            st.add_proviso(g.to_expr())
    else:
        st.fire(EXPAND_RULE.name)
    num, den = _lowest_terms(rf.num, rf.den)
    return _quotient_expr(num, den)


def simplify_traced(
    e: Expr, rules: Sequence[RewriteRule] = LOCAL_RULES, budget: int = DEFAULT_BUDGET
) -> SimplifyTrace:
    st = _State(list(rules), budget)
    e = canonicalize(e)
    e = _rewrite(e, st)
    body = _normalize(e, st)
    return SimplifyTrace(AnnotatedExpr(body, frozenset(st.provisos)), st.fired)


def simplify(e: Expr, rules: Sequence[RewriteRule] = LOCAL_RULES, budget: int = DEFAULT_BUDGET) -> AnnotatedExpr:
    return simplify_traced(e, rules, budget).result


def simplify_naive(e: Expr, rules: Sequence[RewriteRule] = LOCAL_RULES, budget: int = DEFAULT_BUDGET) -> Expr:
    """Same rewriting as ``simplify`` with every proviso silently dropped.

    Models the flawed CAS pipeline; only reachable through naive mode.
    """
    return simplify_traced(e, rules, budget).result.body


__all__ = [
    "RewriteRule",
    "SimplifyTrace",
    "UNCONDITIONAL",
    "CONDITIONAL",
    "LOCAL_RULES",
    "cancel_rational",
    "simplify",
    "simplify_naive",
    "simplify_traced",
]
