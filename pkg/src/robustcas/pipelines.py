"""Recorded sessions for the standard worked scenarios.

Each builder runs the computation and appends one ledger step per stage, so
the resulting session can be discharged and exported as a certificate.
"""

from __future__ import annotations

from math import comb

from .calculus import integrate_power
from .checker import format_rejected, format_solutions
from .expr import Symbol, add, as_expr, mul, power, substitute
from .ledger import AlgorithmTrustTable, Session, record_step
from .parser import parse, parse_equation, render
from .polynomial import expand, rational_parts
from .simplify import simplify_naive, simplify_traced
from .solve import Equation, Mode, back_substitute, find_roots, solve

SOLVE_EXAMPLE = "(x^2-1)/(x-1) = 2"
INTEGRAL_EXAMPLE = "x^n"


def _equation_text(eq: Equation) -> str:
    return f"{render(eq.lhs)} = {render(eq.rhs)}"


def solve_session(
    text: str = SOLVE_EXAMPLE, unknown: str = "x", mode: Mode | str = Mode.ROBUST, table: AlgorithmTrustTable | None = None
) -> Session:
    """parse -> cancel -> find_roots -> back-substitute (robust) or trust (naive)."""
    mode = Mode(mode)
    session = Session(table or AlgorithmTrustTable.default())
    x = Symbol(unknown)
    lhs, rhs = parse_equation(text)
    eq = Equation(lhs, rhs, x)
    eq_text = _equation_text(eq)
    s_parse = record_step(session, "parse", [], eq_text, in_exprs=[text])

    f = eq.difference
    if mode == Mode.ROBUST:
        trace = simplify_traced(f)
        reduced = trace.result
        s_simp = record_step(session, trace.op, [s_parse], reduced, in_exprs=[render(f)])
        body = reduced.body
    else:
        body = simplify_naive(f)
        s_simp = record_step(session, "simplify_naive", [s_parse], body, in_exprs=[render(f)])

    num = rational_parts(body, allow_atoms=False).num
    roots, completeness = find_roots(num, x)
    s_roots = record_step(
        session, "find_roots", [s_simp], format_solutions(roots, completeness), in_exprs=[render(num.to_expr()), x.name]
    )
    candidates_text = format_solutions(roots)
    if mode == Mode.ROBUST:
        kept, rejected = [], []
        for r in roots:
            rej = back_substitute(eq, r)
            (kept if rej is None else rejected).append(rej or r)
        out = format_solutions(kept, completeness) + format_rejected(rejected)
        record_step(session, "back_substitute", [s_parse, s_roots], out, in_exprs=[eq_text, x.name, candidates_text])
    else:
        sols = solve(eq, Mode.NAIVE)
        record_step(
            session,
            "solve_naive",
            [s_parse, s_roots],
            format_solutions(sols.roots, sols.completeness),
            in_exprs=[eq_text, x.name, candidates_text],
        )
    return session


def integral_session(
    text: str = INTEGRAL_EXAMPLE, var: str = "x", param: str = "n", value: int = -1, table: AlgorithmTrustTable | None = None
) -> Session:
    """parse -> integrate_power -> substitute the parameter value."""
    session = Session(table or AlgorithmTrustTable.default())
    f = parse(text)
    s_parse = record_step(session, "parse", [], f, in_exprs=[text])
    F = integrate_power(f, var)
    s_int = record_step(session, "integrate_power", [s_parse], F, in_exprs=[render(f), var])
    special = substitute(F, param, value)
    record_step(session, "substitute", [s_int], special, in_exprs=[render(F.body), f"{param} = {value}"])
    return session


def binomial_sum(n: int, x: str = "x", y: str = "y"):
    """sum_k C(n, k) x^k y^(n-k), built directly from binomial coefficients."""
    xs, ys = as_expr(x), as_expr(y)
    return add(*(mul(comb(n, k), power(xs, k), power(ys, n - k)) for k in range(n + 1)))


def binomial_session(max_n: int = 12, table: AlgorithmTrustTable | None = None) -> Session:
    """Exact expansions of (x+y)^n plus an induction step left for a prover.

    The general statement for symbolic n needs induction, which no check in
    this package can discharge; that step is recorded and stays unexamined.
    """
    session = Session(table or AlgorithmTrustTable.default())
    ids = []
    for n in range(max_n + 1):
        source = power(add(Symbol("x"), Symbol("y")), n)
        ids.append(record_step(session, "expand", [], expand(source).to_expr(), in_exprs=[render(source)]))
    claim = "(x + y)^(n + 1) = (x + y)*(x + y)^n implies the binomial sum at n + 1"
    record_step(session, "induction_step", ids, claim, in_exprs=["(x + y)^n", "(x + y)^(n + 1)"])
    return session
