"""Independent verification of ledger steps.

Identities are checked two ways.  Path A is exact: both sides are viewed as
quotients of polynomials (non-rational subterms other than ``ln`` become
shared indeterminates), the cross-multiplied difference is expanded, and the
guards of the two sides are compared against each other and the provisos.
Path B evaluates both sides at seeded random integer points that avoid
proviso zeros, undefined points and non-positive ``ln`` arguments.  A Valid verdict means Path A proved the
identity and Path B found nothing against it.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .calculus import differentiate
from .errors import CASError, NonRationalValue, NotPolynomial, UndefinedAtPoint
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
    contains,
    evaluate,
    free_symbols,
    mul,
    power,
    sub,
    subs,
)
from .ledger import (
    CheckerStatus,
    Session,
    all_effective,
    earliest_weak_step,
    set_status,
    terminal_steps,
)
from .parser import parse, parse_equation, render
from .polynomial import Polynomial, poly_divmod, rational_parts, squarefree_part
from .solve import Completeness, Equation, SolutionSet, find_roots, surd_parts

EXPONENT_RANGE = 12
GRID = (0, 1, -1, 2, -2, 3, -3)


@dataclass(frozen=True)
class CheckerConfig:
    trials: int = 20
    bound: int = 10**6
    resample_limit: int = 100
    seed: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.bound < 10:
            raise ValueError("bound must be at least 10")
        if self.resample_limit < 1:
            raise ValueError("resample_limit must be at least 1")


# --- verdicts --------------------------------------------------------------


@dataclass(frozen=True)
class Valid:
    name = "Valid"


@dataclass(frozen=True)
class ProbablyValid:
    trials: int
    error_bound: Fraction | None
    name = "ProbablyValid"


@dataclass(frozen=True)
class Refuted:
    witness: Mapping[str, object]
    detail: str = ""
    name = "Refuted"


@dataclass(frozen=True)
class Inconclusive:
    reason: str
    name = "Inconclusive"


Verdict = Valid | ProbablyValid | Refuted | Inconclusive

_RANK = {"Refuted": 0, "Inconclusive": 1, "ProbablyValid": 2, "Valid": 3}


def weakest(verdicts: Iterable[Verdict]) -> Verdict:
    return min(verdicts, key=lambda v: _RANK[v.name], default=Valid())


# --- obligations -----------------------------------------------------------


@dataclass(frozen=True)
class Identity:
    lhs: Expr
    rhs: Expr
    provisos: frozenset = frozenset()


@dataclass(frozen=True)
class Antiderivative:
    F: object  # Expr, AnnotatedExpr or Piecewise
    f: Expr
    symbol: Symbol
    provisos: frozenset = frozenset()


@dataclass(frozen=True)
class Solutions:
    equation: Equation
    solutions: SolutionSet
    rejected: tuple = ()


@dataclass(frozen=True)
class RootsOf:
    polynomial: Expr
    symbol: Symbol
    roots: tuple
    completeness: Completeness


@dataclass(frozen=True)
class Specialization:
    source: Expr
    mapping: Mapping[Symbol, Expr]
    result: Expr
    provisos: frozenset = frozenset()


@dataclass(frozen=True)
class Unchecked:
    reason: str


# --- sampling --------------------------------------------------------------


def derive_seed(text: str, override: int | None = None) -> int:
    material = text if override is None else f"{override}:{text}"
    return int.from_bytes(hashlib.sha256(material.encode("utf-8")).digest()[:8], "big")


def _exponent_symbols(exprs: Iterable[Expr]) -> set[Symbol]:
    out: set[Symbol] = set()
    for e in exprs:
        stack = [e]
        while stack:
            node = stack.pop()
            if isinstance(node, Power) and not isinstance(node.exp, Const):
                out |= free_symbols(node.exp)
            stack.extend(node.children())
    return out


def _has_ln(exprs: Iterable[Expr]) -> bool:
    return any(contains(e, lambda n: isinstance(n, Ln)) for e in exprs)


def _ln_args(exprs: Iterable[Expr]) -> list[Expr]:
    out: list[Expr] = []
    for e in exprs:
        stack = [e]
        while stack:
            node = stack.pop()
            if isinstance(node, Ln) and node.arg not in out:
                out.append(node.arg)
            stack.extend(node.children())
    return out


class _Sampler:
    """Draws points for a fixed set of expressions; ln is uninterpreted."""

    def __init__(self, exprs: list[Expr], cfg: CheckerConfig, seed: int):
        self.symbols = sorted(set().union(*(free_symbols(e) for e in exprs)) if exprs else set())
        self.small = _exponent_symbols(exprs)
        # ln stays uninterpreted, but only at points where the real logarithm exists
        self.ln_args = _ln_args(exprs)
        self.cfg = cfg
        self.rng = random.Random(seed)
        self.ln_table: dict[Fraction, Fraction] = {}

    def ln_value(self, arg: Fraction) -> Fraction:
        if arg not in self.ln_table:
            self.ln_table[arg] = Fraction(self.rng.randint(-self.cfg.bound, self.cfg.bound), self.rng.randint(1, 97))
        return self.ln_table[arg]

    def draw(self) -> dict[Symbol, Fraction]:
        point = {}
        for s in self.symbols:
            b = EXPONENT_RANGE if s in self.small else self.cfg.bound
            point[s] = Fraction(self.rng.randint(-b, b))
        return point

    def grid(self, limit: int = 400):
        values = [Fraction(v) for v in GRID]
        for combo in itertools.islice(itertools.product(values, repeat=len(self.symbols)), limit):
            yield dict(zip(self.symbols, combo))


def _values_at(lhs: Expr, rhs: Expr, provisos, point, sampler: _Sampler):
    """(lhs value, rhs value) at an admissible point, else None."""
    try:
        for p in provisos:
            if evaluate(p.subject, point, sampler.ln_value) == 0:
                return None
        if any(evaluate(a, point, sampler.ln_value) <= 0 for a in sampler.ln_args):
            return None
        return evaluate(lhs, point, sampler.ln_value), evaluate(rhs, point, sampler.ln_value)
    except (UndefinedAtPoint, NonRationalValue):
        return None


def _witness(point: Mapping[Symbol, Fraction]) -> dict[str, Fraction]:
    return {s.name: v for s, v in sorted(point.items())}


def _search_witness(lhs, rhs, provisos, cfg: CheckerConfig, seed: int) -> dict | None:
    sampler = _Sampler([lhs, rhs, *(p.subject for p in provisos)], cfg, seed)
    if _has_ln([lhs, rhs]):
        return None
    points = itertools.chain(sampler.grid(), (sampler.draw() for _ in range(cfg.trials * cfg.resample_limit)))
    for point in points:
        vals = _values_at(lhs, rhs, provisos, point, sampler)
        if vals is not None and vals[0] != vals[1]:
            return _witness(point)
    return None


# --- identity checking -----------------------------------------------------


@dataclass
class IdentityReport:
    verdict: Verdict
    path_a: Verdict | None = None
    path_b: Verdict | None = None

    @property
    def agree(self) -> bool | None:
        if self.path_a is None or self.path_b is None:
            return None
        conflict = (self.path_a.name == "Valid" and self.path_b.name == "Refuted") or (
            self.path_a.name == "Refuted" and self.path_b.name == "ProbablyValid"
        )
        return not conflict


def _proviso_polys(provisos) -> list[Polynomial]:
    out = []
    for p in provisos:
        rf = rational_parts(p.subject)
        if not rf.num.is_constant():
            out.append(rf.num.monic())
        out.extend(rf.guards)
    return out


def _covered(g: Polynomial, others: list[Polynomial]) -> bool:
    """Every zero of ``g`` is a zero of some polynomial in ``others``."""
    if g in others:
        return True
    if len(g.variables) != 1:
        return False
    (s,) = g.variables
    h = Polynomial.const(1)
    for o in others:
        if o.is_univariate_in(s):
            h = h * o
    if h.is_constant():
        return False
    return poly_divmod(h, squarefree_part(g, s), s)[1].is_zero()


def _path_a(lhs: Expr, rhs: Expr, provisos, cfg: CheckerConfig, seed: int) -> tuple[Verdict | None, int | None]:
    """Exact comparison.  Returns (verdict or None if not applicable, degree bound)."""
    try:
        rl, rr = rational_parts(lhs), rational_parts(rhs)
        pp = _proviso_polys(provisos)
    except (NotPolynomial, CASError):
        return None, None
    if rl.atoms != rr.atoms or any(isinstance(a, Ln) for a in rl.atoms):
        return None, None
    left, right = rl.num * rr.den, rr.num * rl.den
    degree = max(left.total_degree(), right.total_degree(), 1)
    if left != right:
        w = _search_witness(lhs, rhs, provisos, cfg, seed)
        if w is not None:
            return Refuted(w, "values differ"), degree
        return Inconclusive("normal forms differ but no admissible witness was found"), degree
    for mine, theirs in ((rl.guards, rr.guards), (rr.guards, rl.guards)):
        for g in mine:
            if not _covered(g, list(theirs) + pp):
                return Inconclusive(f"one side is undefined where {g} = 0 and no proviso excludes it"), degree
    return Valid(), degree


def _path_b(lhs: Expr, rhs: Expr, provisos, cfg: CheckerConfig, seed: int, degree: int | None) -> Verdict:
    sampler = _Sampler([lhs, rhs, *(p.subject for p in provisos)], cfg, seed)
    uses_ln = _has_ln([lhs, rhs])
    for _ in range(cfg.trials):
        for _ in range(cfg.resample_limit):
            point = sampler.draw()
            vals = _values_at(lhs, rhs, provisos, point, sampler)
            if vals is not None:
                break
        else:
            return Inconclusive("sampling exhausted: no admissible point within the resample limit")
        if vals[0] != vals[1]:
            if uses_ln:
                return Inconclusive(f"disagreement at {_witness(point)} with ln uninterpreted")
            return Refuted(_witness(point), f"{vals[0]} != {vals[1]}")
    bound = None if degree is None or uses_ln else Fraction(degree, 2 * cfg.bound + 1)
    return ProbablyValid(cfg.trials, bound)


def _obligation_text(lhs: Expr, rhs: Expr, provisos) -> str:
    return f"{render(lhs)} == {render(rhs)} | " + ", ".join(str(p) for p in sorted(provisos))


def identity_report(lhs: Expr, rhs: Expr, provisos=(), cfg: CheckerConfig | None = None) -> IdentityReport:
    cfg = cfg or CheckerConfig()
    provisos = frozenset(provisos)
    if lhs == rhs:
        return IdentityReport(Valid())
    seed = derive_seed(_obligation_text(lhs, rhs, provisos), cfg.seed)
    if _has_ln([lhs, rhs, *(p.subject for p in provisos)]):
        a, degree = None, None
    else:
        a, degree = _path_a(lhs, rhs, provisos, cfg, seed)
    b = _path_b(lhs, rhs, provisos, cfg, seed ^ 1, degree)
    if a is None:
        return IdentityReport(b, None, b)
    if a.name == "Refuted":
        return IdentityReport(a, a, b)
    if a.name == "Valid":
        if b.name == "Refuted":
            return IdentityReport(Inconclusive("exact and sampled checks disagree"), a, b)
        return IdentityReport(a, a, b)
    if b.name == "Refuted":
        return IdentityReport(b, a, b)
    return IdentityReport(a, a, b)


def check_identity(lhs: Expr, rhs: Expr, provisos=(), cfg: CheckerConfig | None = None) -> Verdict:
    return identity_report(lhs, rhs, provisos, cfg).verdict


# --- antiderivatives -------------------------------------------------------


def _derivative(F: Expr, s: Symbol) -> Expr:
    """Quotient rule on the polynomial view when F is rational, else symbolic."""
    try:
        rf = rational_parts(F, allow_atoms=False)
    except NotPolynomial:
        return differentiate(F, s)
    n, d = rf.num, rf.den
    top = n.derivative(s) * d - n * d.derivative(s)
    if d.is_constant():
        return top.scale(1 / (d.constant_value() ** 2)).to_expr()
    return mul(top.to_expr(), power((d * d).to_expr(), -1))


def _zero_sets(subject: Expr, avoid: Symbol) -> list[dict[Symbol, Expr]] | None:
    """Substitutions covering the zero set of a condition subject, if solvable."""
    for v in sorted(free_symbols(subject)):
        if v == avoid:
            continue
        try:
            rf = rational_parts(subject, allow_atoms=False)
            roots, completeness = find_roots(rf.num, v)
        except CASError:
            continue
        if completeness == Completeness.COMPLETE:
            return [{v: r} for r in roots]
    return None


def _default_regions(F: Piecewise, s: Symbol) -> list[dict[Symbol, Expr]] | None:
    """Points (as substitutions) where every non-default branch fails."""
    per_branch = []
    for conds, _ in F.branches:
        options = []
        for p in sorted(conds):
            zs = _zero_sets(p.subject, s)
            if zs is None:
                return None
            options.extend(zs)
        per_branch.append(options)
    regions = []
    for combo in itertools.product(*per_branch):
        merged: dict[Symbol, Expr] = {}
        for m in combo:
            for k, v in m.items():
                merged[k] = subs(v, merged)
        regions.append(merged)
    return regions


def check_antiderivative(F, f: Expr, s, cfg: CheckerConfig | None = None, provisos=()) -> Verdict:
    cfg = cfg or CheckerConfig()
    s = Symbol(s) if isinstance(s, str) else s
    provisos = frozenset(provisos)
    if isinstance(F, AnnotatedExpr):
        provisos |= F.provisos
        F = F.body
    if not isinstance(F, Piecewise):
        return check_identity(_derivative(F, s), f, provisos, cfg)
    # a piecewise f with the same conditions is compared branch by branch
    paired = isinstance(f, Piecewise) and [c for c, _ in f.branches] == [c for c, _ in F.branches]
    targets = [b for _, b in f.branches] if paired else [f] * len(F.branches)
    f_default = f.default if paired else f
    verdicts = []
    for (conds, body), target in zip(F.branches, targets):
        verdicts.append(check_identity(_derivative(body, s), target, provisos | frozenset(conds), cfg))
    regions = _default_regions(F, s)
    if regions is None:
        verdicts.append(Inconclusive("cannot describe the region of the default branch"))
    else:
        dF = _derivative(F.default, s)
        for m in regions:
            try:
                verdicts.append(check_identity(subs(dF, m), subs(f_default, m), provisos, cfg))
            except CASError as err:
                verdicts.append(Inconclusive(f"{type(err).__name__}: {err}"))
    return weakest(verdicts)


# --- solutions -------------------------------------------------------------


def _minimal_polynomial(parts, x: Symbol) -> Polynomial:
    a, b, d = parts
    u = Polynomial.var(x) - Polynomial.const(a)
    return u * u - Polynomial.const(b * b * d)


def _root_check(eq: Equation, root: Expr) -> Refuted | None:
    x = eq.unknown
    f = eq.difference
    if isinstance(root, Const):
        point = {x: root.value}
        for p in eq.provisos:
            try:
                if evaluate(p.subject, point) == 0:
                    return Refuted({x.name: root.value}, f"proviso {p} fails")
            except UndefinedAtPoint:
                return Refuted({x.name: root.value}, f"proviso {p} undefined")
        try:
            value = evaluate(f, point)
        except UndefinedAtPoint:
            return Refuted({x.name: root.value}, "lhs undefined")
        if value != 0:
            return Refuted({x.name: root.value}, f"residual {value}")
        return None
    parts = surd_parts(root)
    if parts is None:
        return Refuted({x.name: render(root)}, "root is neither rational nor a quadratic surd")
    m = _minimal_polynomial(parts, x)
    rf = rational_parts(f, allow_atoms=False)
    for g in list(rf.guards) + _proviso_polys(eq.provisos):
        if poly_divmod(g, m, x)[1].is_zero():
            return Refuted({x.name: render(root)}, f"{g} vanishes at the root")
    if not poly_divmod(rf.num, m, x)[1].is_zero():
        return Refuted({x.name: render(root)}, "minimal polynomial does not divide the numerator")
    return None


def check_solutions(eq: Equation, sols: SolutionSet, cfg: CheckerConfig | None = None) -> Verdict:
    """Soundness of every returned root; completeness is not examined."""
    for r in sols.roots:
        try:
            bad = _root_check(eq, r)
        except CASError as err:
            return Inconclusive(f"{type(err).__name__}: {err}")
        if bad is not None:
            return bad
    return Valid()


def check_completeness(eq: Equation, sols: SolutionSet) -> Verdict:
    """Whether a Complete claim is consistent; mismatches are Inconclusive."""
    if sols.completeness != Completeness.COMPLETE:
        return Inconclusive("completeness not claimed")
    try:
        rf = rational_parts(eq.difference, allow_atoms=False)
        roots, completeness = find_roots(rf.num, eq.unknown)
    except CASError as err:
        return Inconclusive(f"{type(err).__name__}: {err}")
    if completeness != Completeness.COMPLETE:
        return Inconclusive("cannot enumerate every root independently")
    genuine = [r for r in roots if _root_check(eq, r) is None]
    missing = [r for r in genuine if r not in sols.roots]
    if missing:
        return Inconclusive("claimed complete but missing " + ", ".join(render(r) for r in missing))
    return Valid()


def check_roots(p: Expr, s: Symbol, roots, completeness: Completeness) -> Verdict:
    """Each root is a zero of ``p``; a Complete claim is counted for degree <= 2."""
    poly = rational_parts(p, allow_atoms=False).num
    for r in roots:
        if isinstance(r, Const):
            if poly.evaluate({s: r.value}) != 0:
                return Refuted({s.name: r.value}, "not a root")
            continue
        parts = surd_parts(r)
        if parts is None or not poly_divmod(poly, _minimal_polynomial(parts, s), s)[1].is_zero():
            return Refuted({s.name: render(r)}, "not a root")
    if len(set(roots)) != len(roots):
        return Refuted({}, "duplicate roots")
    if completeness == Completeness.COMPLETE:
        c = poly.univariate_coeffs(s)
        n = len(c) - 1
        if n <= 0:
            expected = 0
        elif n == 1:
            expected = 1
        elif n == 2:
            disc = c[1] * c[1] - 4 * c[2] * c[0]
            expected = 0 if disc < 0 else 1 if disc == 0 else 2
        else:
            return Inconclusive("completeness claimed beyond degree 2")
        if expected != len(roots):
            return Inconclusive(f"expected {expected} real roots, got {len(roots)}")
    return Valid()


def check_specialization(ob: Specialization, cfg: CheckerConfig | None = None) -> Verdict:
    """Select piecewise branches by evaluating their conditions, then compare."""
    try:
        chosen = _specialize(ob.source, ob.mapping)
    except CASError as err:
        return Inconclusive(f"{type(err).__name__}: {err}")
    return check_identity(chosen, ob.result, ob.provisos, cfg)


def _specialize(e: Expr, mapping: Mapping[Symbol, Expr]) -> Expr:
    if isinstance(e, Piecewise):
        point = {k: v.value for k, v in mapping.items() if isinstance(v, Const)}
        for conds, body in e.branches:
            subjects = [p.subject for p in conds]
            if not all(free_symbols(c) <= set(point) for c in subjects):
                return subs(e, mapping)
            if all(evaluate(c, point) != 0 for c in subjects):
                return _specialize(body, mapping)
        return _specialize(e.default, mapping)
    if isinstance(e, Sum):
        return add(*(_specialize(t, mapping) for t in e.terms))
    if isinstance(e, Product):
        return mul(*(_specialize(t, mapping) for t in e.factors))
    return subs(e, mapping)


def check(ob, cfg: CheckerConfig | None = None) -> Verdict:
    cfg = cfg or CheckerConfig()
    if isinstance(ob, Identity):
        return check_identity(ob.lhs, ob.rhs, ob.provisos, cfg)
    if isinstance(ob, Antiderivative):
        return check_antiderivative(ob.F, ob.f, ob.symbol, cfg, ob.provisos)
    if isinstance(ob, Solutions):
        verdict = check_solutions(ob.equation, ob.solutions, cfg)
        if verdict.name == "Valid":
            rejected = dict.fromkeys([*ob.rejected, *(r.candidate for r in ob.solutions.rejected)])
            for r in rejected:
                if _root_check(ob.equation, r) is None:
                    return Inconclusive(f"rejected candidate {render(r)} satisfies the equation")
        return verdict
    if isinstance(ob, RootsOf):
        return check_roots(ob.polynomial, ob.symbol, ob.roots, ob.completeness)
    if isinstance(ob, Specialization):
        return check_specialization(ob, cfg)
    if isinstance(ob, Unchecked):
        return Inconclusive(ob.reason)
    raise TypeError(f"unknown obligation {ob!r}")


# --- obligations from ledger steps -----------------------------------------

_IDENTITY_OPS = {"parse", "simplify", "cancel_rational", "simplify_naive", "expand"}
_SOLUTION_OPS = {"back_substitute", "solve", "solve_naive"}
_SUBST = re.compile(r"^\s*([A-Za-z][A-Za-z0-9_]*)\s*=\s*(.+)$")


def parse_proviso(text: str) -> Proviso:
    subject, sep, zero = text.rpartition("!=")
    if not sep or zero.strip() != "0":
        raise ValueError(f"not a proviso: {text!r}")
    return Proviso(parse(subject))


def format_solutions(roots: Iterable[Expr], completeness: Completeness = Completeness.COMPLETE) -> str:
    text = "{" + ", ".join(render(r) for r in roots) + "}"
    if completeness != Completeness.COMPLETE:
        text += f" ({completeness.value})"
    return text


def format_rejected(rejected) -> str:
    if not rejected:
        return ""
    roots = "{" + ", ".join(render(r.candidate) for r in rejected) + "}"
    return f"; rejected {roots}: " + " | ".join(r.detail for r in rejected)


def parse_rejected(text: str) -> tuple[Expr, ...]:
    _, sep, rest = text.partition("; rejected {")
    if not sep:
        return ()
    return tuple(parse(r) for r in rest[: rest.index("}")].split(",") if r.strip())


def parse_solutions(text: str) -> tuple[tuple[Expr, ...], Completeness]:
    inner = text[text.index("{") + 1 : text.index("}")]
    roots = tuple(parse(r) for r in inner.split(",") if r.strip())
    tail = text[text.index("}") + 1 :]
    completeness = Completeness.RATIONAL_ROOTS_ONLY if Completeness.RATIONAL_ROOTS_ONLY.value in tail.split(";")[0] else Completeness.COMPLETE
    return roots, completeness


def obligation_for(step) -> object:
    op = step.op
    provisos = frozenset(parse_proviso(p) for p in step.provisos)
    ins = step.in_exprs
    if op == "parse" and "=" in ins[0].replace("!=", ""):
        (l1, r1), (l2, r2) = parse_equation(ins[0]), parse_equation(step.out_expr)
        return Identity(sub(l1, r1), sub(l2, r2))
    if op in _IDENTITY_OPS:
        return Identity(parse(ins[0]), parse(step.out_expr), provisos)
    if op == "differentiate":
        return Antiderivative(parse(ins[0]), parse(step.out_expr), Symbol(ins[1].strip()), provisos)
    if op in ("integrate_power", "integrate_power_naive"):
        return Antiderivative(AnnotatedExpr(parse(step.out_expr), provisos), parse(ins[0]), Symbol(ins[1].strip()))
    if op == "substitute":
        m = _SUBST.match(ins[1])
        if m is None:
            raise ValueError(f"bad substitution {ins[1]!r}")
        mapping = {Symbol(m.group(1)): parse(m.group(2))}
        return Specialization(parse(ins[0]), mapping, parse(step.out_expr), provisos)
    if op == "find_roots":
        roots, completeness = parse_solutions(step.out_expr)
        return RootsOf(parse(ins[0]), Symbol(ins[1].strip()), roots, completeness)
    if op in _SOLUTION_OPS:
        lhs, rhs = parse_equation(ins[0])
        extra = frozenset(parse_proviso(p) for p in ins[2:] if "!=" in p)
        eq = Equation(lhs, rhs, Symbol(ins[1].strip()), extra)
        roots, completeness = parse_solutions(step.out_expr)
        return Solutions(eq, SolutionSet(roots, completeness), parse_rejected(step.out_expr))
    return Unchecked(f"no checker for operation {op!r}")


def _json_value(v) -> str:
    return str(v)


def verdict_json(v: Verdict) -> dict:
    out: dict = {"verdict": v.name}
    if isinstance(v, Refuted):
        out["witness"] = {k: _json_value(x) for k, x in v.witness.items()}
        out["detail"] = v.detail
    if isinstance(v, ProbablyValid):
        out["trials"] = v.trials
        out["error_bound"] = None if v.error_bound is None else str(v.error_bound)
    if isinstance(v, Inconclusive):
        out["reason"] = v.reason
    return out


@dataclass
class DischargeReport:
    steps: list[dict] = field(default_factory=list)
    dual_path: list[dict] = field(default_factory=list)
    earliest_weak: dict[int, int | None] = field(default_factory=dict)
    verdicts: dict[int, Verdict] = field(default_factory=dict)

    @property
    def refuted(self) -> list[int]:
        return [i for i, v in self.verdicts.items() if v.name == "Refuted"]

    def to_json(self) -> str:
        data = {
            "steps": self.steps,
            "dual_path": self.dual_path,
            "earliest_weak_step": {str(k): v for k, v in self.earliest_weak.items()},
        }
        return json.dumps(data, ensure_ascii=False, indent=2) + "\n"


def _check_step(step, cfg: CheckerConfig) -> tuple[Verdict, IdentityReport | None]:
    try:
        ob = obligation_for(step)
        if isinstance(ob, Identity):
            rep = identity_report(ob.lhs, ob.rhs, ob.provisos, cfg)
            return rep.verdict, rep
        return check(ob, cfg), None
    except (CASError, ValueError) as err:
        return Inconclusive(f"{type(err).__name__}: {err}"), None


def discharge(session: Session, cfg: CheckerConfig | None = None) -> DischargeReport:
    """Check every step, upgrade or refute its status, and report."""
    cfg = cfg or CheckerConfig()
    report = DischargeReport()
    sampled_paths = {}
    for step in session.steps:
        verdict, rep = _check_step(step, cfg)
        report.verdicts[step.id] = verdict
        if rep is not None:
            sampled_paths[step.id] = rep.path_b
        if verdict.name == "Valid":
            set_status(session, step.id, CheckerStatus.DISCHARGED)
        elif verdict.name == "Refuted":
            set_status(session, step.id, CheckerStatus.REFUTED)
        if rep is not None and rep.path_a is not None:
            report.dual_path.append(
                {"id": step.id, "path_a": rep.path_a.name, "path_b": rep.path_b.name, "agree": rep.agree}
            )
    effective = all_effective(session)
    for step in session.steps:
        entry = {"id": step.id, "op": step.op, **verdict_json(report.verdicts[step.id])}
        sampled = sampled_paths.get(step.id)
        if isinstance(sampled, ProbablyValid) and "trials" not in entry:
            entry["trials"] = sampled.trials
            entry["error_bound"] = None if sampled.error_bound is None else str(sampled.error_bound)
        entry["effective_trust"] = effective[step.id].label
        report.steps.append(entry)
    for t in terminal_steps(session):
        report.earliest_weak[t] = earliest_weak_step(session, t)
    return report
