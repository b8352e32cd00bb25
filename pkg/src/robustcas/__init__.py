"""Exact computer algebra that records where its results are valid.

Every simplification reports the denominators it assumed nonzero, solving
back-substitutes candidates into the original equation, integration of
``x^n`` splits on ``n + 1 != 0``, and each step is kept in a ledger whose
trust levels an independent checker can upgrade.
"""

from .calculus import differentiate, integrate_power
from .checker import CheckerConfig, check_antiderivative, check_identity, check_solutions, discharge
from .errors import CASError, ParseError, SpecializationViolation
from .expr import AnnotatedExpr, Proviso, evaluate, nonzero, substitute
from .ledger import Session, TrustLevel, export_certificate, import_certificate, propagate_trust, record_step
from .parser import parse, render
from .polynomial import Polynomial, expand, poly_divmod, poly_gcd
from .simplify import simplify, simplify_naive
from .solve import Equation, solve

__all__ = [
    "AnnotatedExpr",
    "CASError",
    "CheckerConfig",
    "Equation",
    "ParseError",
    "Polynomial",
    "Proviso",
    "Session",
    "SpecializationViolation",
    "TrustLevel",
    "check_antiderivative",
    "check_identity",
    "check_solutions",
    "differentiate",
    "discharge",
    "evaluate",
    "expand",
    "export_certificate",
    "import_certificate",
    "integrate_power",
    "nonzero",
    "parse",
    "poly_divmod",
    "poly_gcd",
    "propagate_trust",
    "record_step",
    "render",
    "simplify",
    "simplify_naive",
    "solve",
    "substitute",
]
