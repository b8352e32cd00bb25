"""Exception hierarchy shared by every kernel module."""

from __future__ import annotations


class CASError(Exception):
    """Base class for all kernel errors."""


class UndefinedAtPoint(CASError):
    pass


class NonRationalValue(CASError):
    pass


class ZeroProviso(CASError):
    """Raised when a NonZero side condition would be created for the constant 0."""


class SpecializationViolation(CASError):
    """A substitution drove a proviso to NonZero(0)."""

    def __init__(self, message: str, proviso=None):
        super().__init__(message)
        self.proviso = proviso


class ParseError(CASError):
    """Syntax error in the infix grammar; carries the offending byte span."""

    def __init__(self, message: str, span: tuple[int, int], expected: str = ""):
        self.span = span
        self.expected = expected
        detail = f"{message} at {span[0]}..{span[1]}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class NotPolynomial(CASError):
    def __init__(self, message: str, subterm=None):
        super().__init__(message)
        self.subterm = subterm


class DivisionByZeroPolynomial(CASError):
    pass


class NonConstantLeadingCoefficient(CASError):
    pass


class MultivariateUnsupported(CASError):
    pass


class UnsupportedDegree(CASError):
    pass


class NotRationalFunction(CASError):
    pass


class ZeroPolynomial(CASError):
    pass


class UnsupportedNode(CASError):
    pass


class UnsupportedIntegrand(CASError):
    pass


class UnknownInputStep(CASError):
    pass


class SamplingExhausted(CASError):
    pass
