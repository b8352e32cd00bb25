"""Infix text <-> canonical expression.

Grammar::

    expr      := term (('+'|'-') term)* ;
    term      := unary (('*'|'/') unary)* ;
    unary     := '-' unary | power ;
    power     := atom ('^' unary)? ;
    atom      := INT | IDENT | 'ln' '(' expr ')' | '(' expr ')'
               | 'piecewise' '{' branch (';' branch)* '}' ;
    branch    := expr ('if' condition ('and' condition)*)? ;
    condition := expr '!=' '0' ;

Every branch but the last needs conditions; the last one is the default.
``a/b`` is read as ``a * b^-1`` and ``a - b`` as ``a + (-1)*b``.
Implicit multiplication (``2x``) is a syntax error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError
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
    is_integer_const,
    mul,
    piecewise,
    power,
)

RESERVED = frozenset({"ln", "piecewise", "if", "and"})

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<int>\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<op>!=|[-+*/^(){};])"
)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "op", "end"
    text: str
    start: int
    end: int


def _byte_span(text: str, start: int, end: int) -> tuple[int, int]:
    return len(text[:start].encode("utf-8")), len(text[:end].encode("utf-8"))


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {text[pos]!r}", _byte_span(text, pos, pos + 1), "a token"
            )
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), m.start(), m.end()))
        pos = m.end()
    tokens.append(Token("end", "", len(text), len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, message: str, expected: str) -> ParseError:
        t = self.tok
        return ParseError(message, _byte_span(self.text, t.start, max(t.end, t.start)), expected)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"unexpected {found!r}", repr(text))
        return self.advance()

    def parse_all(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            t = self.tok
            hint = " (implicit multiplication is not allowed)" if t.kind in ("int", "ident") or t.text == "(" else ""
            raise self.error(f"unexpected {t.text!r}{hint}", "an operator or end of input")
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.at("+") or self.at("-"):
            op = self.advance().text
            t = self.term()
            terms.append(t if op == "+" else mul(-1, t))
        return add(*terms)

    def term(self) -> Expr:
        factors = [self.unary()]
        while self.at("*") or self.at("/"):
            op = self.advance().text
            f = self.unary()
            factors.append(f if op == "*" else power(f, -1))
        return mul(*factors)

    def unary(self) -> Expr:
        if self.at("-"):
            self.advance()
            return mul(-1, self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at("^"):
            self.advance()
            return power(base, self.unary())
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Const(int(t.text))
        if t.kind == "ident":
            if t.text == "ln":
                self.advance()
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Ln(arg)
            if t.text == "piecewise":
                self.advance()
                return self.piecewise()
            if t.text in RESERVED:
                raise self.error(f"reserved word {t.text!r}", "an expression")
            self.advance()
            return Symbol(t.text)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        found = t.text or "end of input"
        raise self.error(f"unexpected {found!r}", "a number, identifier, 'ln(' or '('")

    def piecewise(self) -> Expr:
        self.expect("{")
        branches = []
        while True:
            body = self.expr()
            conds = []
            if self.at("if"):
                self.advance()
                conds.append(self.condition())
                while self.at("and"):
                    self.advance()
                    conds.append(self.condition())
            if self.at(";"):
                if not conds:
                    raise self.error("only the last piecewise branch may omit 'if'", "'if'")
                self.advance()
                branches.append((conds, body))
                continue
            if conds:
                raise self.error("the last piecewise branch is the default and takes no condition", "';'")
            self.expect("}")
            return piecewise(branches, body)

    def condition(self) -> Expr:
        subject = self.expr()
        self.expect("!=")
        t = self.tok
        if not (t.kind == "int" and t.text == "0"):
            raise self.error("conditions have the form EXPR != 0", "'0'")
        self.advance()
        return subject


def parse(text: str) -> Expr:
    """Parse infix text into a canonical expression."""
    return _Parser(text).parse_all()


def parse_equation(text: str) -> tuple[Expr, Expr]:
    """Parse ``lhs = rhs`` (a single '=' that is not part of '!=')."""
    parts = re.split(r"(?<![!=])=(?!=)", text)
    if len(parts) != 2:
        raise ParseError("an equation needs exactly one '='", (0, len(text.encode("utf-8"))), "'='")
    offset = len(parts[0]) + 1
    lhs = parse(parts[0])
    try:
        rhs = parse(parts[1])
    except ParseError as err:
        shift = len(text[:offset].encode("utf-8"))
        raise ParseError("in right-hand side: " + str(err).split(" at ")[0],
                         (err.span[0] + shift, err.span[1] + shift), err.expected) from None
    return lhs, rhs


# --- rendering -------------------------------------------------------------

SUM_LEVEL, PROD_LEVEL, UNARY_LEVEL, POW_LEVEL, ATOM_LEVEL = range(1, 6)


def _degree(e: Expr) -> Fraction:
    if isinstance(e, Const):
        return Fraction(0)
    if isinstance(e, Power):
        if isinstance(e.exp, Const):
            return _degree(e.base) * e.exp.value
        return _degree(e.base)
    if isinstance(e, Product):
        return sum((_degree(f) for f in e.factors), Fraction(0))
    if isinstance(e, Sum):
        return max(_degree(t) for t in e.terms)
    return Fraction(1)


def _is_negative(e: Expr) -> bool:
    if isinstance(e, Const):
        return e.value < 0
    return isinstance(e, Product) and isinstance(e.factors[0], Const) and e.factors[0].value < 0


def _as_denominator(e: Expr) -> bool:
    # 0^-k cannot be written 1/0^k: that would re-parse as 0^-1
    return (
        isinstance(e, Power)
        and is_integer_const(e.exp)
        and e.exp.value < 0
        and not isinstance(e.base, Const)
    )


class _Renderer:
    def __init__(self, compact: bool):
        self.compact = compact

    def at(self, e: Expr, level: int) -> str:
        s, own = self.node(e)
        return f"({s})" if own < level else s

    def node(self, e: Expr) -> tuple[str, int]:
        if isinstance(e, Const):
            v = e.value
            if v.denominator == 1:
                return str(v.numerator), ATOM_LEVEL if v >= 0 else UNARY_LEVEL
            if v < 0:
                return f"-{-v.numerator}/{v.denominator}", UNARY_LEVEL
            return f"{v.numerator}/{v.denominator}", PROD_LEVEL
        if isinstance(e, Symbol):
            return e.name, ATOM_LEVEL
        if isinstance(e, Ln):
            return f"ln({self.at(e.arg, 0)})", ATOM_LEVEL
        if isinstance(e, Piecewise):
            return self.piecewise(e), ATOM_LEVEL
        if isinstance(e, Power):
            if _as_denominator(e):
                return "1/" + self.denominator([self.raised(e.base, -e.exp.value)]), PROD_LEVEL
            return self.raised(e.base, e.exp)
        if isinstance(e, Product):
            return self.product(e)
        if isinstance(e, Sum):
            return self.sum(e), SUM_LEVEL
        raise TypeError(f"not an expression node: {e!r}")

    def raised(self, base: Expr, exp) -> tuple[str, int]:
        if not isinstance(exp, Expr):
            exp = Const(exp)
        if exp == Const(1):
            return self.at(base, ATOM_LEVEL), ATOM_LEVEL
        return f"{self.at(base, ATOM_LEVEL)}^{self.at(exp, ATOM_LEVEL)}", POW_LEVEL

    def denominator(self, parts: list[tuple[str, int]]) -> str:
        if len(parts) == 1:
            s, level = parts[0]
            return s if level >= POW_LEVEL else f"({s})"
        return "(" + "*".join(s if level >= POW_LEVEL else f"({s})" for s, level in parts) + ")"

    def product(self, e: Product) -> tuple[str, int]:
        factors = list(e.factors)
        coef = Fraction(1)
        if isinstance(factors[0], Const):
            coef = factors.pop(0).value
        num: list[str] = []
        den: list[tuple[str, int]] = []
        if abs(coef.numerator) != 1:
            num.append(str(abs(coef.numerator)))
        if coef.denominator != 1:
            den.append((str(coef.denominator), ATOM_LEVEL))
        for f in factors:
            if _as_denominator(f):
                den.append(self.raised(f.base, -f.exp.value))
            else:
                num.append(self.at(f, POW_LEVEL))
        s = "*".join(num) if num else "1"
        if den:
            s += "/" + self.denominator(den)
        if coef < 0:
            return "-" + s, UNARY_LEVEL
        return s, PROD_LEVEL

    def sum(self, e: Sum) -> str:
        consts = [t for t in e.terms if isinstance(t, Const)]
        others = sorted((t for t in e.terms if not isinstance(t, Const)), key=lambda t: (-_degree(t), t.key))
        plus, minus = ("+", "-") if self.compact else (" + ", " - ")
        out = ""
        for i, t in enumerate(others + consts):
            if _is_negative(t):
                s = self.at(mul(-1, t), PROD_LEVEL)
                out += ("-" if i == 0 else minus) + s
            else:
                s = self.at(t, PROD_LEVEL)
                out += s if i == 0 else plus + s
        return out

    def piecewise(self, e: Piecewise) -> str:
        inner = _Renderer(compact=True)
        parts = []
        for conds, body in e.branches:
            cs = " and ".join(f"{inner.at(p.subject, 0)} != 0" for p in sorted(conds))
            parts.append(f"{inner.at(body, 0)} if {cs}")
        parts.append(inner.at(e.default, 0))
        return "piecewise{ " + " ; ".join(parts) + " }"


def render(e: Expr) -> str:
    """Minimal-parentheses infix text; ``parse(render(e)) == e``."""
    return _Renderer(compact=False).at(e, 0)
