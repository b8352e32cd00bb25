"""Command loop: REPL on a terminal, or a batch script with ``--batch``.

Commands (one per line, ``#`` starts a comment unless it is a step reference
such as ``#3``)::

    simplify EXPR
    solve LHS = RHS for SYM
    diff EXPR wrt SYM
    integrate EXPR wrt SYM
    subst SYM=VALUE in #ID
    check
    export PATH
    mode robust|naive
    trust #ID
    quit

Exit codes: 0 success, 1 usage or syntax error, 2 algebra error,
3 a refutation found by ``check``.  A batch run returns the largest code seen.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .calculus import differentiate, integrate_power, integrate_power_naive
from .checker import CheckerConfig, discharge, format_rejected, format_solutions
from .errors import CASError, ParseError
from .expr import AnnotatedExpr, Symbol, subs, substitute
from .ledger import (
    AlgorithmTrustTable,
    Session,
    earliest_weak_step,
    export_certificate,
    propagate_trust,
    record_step,
)
from .parser import parse, parse_equation, render
from .simplify import simplify_naive, simplify_traced
from .solve import DOMAIN_VIOLATION, Completeness, Equation, Mode, solve

OK, USAGE, ALGEBRA, REFUTED = 0, 1, 2, 3

_COMMENT = re.compile(r"#(?!\d).*$")
_REF = re.compile(r"#(\d+)")
_IDENT = r"([A-Za-z][A-Za-z0-9_]*)"
_COMMANDS = [
    ("simplify", re.compile(r"^simplify\s+(?P<expr>.+)$")),
    ("solve", re.compile(rf"^solve\s+(?P<eq>.+?)\s+for\s+{_IDENT}$")),
    ("diff", re.compile(rf"^diff\s+(?P<expr>.+?)\s+wrt\s+{_IDENT}$")),
    ("integrate", re.compile(rf"^integrate\s+(?P<expr>.+?)\s+wrt\s+{_IDENT}$")),
    ("subst", re.compile(rf"^subst\s+{_IDENT}\s*=\s*(?P<value>.+?)\s+in\s+#(\d+)$")),
    ("check", re.compile(r"^check$")),
    ("export", re.compile(r"^export\s+(?P<path>\S+)$")),
    ("mode", re.compile(r"^mode\s+(robust|naive)$")),
    ("trust", re.compile(r"^trust\s+#(\d+)$")),
    ("quit", re.compile(r"^(quit|exit)$")),
]


class UsageError(Exception):
    pass


@dataclass
class State:
    session: Session = field(default_factory=Session)
    naive: bool = False
    cfg: CheckerConfig = field(default_factory=CheckerConfig)
    values: dict[int, AnnotatedExpr] = field(default_factory=dict)
    done: bool = False


def _shift(err: ParseError, line: str, fragment: str) -> ParseError:
    offset = len(line[: line.find(fragment)].encode("utf-8")) if fragment in line else 0
    return ParseError(str(err).split(" at ")[0], (err.span[0] + offset, err.span[1] + offset), err.expected)


def _resolve(state: State, text: str) -> tuple[str, list[int], frozenset]:
    """Replace ``#ID`` references by the parenthesized step outputs."""
    ids: list[int] = []
    provisos: set = set()

    def repl(m: re.Match) -> str:
        sid = int(m.group(1))
        state.session.step(sid)
        if sid not in state.values:
            raise UsageError(f"#{sid} has no expression value")
        ids.append(sid)
        provisos.update(state.values[sid].provisos)
        return f"({render(state.values[sid].body)})"

    return _REF.sub(repl, text), ids, frozenset(provisos)


def _trust(state: State, sid: int) -> str:
    return propagate_trust(state.session, sid).label


def _line(state: State, sid: int, text: str) -> str:
    tag = "  [naive]" if state.naive else ""
    return f"#{sid}: {text}{tag}  [trust: {_trust(state, sid)}]"


def _reason(detail: str, kind: str) -> str:
    if kind == DOMAIN_VIOLATION and detail.startswith("denominator"):
        return "denominator vanishes"
    if kind == DOMAIN_VIOLATION:
        return "not a root"
    return "proviso fails"


def _record_value(state: State, op: str, inputs, value: AnnotatedExpr, in_exprs) -> int:
    sid = record_step(state.session, op, inputs, value, in_exprs=in_exprs)
    state.values[sid] = value
    return sid


def _cmd_simplify(state: State, m: re.Match, line: str) -> str:
    text, ids, inherited = _resolve(state, m.group("expr"))
    e = _parse(text, line, m.group("expr"))
    if state.naive:
        value = AnnotatedExpr(simplify_naive(e))
        op = "simplify_naive"
    else:
        trace = simplify_traced(e)
        value = AnnotatedExpr(trace.result.body, trace.result.provisos | inherited)
        op = trace.op
    sid = _record_value(state, op, ids, value, [render(e)])
    return _line(state, sid, str(value))


def _cmd_solve(state: State, m: re.Match, line: str) -> str:
    text, ids, inherited = _resolve(state, m.group("eq"))
    try:
        lhs, rhs = parse_equation(text)
    except ParseError as err:
        raise _shift(err, line, m.group("eq")) from None
    x = Symbol(m.group(2))
    eq = Equation(lhs, rhs, x, frozenset() if state.naive else inherited)
    sols = solve(eq, Mode.NAIVE if state.naive else Mode.ROBUST)
    out = format_solutions(sols.roots, sols.completeness) + format_rejected(sols.rejected)
    in_exprs = [f"{render(lhs)} = {render(rhs)}", x.name, *(str(p) for p in sorted(eq.provisos))]
    sid = record_step(state.session, "solve_naive" if state.naive else "solve", ids, out, in_exprs=in_exprs)
    if sols.roots:
        shown = f"{x} in " + format_solutions(sols.roots)
    else:
        shown = "no solutions"
    if sols.rejected:
        shown += "; rejected " + ", ".join(
            f"{x} = {render(r.candidate)} ({_reason(r.detail, r.reason)})" for r in sols.rejected
        )
    if sols.completeness != Completeness.COMPLETE:
        shown += " (rational roots only)"
    return _line(state, sid, shown)


def _cmd_diff(state: State, m: re.Match, line: str) -> str:
    text, ids, inherited = _resolve(state, m.group("expr"))
    e = _parse(text, line, m.group("expr"))
    value = AnnotatedExpr(differentiate(e, m.group(2)), inherited)
    sid = _record_value(state, "differentiate", ids, value, [render(e), m.group(2)])
    return _line(state, sid, str(value))


def _cmd_integrate(state: State, m: re.Match, line: str) -> str:
    text, ids, inherited = _resolve(state, m.group("expr"))
    e = _parse(text, line, m.group("expr"))
    if state.naive:
        F, op = integrate_power_naive(e, m.group(2)), "integrate_power_naive"
    else:
        F, op = integrate_power(e, m.group(2)), "integrate_power"
    value = AnnotatedExpr(F.body, F.provisos | inherited)
    sid = _record_value(state, op, ids, value, [render(e), m.group(2)])
    return _line(state, sid, str(value))


def _cmd_subst(state: State, m: re.Match, line: str) -> str:
    name, value_text, ref = m.group(1), m.group("value"), int(m.group(3))
    state.session.step(ref)
    if ref not in state.values:
        raise UsageError(f"#{ref} has no expression value")
    source = state.values[ref]
    v = _parse(value_text, line, value_text)
    if state.naive:
        value = AnnotatedExpr(subs(source.body, {Symbol(name): v}))
        op = "substitute_naive"
    else:
        value = substitute(source, name, v)
        op = "substitute"
    sid = _record_value(state, op, [ref], value, [render(source.body), f"{name} = {render(v)}"])
    return _line(state, sid, str(value))


def _cmd_check(state: State) -> tuple[str, int]:
    report = discharge(state.session, state.cfg)
    lines = []
    for entry in report.steps:
        text = f"#{entry['id']} {entry['op']}: {entry['verdict']}"
        if "witness" in entry:
            point = ", ".join(f"{k} = {v}" for k, v in entry["witness"].items())
            text += f" at {point} ({entry['detail']})"
        elif "reason" in entry:
            text += f" ({entry['reason']})"
        lines.append(f"{text}  [trust: {entry['effective_trust']}]")
    refuted = report.refuted
    lines.append(f"checked {len(report.steps)} steps; {len(refuted)} refuted")
    return "\n".join(lines), REFUTED if refuted else OK


def _cmd_trust(state: State, sid: int) -> str:
    step = state.session.step(sid)
    weak = earliest_weak_step(state.session, sid)
    where = "none" if weak is None else f"#{weak}"
    return (
        f"#{sid}: trust {_trust(state, sid)} (intrinsic {step.intrinsic_trust.label}, "
        f"{step.checker_status.value}); earliest weak step: {where}"
    )


def _parse(text: str, line: str, fragment: str):
    try:
        return parse(text)
    except ParseError as err:
        raise _shift(err, line, fragment) from None


def run_line(state: State, line: str) -> tuple[str, int]:
    """Execute one command line; returns (output, exit code)."""
    line = _COMMENT.sub("", line).strip()
    if not line:
        return "", OK
    for name, pattern in _COMMANDS:
        m = pattern.match(line)
        if m is None:
            continue
        try:
            if name == "simplify":
                return _cmd_simplify(state, m, line), OK
            if name == "solve":
                return _cmd_solve(state, m, line), OK
            if name == "diff":
                return _cmd_diff(state, m, line), OK
            if name == "integrate":
                return _cmd_integrate(state, m, line), OK
            if name == "subst":
                return _cmd_subst(state, m, line), OK
            if name == "check":
                return _cmd_check(state)
            if name == "export":
                Path(m.group("path")).write_text(export_certificate(state.session), encoding="utf-8")
                return f"wrote certificate with {len(state.session)} steps to {m.group('path')}", OK
            if name == "mode":
                state.naive = m.group(1) == "naive"
                return f"mode {m.group(1)}", OK
            if name == "trust":
                return _cmd_trust(state, int(m.group(1))), OK
            state.done = True
            return "", OK
        except ParseError as err:
            start = len(line.encode("utf-8")[: err.span[0]].decode("utf-8", "ignore"))
            width = max(1, err.span[1] - err.span[0])
            return f"error: ParseError: {err}\n  {line}\n  {' ' * start}{'^' * width}", USAGE
        except UsageError as err:
            return f"error: {err}", USAGE
        except (CASError, ValueError) as err:
            return f"error: {type(err).__name__}: {err}", ALGEBRA
    return f"error: unknown command {line.split()[0]!r}", USAGE


def run_lines(state: State, lines, out, echo: bool) -> int:
    worst = OK
    for raw in lines:
        line = raw.rstrip("\n")
        text, code = run_line(state, line)
        worst = max(worst, code)
        if text:
            if echo:
                out.write(f"> {line.strip()}\n")
            out.write(text + "\n")
        if state.done:
            break
    return worst


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robustcas", description="Proviso-tracking computer algebra with a checked ledger.")
    p.add_argument("--batch", metavar="FILE", help="run the commands in FILE and exit")
    p.add_argument("--naive", action="store_true", help="start in naive mode (provisos dropped)")
    p.add_argument("--seed", type=int, default=None, help="override the checker's derived seeds")
    p.add_argument("--trust-table", metavar="FILE", help="JSON trust table to use instead of the default")
    p.add_argument("--export", metavar="FILE", help="write the certificate to FILE on exit")
    p.add_argument("--trials", type=int, default=20, help="randomized trials per identity (default 20)")
    p.add_argument("--bound", type=int, default=10**6, help="sample integers from [-B, B] (default 10^6)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = CheckerConfig(trials=args.trials, bound=args.bound, seed=args.seed)
        table = AlgorithmTrustTable.load(args.trust_table) if args.trust_table else AlgorithmTrustTable.default()
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE
    state = State(Session(table), args.naive, cfg)
    if args.batch:
        try:
            lines = Path(args.batch).read_text(encoding="utf-8").splitlines()
        except OSError as err:
            print(f"error: {err}", file=sys.stderr)
            return USAGE
        code = run_lines(state, lines, sys.stdout, echo=True)
    else:
        code = _repl(state)
    if args.export:
        Path(args.export).write_text(export_certificate(state.session), encoding="utf-8")
    return code


def _repl(state: State) -> int:
    interactive = sys.stdin.isatty()
    worst = OK
    while not state.done:
        try:
            line = input("> ") if interactive else sys.stdin.readline()
        except EOFError:
            break
        if not interactive and not line:
            break
        text, code = run_line(state, line)
        worst = max(worst, code)
        if text:
            print(text)
    return OK if interactive else worst


if __name__ == "__main__":
    sys.exit(main())
