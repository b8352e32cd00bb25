"""Append-only step ledger with ordinal trust propagation and certificates."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import Iterable, Mapping

from .errors import UnknownInputStep
from .expr import AnnotatedExpr, Proviso

CERTIFICATE_VERSION = "1"


class TrustLevel(IntEnum):
    UNCHECKED = 0
    CURATED_LOW = 1
    CURATED_MEDIUM = 2
    CURATED_HIGH = 3
    VERIFIED = 4

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")

    @classmethod
    def from_label(cls, label: str) -> TrustLevel:
        try:
            return cls[label.upper().replace("-", "_")]
        except KeyError:
            raise ValueError(f"unknown trust level {label!r}") from None

    def __str__(self) -> str:
        return self.label


def meet(*levels: TrustLevel) -> TrustLevel:
    """Greatest lower bound; the empty meet is the top element."""
    return min(levels, default=TrustLevel.VERIFIED)


class CheckerStatus(str, Enum):
    UNEXAMINED = "unexamined"
    DISCHARGED = "discharged"
    REFUTED = "refuted"


DEFAULT_TRUST = {
    "cancel_rational": TrustLevel.CURATED_MEDIUM,
    "simplify": TrustLevel.CURATED_HIGH,
    "integrate_power": TrustLevel.CURATED_MEDIUM,
    "find_roots": TrustLevel.CURATED_HIGH,
    "simplify_naive": TrustLevel.UNCHECKED,
    "solve_naive": TrustLevel.UNCHECKED,
    "integrate_power_naive": TrustLevel.UNCHECKED,
    "parse": TrustLevel.CURATED_HIGH,
    "expand": TrustLevel.CURATED_HIGH,
    "differentiate": TrustLevel.CURATED_HIGH,
    "substitute": TrustLevel.CURATED_HIGH,
    "back_substitute": TrustLevel.CURATED_HIGH,
    "solve": TrustLevel.CURATED_MEDIUM,
}


@dataclass(frozen=True)
class AlgorithmTrustTable:
    levels: Mapping[str, TrustLevel]
    version: str = "1"

    def __post_init__(self):
        for op, level in self.levels.items():
            if TrustLevel(level) == TrustLevel.VERIFIED:
                raise ValueError(f"{op}: verified trust can only be earned through the checker")

    def lookup(self, op: str) -> TrustLevel:
        return TrustLevel(self.levels.get(op, TrustLevel.UNCHECKED))

    @classmethod
    def default(cls) -> AlgorithmTrustTable:
        return cls(dict(DEFAULT_TRUST), "1")

    @classmethod
    def from_json(cls, text: str) -> AlgorithmTrustTable:
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("trust table must be a JSON object")
        version = str(data.pop("version", "1"))
        return cls({op: TrustLevel.from_label(v) for op, v in data.items()}, version)

    @classmethod
    def load(cls, path: str | Path) -> AlgorithmTrustTable:
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass
class Step:
    id: int
    op: str
    inputs: tuple[int, ...]
    in_exprs: tuple[str, ...]
    out_expr: str
    provisos: tuple[str, ...]
    intrinsic_trust: TrustLevel
    checker_status: CheckerStatus = CheckerStatus.UNEXAMINED

    @property
    def own_level(self) -> TrustLevel:
        if self.checker_status == CheckerStatus.DISCHARGED:
            return TrustLevel.VERIFIED
        if self.checker_status == CheckerStatus.REFUTED:
            return TrustLevel.UNCHECKED
        return self.intrinsic_trust

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "op": self.op,
            "inputs": list(self.inputs),
            "in_exprs": list(self.in_exprs),
            "out_expr": self.out_expr,
            "provisos": list(self.provisos),
            "intrinsic_trust": self.intrinsic_trust.label,
            "checker_status": self.checker_status.value,
        }


@dataclass
class Session:
    table: AlgorithmTrustTable = field(default_factory=AlgorithmTrustTable.default)
    steps: list[Step] = field(default_factory=list)
    created: float = field(default_factory=time.time)

    def step(self, sid: int) -> Step:
        if not isinstance(sid, int) or not 1 <= sid <= len(self.steps):
            raise UnknownInputStep(f"no step #{sid}")
        return self.steps[sid - 1]

    def __len__(self) -> int:
        return len(self.steps)


def _render(x) -> str:
    return x if isinstance(x, str) else str(x)


def record_step(
    session: Session,
    op: str,
    inputs: Iterable[int],
    output,
    provisos: Iterable = (),
    in_exprs: Iterable | None = None,
) -> int:
    """Append a step and return its id.

    ``output`` may be an expression, an annotated expression (its provisos are
    merged into ``provisos``) or an already rendered string.  When
    ``in_exprs`` is omitted the outputs of the input steps are used.
    """
    inputs = tuple(inputs)
    for i in inputs:
        session.step(i)
    provisos = set(provisos)
    if isinstance(output, AnnotatedExpr):
        provisos |= output.provisos
        output = output.body
    rendered = sorted({_render(p) for p in provisos if not isinstance(p, Proviso)})
    rendered = [str(p) for p in sorted(p for p in provisos if isinstance(p, Proviso))] + rendered
    if in_exprs is None:
        in_exprs = [session.step(i).out_expr for i in inputs]
    sid = len(session.steps) + 1
    session.steps.append(
        Step(
            sid,
            op,
            inputs,
            tuple(_render(x) for x in in_exprs),
            _render(output),
            tuple(rendered),
            session.table.lookup(op),
        )
    )
    return sid


def set_status(session: Session, sid: int, status: CheckerStatus) -> None:
    """The only mutation allowed on a recorded step."""
    session.step(sid).checker_status = CheckerStatus(status)


def _effective(session: Session, sid: int, memo: dict[int, TrustLevel]) -> TrustLevel:
    # ids are topologically ordered, so resolve ancestors in ascending order
    pending = [sid]
    order = []
    seen = set()
    while pending:
        i = pending.pop()
        if i in seen or i in memo:
            continue
        seen.add(i)
        order.append(i)
        pending.extend(session.step(i).inputs)
    for i in sorted(order):
        st = session.step(i)
        memo[i] = meet(st.own_level, *(memo[j] for j in st.inputs))
    return memo[sid]


def propagate_trust(session: Session, sid: int) -> TrustLevel:
    session.step(sid)
    return _effective(session, sid, {})


def all_effective(session: Session) -> dict[int, TrustLevel]:
    memo: dict[int, TrustLevel] = {}
    for st in session.steps:
        _effective(session, st.id, memo)
    return memo


def ancestors(session: Session, sid: int) -> set[int]:
    """``sid`` and every step it transitively depends on."""
    out = set()
    pending = [sid]
    while pending:
        i = pending.pop()
        if i not in out:
            out.add(i)
            pending.extend(session.step(i).inputs)
    return out


def earliest_weak_step(session: Session, sid: int) -> int | None:
    """Smallest-id ancestor at which the propagated minimum is first reached."""
    level = propagate_trust(session, sid)
    if level == TrustLevel.VERIFIED:
        return None
    return min(i for i in ancestors(session, sid) if session.step(i).own_level == level)


def terminal_steps(session: Session) -> list[int]:
    used = {i for st in session.steps for i in st.inputs}
    return [st.id for st in session.steps if st.id not in used]


def certificate_dict(session: Session) -> dict:
    return {
        "version": CERTIFICATE_VERSION,
        "trust_table_version": session.table.version,
        "steps": [st.to_json() for st in session.steps],
    }


def export_certificate(session: Session) -> str:
    """Deterministic UTF-8 JSON text (the creation time is not included)."""
    return json.dumps(certificate_dict(session), ensure_ascii=False, indent=2) + "\n"


def import_certificate(text: str, table: AlgorithmTrustTable | None = None) -> Session:
    data = json.loads(text)
    if data.get("version") != CERTIFICATE_VERSION:
        raise ValueError(f"unsupported certificate version {data.get('version')!r}")
    table = table or AlgorithmTrustTable.default()
    if table.version != data["trust_table_version"]:
        table = AlgorithmTrustTable(table.levels, data["trust_table_version"])
    session = Session(table, [], created=0.0)
    for i, raw in enumerate(data["steps"], start=1):
        if raw["id"] != i:
            raise ValueError("certificate step ids must be contiguous from 1")
        for j in raw["inputs"]:
            if not 1 <= j < i:
                raise UnknownInputStep(f"step #{i} references #{j}")
        session.steps.append(
            Step(
                i,
                raw["op"],
                tuple(raw["inputs"]),
                tuple(raw["in_exprs"]),
                raw["out_expr"],
                tuple(raw["provisos"]),
                TrustLevel.from_label(raw["intrinsic_trust"]),
                CheckerStatus(raw["checker_status"]),
            )
        )
    return session
