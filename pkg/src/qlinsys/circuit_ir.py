"""Reversible circuit representation, decomposition and resource counting."""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass
from typing import Iterable

PER_CNOT_SECONDS = 2.85e-4
BUDGET_SECONDS = 600.0


class GateKind(str, enum.Enum):
    X = "X"
    H = "H"
    S = "S"
    S_DAG = "S_DAG"
    T = "T"
    T_DAG = "T_DAG"
    CNOT = "CNOT"
    TOFFOLI = "TOFFOLI"
    FREDKIN = "FREDKIN"


ARITY = {
    GateKind.X: 1, GateKind.H: 1, GateKind.S: 1, GateKind.S_DAG: 1,
    GateKind.T: 1, GateKind.T_DAG: 1,
    GateKind.CNOT: 2, GateKind.TOFFOLI: 3, GateKind.FREDKIN: 3,
}

INVERSE_KIND = {
    GateKind.S: GateKind.S_DAG, GateKind.S_DAG: GateKind.S,
    GateKind.T: GateKind.T_DAG, GateKind.T_DAG: GateKind.T,
}

PERMUTATION_KINDS = frozenset({GateKind.X, GateKind.CNOT, GateKind.TOFFOLI, GateKind.FREDKIN})


class CircuitParseError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


@dataclass(frozen=True)
class Gate:
    """A gate; for CNOT/TOFFOLI/FREDKIN the controls come first."""

    kind: GateKind
    qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != ARITY[self.kind]:
            raise ValueError(f"{self.kind.value} takes {ARITY[self.kind]} qubits, got {len(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind.value} qubits must be distinct: {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError("qubit indices must be non-negative")

    def inverse(self) -> "Gate":
        return Gate(INVERSE_KIND.get(self.kind, self.kind), self.qubits)

    def __str__(self) -> str:
        return " ".join([self.kind.value, *map(str, self.qubits)])


@dataclass(frozen=True)
class Register:
    name: str
    start: int
    size: int

    @property
    def qubits(self) -> range:
        return range(self.start, self.start + self.size)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.size:
            raise IndexError(f"{self.name}[{i}]")
        return self.start + i


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()
    registers: tuple[Register, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "registers", tuple(self.registers))
        for g in self.gates:
            if max(g.qubits) >= self.width:
                raise ValueError(f"gate {g} exceeds width {self.width}")
        used: set[int] = set()
        for r in self.registers:
            span = set(r.qubits)
            if r.start < 0 or r.start + r.size > self.width:
                raise ValueError(f"register {r.name} exceeds width")
            if span & used:
                raise ValueError(f"register {r.name} overlaps another register")
            used |= span

    def register(self, name: str) -> Register:
        for r in self.registers:
            if r.name == name:
                return r
        raise KeyError(name)

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.width != self.width:
            raise ValueError("cannot concatenate circuits of different width")
        return Circuit(self.width, self.gates + other.gates, self.registers)


class CircuitBuilder:
    """Allocates named registers and collects gates."""

    def __init__(self) -> None:
        self.width = 0
        self.gates: list[Gate] = []
        self.registers: list[Register] = []

    def alloc(self, name: str, size: int) -> Register:
        reg = Register(name, self.width, size)
        self.width += size
        self.registers.append(reg)
        return reg

    def add(self, kind: GateKind | str, *qubits: int) -> None:
        self.gates.append(Gate(GateKind(kind), qubits))

    def extend(self, gates: Iterable[Gate]) -> None:
        self.gates.extend(gates)

    def x(self, q: int) -> None:
        self.add(GateKind.X, q)

    def h(self, q: int) -> None:
        self.add(GateKind.H, q)

    def cnot(self, c: int, t: int) -> None:
        self.add(GateKind.CNOT, c, t)

    def toffoli(self, c1: int, c2: int, t: int) -> None:
        self.add(GateKind.TOFFOLI, c1, c2, t)

    def fredkin(self, c: int, t1: int, t2: int) -> None:
        self.add(GateKind.FREDKIN, c, t1, t2)

    def build(self) -> Circuit:
        return Circuit(self.width, tuple(self.gates), tuple(self.registers))


def _toffoli_template(a: int, b: int, c: int) -> list[Gate]:
    # 6 CNOT, 7 T/T_DAG, 2 H, 1 S
    K = GateKind
    seq = [
        (K.H, c), (K.CNOT, b, c), (K.T_DAG, c), (K.CNOT, a, c), (K.T, c),
        (K.CNOT, b, c), (K.T_DAG, c), (K.CNOT, a, c), (K.T_DAG, b), (K.T, c),
        (K.CNOT, a, b), (K.H, c), (K.T_DAG, b), (K.CNOT, a, b), (K.T, a), (K.S, b),
    ]
    return [Gate(k, qs) for k, *qs in seq]


def _fredkin_template(c: int, t1: int, t2: int) -> list[Gate]:
    # 7 CNOT, 7 T/T_DAG, 2 H, 3 S/S_DAG.  The controlled-Z picked up by moving
    # one CNOT across the Hadamard is what the three S gates pay for.
    K = GateKind
    seq = [
        (K.S_DAG, t1), (K.CNOT, t2, t1), (K.S, t1), (K.S, t2),
        (K.H, t2),
        (K.T_DAG, t2), (K.T, c), (K.T, t1),
        (K.CNOT, c, t2), (K.T, t2),
        (K.CNOT, t1, t2), (K.T_DAG, t2),
        (K.CNOT, c, t1), (K.T_DAG, t1),
        (K.CNOT, c, t2), (K.T, t2),
        (K.CNOT, c, t1),
        (K.H, t2),
        (K.CNOT, t2, t1),
    ]
    return [Gate(k, qs) for k, *qs in seq]


def decompose_gate(g: Gate) -> list[Gate]:
    if g.kind is GateKind.TOFFOLI:
        return _toffoli_template(*g.qubits)
    if g.kind is GateKind.FREDKIN:
        return _fredkin_template(*g.qubits)
    return [g]


def decompose(c: Circuit) -> Circuit:
    """Replace every TOFFOLI and FREDKIN by its fixed CNOT/T/H/S template."""
    out: list[Gate] = []
    for g in c.gates:
        out.extend(decompose_gate(g))
    return Circuit(c.width, tuple(out), c.registers)


def inverse(c: Circuit) -> Circuit:
    return Circuit(c.width, tuple(g.inverse() for g in reversed(c.gates)), c.registers)


def gate_counts(gates: Iterable[Gate]) -> dict[str, int]:
    counts = {k.value: 0 for k in GateKind}
    for g in gates:
        counts[g.kind.value] += 1
    return counts


@dataclass(frozen=True)
class ResourceReport:
    counts: dict[str, int]
    cnot_equivalent: int
    single_qubit_total: int
    serial_seconds: float = 0.0
    budget_seconds: float = BUDGET_SECONDS
    within_budget: bool = True

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


# single-qubit gates contributed by each template
_TOFFOLI_1Q = 10
_FREDKIN_1Q = 12


def report_from_counts(counts: dict[str, int]) -> ResourceReport:
    full = {k.value: int(counts.get(k.value, 0)) for k in GateKind}
    cnot_eq = full["CNOT"] + 6 * full["TOFFOLI"] + 7 * full["FREDKIN"]
    single = sum(full[k.value] for k in GateKind if ARITY[k] == 1)
    single += _TOFFOLI_1Q * full["TOFFOLI"] + _FREDKIN_1Q * full["FREDKIN"]
    return estimate_runtime(ResourceReport(full, cnot_eq, single))


def count_resources(c: Circuit) -> ResourceReport:
    return report_from_counts(gate_counts(c.gates))


def estimate_runtime(
    report: ResourceReport,
    per_cnot_seconds: float = PER_CNOT_SECONDS,
    budget_seconds: float = BUDGET_SECONDS,
) -> ResourceReport:
    """Strictly serial CNOT execution; single-qubit gates take no time."""
    if not per_cnot_seconds > 0:
        raise ValueError("per_cnot_seconds must be positive")
    seconds = report.cnot_equivalent * per_cnot_seconds
    return ResourceReport(
        dict(report.counts),
        report.cnot_equivalent,
        report.single_qubit_total,
        seconds,
        float(budget_seconds),
        seconds <= budget_seconds,
    )


def serialize(c: Circuit) -> str:
    lines = [f"QC1 width={c.width}"]
    for r in c.registers:
        lines.append(f"# register {r.name} {r.start} {r.size}")
    lines += [str(g) for g in c.gates]
    return "\n".join(lines) + "\n"


def parse(text: str) -> Circuit:
    lines = text.split("\n")
    if not lines or not lines[0].startswith("QC1 width="):
        raise CircuitParseError(1, "expected header 'QC1 width=<w>'")
    w = lines[0][len("QC1 width="):].strip()
    if not w.isdigit():
        raise CircuitParseError(1, f"bad width {w!r}")
    width = int(w)
    gates: list[Gate] = []
    regs: list[Register] = []
    for no, raw in enumerate(lines[1:], start=2):
        body, _, comment = raw.partition("#")
        words = comment.split()
        if not body.strip() and len(words) == 4 and words[0] == "register":
            if not (words[2].isdigit() and words[3].isdigit()):
                raise CircuitParseError(no, "malformed register line")
            regs.append(Register(words[1], int(words[2]), int(words[3])))
            continue
        tok = body.split()
        if not tok:
            continue
        try:
            kind = GateKind(tok[0])
        except ValueError:
            raise CircuitParseError(no, f"unknown mnemonic {tok[0]!r}") from None
        if len(tok) - 1 != ARITY[kind]:
            raise CircuitParseError(no, f"{kind.value} takes {ARITY[kind]} qubits, got {len(tok) - 1}")
        if not all(t.isdigit() for t in tok[1:]):
            raise CircuitParseError(no, "qubit indices must be decimal integers")
        qs = tuple(int(t) for t in tok[1:])
        if any(q >= width for q in qs):
            raise CircuitParseError(no, f"qubit index out of range for width {width}")
        try:
            gates.append(Gate(kind, qs))
        except ValueError as e:
            raise CircuitParseError(no, str(e)) from None
    try:
        return Circuit(width, tuple(gates), tuple(regs))
    except ValueError as e:
        raise CircuitParseError(1, str(e)) from None
