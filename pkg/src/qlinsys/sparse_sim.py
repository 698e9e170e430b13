"""Sparse statevector simulator.

The state is a dict from basis index (qubit 0 = least significant bit) to
complex amplitude.  Every gate except H permutes or phases basis states, so
states produced by the circuits in this package stay small.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .circuit_ir import PERMUTATION_KINDS, Circuit, Gate, GateKind

PRUNE = 1e-12
_SQRT_HALF = 1 / math.sqrt(2)
_PHASE = {
    GateKind.S: 1j,
    GateKind.S_DAG: -1j,
    GateKind.T: cmath.exp(1j * math.pi / 4),
    GateKind.T_DAG: cmath.exp(-1j * math.pi / 4),
}


class ResourceLimitError(RuntimeError):
    """The sparse state would exceed its entry budget."""


class NotPermutationError(ValueError):
    """classical_eval was given a circuit containing H, S or T gates."""


@dataclass
class SparseState:
    width: int
    amps: dict[int, complex]

    def norm(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.amps.values())

    def copy(self) -> "SparseState":
        return SparseState(self.width, dict(self.amps))

    def __len__(self) -> int:
        return len(self.amps)

    def to_dense(self) -> np.ndarray:
        vec = np.zeros(1 << self.width, dtype=complex)
        for k, a in self.amps.items():
            vec[k] = a
        return vec

    def dump(self) -> str:
        rows = [
            {"bits": format(k, f"0{self.width}b")[::-1], "re": a.real, "im": a.imag}
            for k, a in self.amps.items()
        ]
        rows.sort(key=lambda r: r["bits"])
        return json.dumps(rows)


@dataclass(frozen=True)
class MeasurementOutcome:
    bits: int
    probability: float
    post_state: SparseState


def bits_to_int(bits: Sequence[int] | str) -> int:
    """Bit sequence with element ``i`` for qubit ``i`` (strings read the same way)."""
    out = 0
    for i, b in enumerate(bits):
        out |= int(b) << i
    return out


def init_basis(width: int, bits: int | Sequence[int] | str) -> SparseState:
    if isinstance(bits, int):
        if bits < 0 or bits >> width:
            raise ValueError(f"basis index {bits} does not fit in {width} qubits")
        key = bits
    else:
        if len(bits) != width:
            raise ValueError(f"expected {width} bits, got {len(bits)}")
        key = bits_to_int(bits)
    return SparseState(width, {key: 1 + 0j})


def _apply(amps: dict[int, complex], g: Gate) -> dict[int, complex]:
    k = g.kind
    q = g.qubits
    if k is GateKind.X:
        m = 1 << q[0]
        return {s ^ m: a for s, a in amps.items()}
    if k is GateKind.CNOT:
        c, m = 1 << q[0], 1 << q[1]
        return {(s ^ m if s & c else s): a for s, a in amps.items()}
    if k is GateKind.TOFFOLI:
        c = (1 << q[0]) | (1 << q[1])
        m = 1 << q[2]
        return {(s ^ m if s & c == c else s): a for s, a in amps.items()}
    if k is GateKind.FREDKIN:
        c = 1 << q[0]
        m1, m2 = 1 << q[1], 1 << q[2]
        out = {}
        for s, a in amps.items():
            if s & c and bool(s & m1) != bool(s & m2):
                s ^= m1 | m2
            out[s] = a
        return out
    if k in _PHASE:
        m = 1 << q[0]
        ph = _PHASE[k]
        return {s: (a * ph if s & m else a) for s, a in amps.items()}
    # Hadamard: branch and merge
    m = 1 << q[0]
    out: dict[int, complex] = {}
    for s, a in amps.items():
        a = a * _SQRT_HALF
        lo = s & ~m
        out[lo] = out.get(lo, 0) + a
        out[lo | m] = out.get(lo | m, 0) + (-a if s & m else a)
    return {s: a for s, a in out.items() if abs(a) >= PRUNE}


def apply_gate(state: SparseState, gate: Gate) -> SparseState:
    if max(gate.qubits) >= state.width:
        raise ValueError(f"gate {gate} does not fit width {state.width}")
    return SparseState(state.width, _apply(state.amps, gate))


def apply_gates(
    state: SparseState,
    gates: Iterable[Gate],
    max_entries: int | None = None,
) -> SparseState:
    amps = state.amps
    for g in gates:
        if max(g.qubits) >= state.width:
            raise ValueError(f"gate {g} does not fit width {state.width}")
        amps = _apply(amps, g)
        if max_entries is not None and len(amps) > max_entries:
            raise ResourceLimitError(f"state grew to {len(amps)} entries (budget {max_entries})")
    return SparseState(state.width, amps)


def apply_circuit(state: SparseState, circuit: Circuit, max_entries: int | None = None) -> SparseState:
    if circuit.width != state.width:
        raise ValueError(f"circuit width {circuit.width} != state width {state.width}")
    return apply_gates(state, circuit.gates, max_entries)


def _extract(key: int, qubits: Sequence[int]) -> int:
    out = 0
    for i, q in enumerate(qubits):
        out |= ((key >> q) & 1) << i
    return out


def exact_marginal(state: SparseState, register: Sequence[int]) -> dict[int, float]:
    """Probability of each outcome on ``register`` (bit ``i`` of the key = ``register[i]``)."""
    probs: dict[int, float] = {}
    for s, a in state.amps.items():
        r = _extract(s, register)
        probs[r] = probs.get(r, 0.0) + abs(a) ** 2
    return dict(sorted(probs.items()))


def measure_register(
    state: SparseState,
    register: Sequence[int],
    rng_seed: int | np.random.Generator | None = None,
) -> MeasurementOutcome:
    if any(q >= state.width or q < 0 for q in register):
        raise ValueError("register outside state width")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    marg = exact_marginal(state, register)
    outcomes = list(marg)
    p = np.array([marg[o] for o in outcomes])
    pick = outcomes[int(rng.choice(len(outcomes), p=p / p.sum()))]
    prob = marg[pick]
    scale = 1 / math.sqrt(prob)
    post = {s: a * scale for s, a in state.amps.items() if _extract(s, register) == pick}
    return MeasurementOutcome(pick, prob, SparseState(state.width, post))


def classical_eval(circuit: Circuit, bits: int) -> int:
    """Run a circuit built only from X/CNOT/TOFFOLI/FREDKIN on one basis input."""
    s = bits
    for g in circuit.gates:
        k = g.kind
        if k not in PERMUTATION_KINDS:
            raise NotPermutationError(f"{k.value} is not a permutation gate")
        q = g.qubits
        if k is GateKind.X:
            s ^= 1 << q[0]
        elif k is GateKind.CNOT:
            if (s >> q[0]) & 1:
                s ^= 1 << q[1]
        elif k is GateKind.TOFFOLI:
            if (s >> q[0]) & (s >> q[1]) & 1:
                s ^= 1 << q[2]
        elif (s >> q[0]) & 1 and ((s >> q[1]) ^ (s >> q[2])) & 1:
            s ^= (1 << q[1]) | (1 << q[2])
    return s


# ---------------------------------------------------------------- array backend
#
# Same semantics as SparseState, but keys live in an (entries, words) uint64
# array so each gate is a handful of vectorised operations.  Used by the
# search pipelines, whose states hold a few hundred thousand entries.

_ONE = np.uint64(1)


@dataclass
class ArrayState:
    width: int
    keys: np.ndarray   # shape (entries, words), dtype uint64, rows unique
    amps: np.ndarray   # shape (entries,), complex128

    @property
    def words(self) -> int:
        return self.keys.shape[1]

    def __len__(self) -> int:
        return len(self.amps)

    def norm(self) -> float:
        return math.fsum(np.abs(self.amps) ** 2)

    def copy(self) -> "ArrayState":
        return ArrayState(self.width, self.keys.copy(), self.amps.copy())

    @classmethod
    def from_sparse(cls, state: SparseState) -> "ArrayState":
        words = max(1, -(-state.width // 64))
        items = list(state.amps.items())
        keys = np.zeros((len(items), words), dtype=np.uint64)
        for r, (k, _) in enumerate(items):
            for w in range(words):
                keys[r, w] = (k >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
        amps = np.array([a for _, a in items], dtype=complex)
        return cls(state.width, keys, amps)

    def to_sparse(self) -> SparseState:
        out: dict[int, complex] = {}
        for row, a in zip(self.keys.tolist(), self.amps.tolist()):
            k = 0
            for w, v in enumerate(row):
                k |= int(v) << (64 * w)
            out[k] = complex(a)
        return SparseState(self.width, out)

    def bit(self, q: int) -> np.ndarray:
        return (self.keys[:, q >> 6] >> np.uint64(q & 63)) & _ONE

    def register_value(self, qubits: Sequence[int]) -> np.ndarray:
        """Per-entry integer read from ``qubits`` (bit ``i`` = ``qubits[i]``)."""
        out = np.zeros(len(self.amps), dtype=np.int64)
        for i, q in enumerate(qubits):
            out |= self.bit(q).astype(np.int64) << i
        return out


def _flip(keys: np.ndarray, q: int, cond: np.ndarray | None) -> None:
    mask = _ONE << np.uint64(q & 63)
    if cond is None:
        keys[:, q >> 6] ^= mask
    else:
        keys[:, q >> 6] ^= cond * mask


def _apply_array(st: ArrayState, g: Gate) -> ArrayState:
    k, q = g.kind, g.qubits
    keys = st.keys
    if k is GateKind.X:
        _flip(keys, q[0], None)
        return st
    if k is GateKind.CNOT:
        _flip(keys, q[1], st.bit(q[0]))
        return st
    if k is GateKind.TOFFOLI:
        _flip(keys, q[2], st.bit(q[0]) & st.bit(q[1]))
        return st
    if k is GateKind.FREDKIN:
        cond = st.bit(q[0]) & (st.bit(q[1]) ^ st.bit(q[2]))
        _flip(keys, q[1], cond)
        _flip(keys, q[2], cond)
        return st
    if k in _PHASE:
        hit = st.bit(q[0]).astype(bool)
        st.amps[hit] *= _PHASE[k]
        return st
    # Hadamard: entries differing only in bit q share a group
    b = st.bit(q[0]).astype(bool)
    lo = keys.copy()
    lo[:, q[0] >> 6] &= ~(_ONE << np.uint64(q[0] & 63))
    order = np.lexsort(lo.T)
    lo_s = lo[order]
    new = np.ones(len(order), dtype=bool)
    if len(order) > 1:
        new[1:] = np.any(lo_s[1:] != lo_s[:-1], axis=1)
    gid_sorted = np.cumsum(new) - 1
    gid = np.empty_like(gid_sorted)
    gid[order] = gid_sorted
    groups = int(gid_sorted[-1]) + 1 if len(order) else 0
    a0 = np.zeros(groups, dtype=complex)
    a1 = np.zeros(groups, dtype=complex)
    a0[gid[~b]] = st.amps[~b]
    a1[gid[b]] = st.amps[b]
    base = lo_s[new]
    out0 = (a0 + a1) * _SQRT_HALF
    out1 = (a0 - a1) * _SQRT_HALF
    hi = base.copy()
    _flip(hi, q[0], None)
    keys_out = np.concatenate([base, hi])
    amps_out = np.concatenate([out0, out1])
    keep = np.abs(amps_out) >= PRUNE
    return ArrayState(st.width, keys_out[keep], amps_out[keep])


def apply_gates_array(
    state: ArrayState,
    gates: Iterable[Gate],
    max_entries: int | None = None,
) -> ArrayState:
    """Apply gates in place where possible; returns the resulting state."""
    st = state
    for g in gates:
        if max(g.qubits) >= st.width:
            raise ValueError(f"gate {g} does not fit width {st.width}")
        st = _apply_array(st, g)
        if max_entries is not None and len(st) > max_entries:
            raise ResourceLimitError(f"state grew to {len(st)} entries (budget {max_entries})")
    return st


def array_marginal(state: ArrayState, register: Sequence[int]) -> dict[int, float]:
    vals = state.register_value(register)
    probs = np.bincount(vals, weights=np.abs(state.amps) ** 2, minlength=1 << len(register))
    return {i: float(p) for i, p in enumerate(probs) if p > 0}
