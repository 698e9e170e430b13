"""Shared test helpers: a dense reference simulator written independently of
the package, plus brute-force GF(2) oracles."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

S2 = 1 / np.sqrt(2)
ONE_QUBIT = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "H": np.array([[S2, S2], [S2, -S2]], dtype=complex),
    "S": np.diag([1, 1j]),
    "S_DAG": np.diag([1, -1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "T_DAG": np.diag([1, np.exp(-1j * np.pi / 4)]),
}


def _perm_matrix(k: int, fn) -> np.ndarray:
    """Matrix on k qubits; local bit i of the index belongs to the i-th listed qubit."""
    M = np.zeros((1 << k, 1 << k), dtype=complex)
    for x in range(1 << k):
        M[fn(x), x] = 1
    return M


def gate_matrix(kind: str) -> np.ndarray:
    if kind in ONE_QUBIT:
        return ONE_QUBIT[kind]
    if kind == "CNOT":
        return _perm_matrix(2, lambda x: x ^ 2 if x & 1 else x)
    if kind == "TOFFOLI":
        return _perm_matrix(3, lambda x: x ^ 4 if x & 3 == 3 else x)
    if kind == "FREDKIN":
        def f(x):
            if x & 1 and ((x >> 1) & 1) != ((x >> 2) & 1):
                return x ^ 6
            return x
        return _perm_matrix(3, f)
    raise KeyError(kind)


def dense_apply(vec: np.ndarray, width: int, kind: str, qubits) -> np.ndarray:
    """Apply one gate to a dense vector (qubit 0 = least significant bit)."""
    M = gate_matrix(kind)
    k = len(qubits)
    psi = vec.reshape([2] * width)
    # tensor axis of qubit q is width-1-q; the local index has listed qubit i at bit i
    axes = [width - 1 - q for q in reversed(qubits)]
    Mt = M.reshape([2] * (2 * k))
    out = np.tensordot(Mt, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(-1)


def dense_run(width: int, gates, start: int = 0) -> np.ndarray:
    vec = np.zeros(1 << width, dtype=complex)
    vec[start] = 1
    for g in gates:
        vec = dense_apply(vec, width, g.kind.value, g.qubits)
    return vec


def dense_unitary(width: int, gates) -> np.ndarray:
    return np.stack([dense_run(width, gates, s) for s in range(1 << width)], axis=1)


def brute_solutions(rows: list[int], b: list[int], n: int) -> set[int]:
    """Every x with A x = b, by trying all 2**n candidates."""
    out = set()
    for x in range(1 << n):
        if all((bin(r & x).count("1") & 1) == bi for r, bi in zip(rows, b)):
            out.add(x)
    return out


def brute_rank(rows: list[int], n: int) -> int:
    """log2 of the size of the row space, by closure."""
    sp = {0}
    for r in rows:
        sp |= {v ^ r for v in sp}
    return len(sp).bit_length() - 1


def all_subspace_bases(n: int):
    """One basis for every subspace of F2^n (including the zero subspace)."""
    seen = set()
    for k in range(n + 1):
        for combo in itertools.combinations(range(1, 1 << n), k):
            sp = {0}
            for v in combo:
                sp |= {x ^ v for x in sp}
            if len(sp) != 1 << k:
                continue
            key = frozenset(sp)
            if key not in seen:
                seen.add(key)
                yield list(combo), key


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
