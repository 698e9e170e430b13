"""Classical linear algebra over GF(2).

Matrices are stored row-major, one Python int per row with column ``j`` at
bit ``j``.  Everything here is the ground truth the quantum circuits are
checked against, so it favours clarity over speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np


class DimensionError(ValueError):
    """Operand shapes do not agree."""


class InconsistentSystemError(ValueError):
    """Raised when solutions are requested from a system with none."""


def _check_bits(value: int, width: int) -> None:
    if value < 0 or value >> width:
        raise ValueError(f"bit pattern {value:#x} does not fit in {width} bits")


@dataclass(frozen=True)
class Gf2Vector:
    len: int
    bits: int = 0

    def __post_init__(self) -> None:
        if self.len < 0:
            raise ValueError("vector length must be non-negative")
        _check_bits(self.bits, self.len)

    @classmethod
    def from_list(cls, entries: Sequence[int]) -> "Gf2Vector":
        bits = 0
        for j, e in enumerate(entries):
            if e not in (0, 1):
                raise ValueError(f"entry {e!r} is not a bit")
            bits |= int(e) << j
        return cls(len(entries), bits)

    @classmethod
    def from_string(cls, text: str) -> "Gf2Vector":
        return cls.from_list([int(ch) for ch in text])

    def __getitem__(self, j: int) -> int:
        if not 0 <= j < self.len:
            raise IndexError(j)
        return (self.bits >> j) & 1

    def __iter__(self) -> Iterator[int]:
        return (self[j] for j in range(self.len))

    def to_list(self) -> list[int]:
        return list(self)

    def to_string(self) -> str:
        return "".join(str(e) for e in self)

    def __xor__(self, other: "Gf2Vector") -> "Gf2Vector":
        if other.len != self.len:
            raise DimensionError("vector lengths differ")
        return Gf2Vector(self.len, self.bits ^ other.bits)

    def dot(self, other: "Gf2Vector") -> int:
        if other.len != self.len:
            raise DimensionError("vector lengths differ")
        return bin(self.bits & other.bits).count("1") & 1

    def weight(self) -> int:
        return bin(self.bits).count("1")


@dataclass(frozen=True)
class Gf2Matrix:
    rows: int
    cols: int
    bits: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("matrix needs at least one row and one column")
        if not self.bits:
            object.__setattr__(self, "bits", (0,) * self.rows)
        if len(self.bits) != self.rows:
            raise ValueError("row count does not match packed storage")
        for r in self.bits:
            _check_bits(r, self.cols)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "Gf2Matrix":
        if not rows:
            raise ValueError("matrix needs at least one row")
        width = len(rows[0])
        packed = []
        for r in rows:
            if len(r) != width:
                raise ValueError("ragged rows")
            packed.append(Gf2Vector.from_list(r).bits)
        return cls(len(rows), width, tuple(packed))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Gf2Matrix":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError("expected a 2-d array")
        return cls.from_rows(arr.astype(int).tolist())

    @classmethod
    def identity(cls, n: int) -> "Gf2Matrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def zeros(cls, m: int, n: int) -> "Gf2Matrix":
        return cls(m, n)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(ij)
        return (self.bits[i] >> j) & 1

    def row(self, i: int) -> Gf2Vector:
        return Gf2Vector(self.cols, self.bits[i])

    def column(self, j: int) -> Gf2Vector:
        if not 0 <= j < self.cols:
            raise IndexError(j)
        return Gf2Vector.from_list([(r >> j) & 1 for r in self.bits])

    def to_array(self) -> np.ndarray:
        return np.array([[(r >> j) & 1 for j in range(self.cols)] for r in self.bits], dtype=np.uint8)

    def to_rows(self) -> list[list[int]]:
        return self.to_array().tolist()

    def matvec(self, x: Gf2Vector) -> Gf2Vector:
        if x.len != self.cols:
            raise DimensionError(f"matrix has {self.cols} columns, vector has {x.len} entries")
        out = 0
        for i, r in enumerate(self.bits):
            out |= (bin(r & x.bits).count("1") & 1) << i
        return Gf2Vector(self.rows, out)

    def augment(self, b: Gf2Vector) -> "Gf2Matrix":
        if b.len != self.rows:
            raise DimensionError(f"matrix has {self.rows} rows, vector has {b.len} entries")
        return Gf2Matrix(
            self.rows,
            self.cols + 1,
            tuple(r | (b[i] << self.cols) for i, r in enumerate(self.bits)),
        )


@dataclass(frozen=True)
class GeneralSolution:
    """Solution set ``special + span(kernel_basis)``; empty when inconsistent."""

    rank: int
    pivot_cols: tuple[int, ...]
    special: Gf2Vector | None
    kernel_basis: tuple[Gf2Vector, ...]
    consistent: bool

    @property
    def nullity(self) -> int:
        return len(self.kernel_basis)


def _reduce(A: Gf2Matrix, b: Gf2Vector) -> tuple[dict[int, tuple[int, int]], list[tuple[int, int]]]:
    """Column-scan Gauss-Jordan elimination without column swaps.

    For column ``j`` the pivot is the lowest-index unused row holding a 1 there.
    Returns the pivot rows keyed by column and the rows never used as pivots.
    """
    rows = [(r, b[i]) for i, r in enumerate(A.bits)]
    pivots: dict[int, tuple[int, int]] = {}
    for j in range(A.cols):
        hit = next((i for i, (r, _) in enumerate(rows) if (r >> j) & 1), None)
        if hit is None:
            continue
        pr, pb = rows.pop(hit)
        for col, (r, rb) in list(pivots.items()):
            if (r >> j) & 1:
                pivots[col] = (r ^ pr, rb ^ pb)
        rows = [(r ^ pr, rb ^ pb) if (r >> j) & 1 else (r, rb) for r, rb in rows]
        pivots[j] = (pr, pb)
    return pivots, rows


def gauss_jordan(A: Gf2Matrix, b: Gf2Vector) -> GeneralSolution:
    """Rank, pivot columns, special solution and kernel basis of ``Ax = b``.

    Variables keep their original order.  Kernel vectors come from the free
    columns in increasing order: ``eta_f`` has a 1 at ``f`` and, at each pivot
    column ``p``, the entry of the reduced pivot row ``p`` in column ``f``.
    """
    if b.len != A.rows:
        raise DimensionError(f"matrix has {A.rows} rows, vector has {b.len} entries")
    n = A.cols
    pivots, leftover = _reduce(A, b)
    pivot_cols = tuple(sorted(pivots))
    rank = len(pivot_cols)
    if any(rb for _, rb in leftover):
        return GeneralSolution(rank, pivot_cols, None, (), False)
    special = 0
    for p, (_, pb) in pivots.items():
        special |= pb << p
    basis = []
    for f in range(n):
        if f in pivots:
            continue
        v = 1 << f
        for p, (pr, _) in pivots.items():
            v |= ((pr >> f) & 1) << p
        basis.append(Gf2Vector(n, v))
    return GeneralSolution(rank, pivot_cols, Gf2Vector(n, special), tuple(basis), True)


def rank(A: Gf2Matrix) -> int:
    pivots, _ = _reduce(A, Gf2Vector(A.rows))
    return len(pivots)


def is_consistent(A: Gf2Matrix, b: Gf2Vector) -> bool:
    if b.len != A.rows:
        raise DimensionError(f"matrix has {A.rows} rows, vector has {b.len} entries")
    return rank(A) == rank(A.augment(b))


def enumerate_solutions(gs: GeneralSolution) -> Iterator[Gf2Vector]:
    """Yield all ``2**k`` solutions; coefficient bit ``i`` selects ``kernel_basis[i]``.

    Raises InconsistentSystemError when the system has no solution.
    """
    if not gs.consistent or gs.special is None:
        raise InconsistentSystemError("system has no solution")
    k = len(gs.kernel_basis)
    for coeffs in range(1 << k):
        x = gs.special.bits
        for i, eta in enumerate(gs.kernel_basis):
            if (coeffs >> i) & 1:
                x ^= eta.bits
        yield Gf2Vector(gs.special.len, x)


def span(vectors: Sequence[Gf2Vector], n: int) -> frozenset[int]:
    """All XOR combinations of ``vectors`` as packed ints."""
    out = {0}
    for v in vectors:
        out |= {x ^ v.bits for x in out}
    return frozenset(out)


def random_system(m: int, n: int, seed: int) -> tuple[Gf2Matrix, Gf2Vector]:
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 2, size=(m, n))
    b = rng.integers(0, 2, size=m)
    return Gf2Matrix.from_array(A), Gf2Vector.from_list(b.tolist())


def parse_system(text: str) -> tuple[Gf2Matrix, Gf2Vector | None]:
    """Read ``m n`` then ``m`` rows of 0/1 characters, then an optional vector line."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("line 1: empty matrix file")
    head = lines[0].split()
    if len(head) != 2 or not all(h.isdigit() for h in head):
        raise ValueError(f"line 1: expected 'm n', got {lines[0]!r}")
    m, n = int(head[0]), int(head[1])
    if m < 1 or n < 1:
        raise ValueError("line 1: dimensions must be positive")
    if len(lines) < 1 + m:
        raise ValueError(f"expected {m} matrix rows, found {len(lines) - 1}")
    rows = []
    for k in range(m):
        ln = lines[1 + k]
        if len(ln) != n or set(ln) - {"0", "1"}:
            raise ValueError(f"row {k + 1}: expected {n} characters from {{0,1}}, got {ln!r}")
        rows.append([int(ch) for ch in ln])
    b = None
    if len(lines) > 1 + m:
        ln = lines[1 + m]
        if len(ln) != m or set(ln) - {"0", "1"}:
            raise ValueError(f"vector line: expected {m} characters from {{0,1}}, got {ln!r}")
        b = Gf2Vector.from_string(ln)
        if len(lines) > 2 + m:
            raise ValueError("trailing content after vector line")
    return Gf2Matrix.from_rows(rows), b


def format_system(A: Gf2Matrix, b: Gf2Vector | None = None) -> str:
    out = [f"{A.rows} {A.cols}"]
    out += ["".join(str(e) for e in row) for row in A.to_rows()]
    if b is not None:
        out.append(b.to_string())
    return "\n".join(out) + "\n"
