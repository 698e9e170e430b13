"""Reversible circuits that solve GF(2) systems held in qubits.

Three constructions are provided:

* ``ALG1`` mirrors classical row-scan Gauss-Jordan elimination: pivot flags
  found with negated-control Toffoli chains, Toffoli row additions, and
  Fredkin swaps that move each pivot row onto the diagonal.
* ``ALG2`` scans columns, uses ``mark``/``tag`` ancillas, realises the row
  move by Toffoli row addition into an upper block of zero rows, and writes
  the general solution back into the data block.
* ``ALG3`` is ``ALG2`` with a separate storage block for the solution; it
  reduces a scratch copy of the data rows, so the data block is never written.

All indices are 0-based.  Inside the matrix register, row ``r`` of the padded
matrix occupies ``n + 1`` consecutive qubits: ``n`` coefficient cells followed
by the right-hand side cell.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from .circuit_ir import Circuit, CircuitBuilder, Gate, GateKind, Register, gate_counts
from .gf2_oracle import (
    DimensionError,
    GeneralSolution,
    Gf2Matrix,
    Gf2Vector,
    enumerate_solutions,
)
from .sparse_sim import (
    ResourceLimitError,
    SparseState,
    apply_circuit,
    apply_gates,
    classical_eval,
    exact_marginal,
    init_basis,
    measure_register,
)


class Variant(str, enum.Enum):
    ALG1 = "alg1"
    ALG2 = "alg2"
    ALG3 = "alg3"


class Mode(str, enum.Enum):
    SAMPLE = "sample"
    ENUMERATE = "enumerate"


@dataclass(frozen=True)
class LinsolveLayout:
    m: int
    n: int
    variant: Variant
    matrix: Register
    matrix_rows: int
    data_row0: int        # first padded row holding input row 0
    upper_row0: int       # first row of the pivot block (ALG2/3 upper zeros, ALG1 landing block)
    store_row0: int       # first row of the block holding [eta | b']
    mark: Register | None
    tag: Register | None
    pivot: Register | None
    work: Register | None
    radd: Register
    k: Register
    solution: Register
    total_width: int
    elimination_end: int  # gate index after which the solution stage begins
    scratch: Register | None = None

    def cell(self, row: int, col: int) -> int:
        """Qubit of padded-matrix cell (row, col); col == n is the right-hand side."""
        if not (0 <= row < self.matrix_rows and 0 <= col <= self.n):
            raise IndexError((row, col))
        return self.matrix.start + row * (self.n + 1) + col

    def data_qubits(self) -> list[int]:
        return [self.cell(self.data_row0 + i, c) for i in range(self.m) for c in range(self.n + 1)]

    def store_qubits(self) -> list[int]:
        return [self.cell(self.store_row0 + r, c) for r in range(self.n) for c in range(self.n + 1)]

    def registers(self) -> dict[str, Register]:
        regs = {"matrix": self.matrix, "radd": self.radd, "k": self.k, "solution": self.solution}
        for name in ("mark", "tag", "pivot", "work", "scratch"):
            reg = getattr(self, name)
            if reg is not None:
                regs[name] = reg
        return regs

    def encode(self, A: Gf2Matrix, b: Gf2Vector) -> int:
        """Basis index carrying (A, b) in the data rows, all other qubits 0."""
        if A.rows != self.m or A.cols != self.n or b.len != self.m:
            raise DimensionError(f"layout is for {self.m}x{self.n}, got {A.rows}x{A.cols}")
        key = 0
        for i in range(self.m):
            for j in range(self.n):
                key |= A[i, j] << self.cell(self.data_row0 + i, j)
            key |= b[i] << self.cell(self.data_row0 + i, self.n)
        return key


@dataclass(frozen=True)
class LinsolveResult:
    rank: int
    consistent: bool
    special: Gf2Vector | None
    kernel_basis: tuple[Gf2Vector, ...]
    solution_sample: Gf2Vector | None
    data_register_restored: bool | None = None
    solution_set: frozenset[int] | None = field(default=None, compare=False)


# ---------------------------------------------------------------- builders

def _alloc_matrix(cb: CircuitBuilder, rows: int, n: int) -> Register:
    return cb.alloc("matrix", rows * (n + 1))


def _solution_stage(cb: CircuitBuilder, lay_cell, store_row0: int, n: int, k: Register, sol: Register) -> None:
    # one Hadamard per coefficient qubit, shared by every solution bit
    for h in range(n):
        cb.h(k[h])
    for j in range(n):
        for h in range(n):
            cb.toffoli(k[h], lay_cell(store_row0 + j, h), sol[j])
        cb.cnot(lay_cell(store_row0 + j, n), sol[j])


def build_alg1(m: int, n: int) -> tuple[Circuit, LinsolveLayout]:
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    cb = CircuitBuilder()
    rows = m + 2 * n
    mat = _alloc_matrix(cb, rows, n)
    pivot = cb.alloc("pivot", m * n)
    work_per_row = sum(j for j in range(2, n))
    work = cb.alloc("work", m * work_per_row)
    radd = cb.alloc("radd", m * n * (m - 1))
    k = cb.alloc("k", n)
    sol = cb.alloc("solution", n)
    data0, land0, store0 = 0, m, m + n

    def cell(r: int, c: int) -> int:
        return mat.start + r * (n + 1) + c

    def P(i: int, j: int) -> int:
        return pivot[i * n + j]

    w_next = iter(work.qubits)
    r_next = iter(radd.qubits)
    for i in range(m):
        row = data0 + i
        for j in range(n):
            # P[i][j] = 1 iff the first 1 of row i sits in column j
            if j == 0:
                cb.cnot(cell(row, 0), P(i, 0))
            elif j == 1:
                cb.x(cell(row, 0))
                cb.toffoli(cell(row, 0), cell(row, 1), P(i, 1))
                cb.x(cell(row, 0))
            else:
                for t in range(j):
                    cb.x(cell(row, t))
                prev = next(w_next)
                cb.toffoli(cell(row, 0), cell(row, 1), prev)
                for t in range(2, j):
                    w = next(w_next)
                    cb.toffoli(cell(row, t), prev, w)
                    prev = w
                for t in range(j):
                    cb.x(cell(row, t))
                w = next(w_next)
                cb.toffoli(cell(row, j), prev, w)
                cb.cnot(w, P(i, j))
            for ell in range(m):
                if ell == i:
                    continue
                r = next(r_next)
                cb.toffoli(P(i, j), cell(data0 + ell, j), r)
                for c in range(n + 1):
                    cb.toffoli(r, cell(row, c), cell(data0 + ell, c))
    # move every pivot row to its diagonal slot in the landing block
    for i in range(m):
        for j in range(n):
            for c in range(n + 1):
                cb.fredkin(P(i, j), cell(data0 + i, c), cell(land0 + j, c))
    for j in range(n):
        d = cell(land0 + j, j)
        cb.toffoli(d, cell(land0 + j, n), cell(store0 + j, n))
        for i in range(n):
            if i == j:
                continue
            cb.x(d)
            cb.toffoli(d, cell(land0 + i, j), cell(store0 + i, j))
            cb.x(d)
        cb.x(d)
        cb.cnot(d, cell(store0 + j, j))
        cb.x(d)
    end = len(cb.gates)
    _solution_stage(cb, cell, store0, n, k, sol)
    circ = cb.build()
    lay = LinsolveLayout(
        m, n, Variant.ALG1, mat, rows, data0, land0, store0,
        None, None, pivot, work, radd, k, sol, circ.width, end,
    )
    return circ, lay


def _alg23(m: int, n: int, variant: Variant, omit_redundant_range: bool, interleave_store: bool) -> tuple[Circuit, LinsolveLayout]:
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    cb = CircuitBuilder()
    if variant is Variant.ALG2:
        rows = n + max(m, n)
        store0 = n
    else:
        rows = m + 2 * n
        store0 = m + n
    mat = _alloc_matrix(cb, rows, n)
    scratch = cb.alloc("scratch", m * (n + 1)) if variant is Variant.ALG3 else None
    mark = cb.alloc("mark", n)
    tag = cb.alloc("tag", m)
    radd = cb.alloc("radd", m * n + n * (n - 1) // 2)
    k = cb.alloc("k", n)
    sol = cb.alloc("solution", n)
    data0 = n

    def cell(r: int, c: int) -> int:
        return mat.start + r * (n + 1) + c

    def work(i: int, c: int) -> int:
        # row i of the system while it is being reduced
        if scratch is None:
            return cell(data0 + i, c)
        return scratch.start + i * (n + 1) + c

    r_next = iter(radd.qubits)

    def eliminate(j: int) -> None:
        for i in range(m):
            cb.toffoli(work(i, j), mark[j], tag[i])
            cb.toffoli(work(i, j), tag[i], mark[j])
            for c in range(n + 1):
                cb.toffoli(tag[i], work(i, c), cell(j, c))
        targets = [lambda c, t=t: cell(t, c) for t in range(j)]
        targets += [lambda c, i=i: work(i, c) for i in range(m)]
        for row in targets:
            r = next(r_next)
            cb.cnot(row(j), r)
            for c in range(n + 1):
                cb.toffoli(r, cell(j, c), row(c))

    def store(j: int) -> None:
        others = [t for t in range(n) if t < j or (t > j and not omit_redundant_range)]
        for t in others:
            cb.toffoli(mark[j], cell(t, j), cell(store0 + t, j))
        cb.cnot(mark[j], cell(store0 + j, j))
        cb.x(mark[j])
        cb.toffoli(mark[j], cell(j, n), cell(store0 + j, n))
        cb.x(mark[j])

    for j in range(n):
        cb.x(mark[j])
    if scratch is not None:
        # the data rows are only ever read, so they survive untouched
        for i in range(m):
            for c in range(n + 1):
                cb.cnot(cell(data0 + i, c), work(i, c))
    if interleave_store:
        for j in range(n):
            eliminate(j)
            store(j)
    else:
        for j in range(n):
            eliminate(j)
        for j in range(n):
            store(j)
    end = len(cb.gates)
    _solution_stage(cb, cell, store0, n, k, sol)
    circ = cb.build()
    lay = LinsolveLayout(
        m, n, variant, mat, rows, data0, 0, store0,
        mark, tag, None, None, radd, k, sol, circ.width, end, scratch,
    )
    return circ, lay


def build_alg2(m: int, n: int, omit_redundant_range: bool = False, interleave_store: bool = False) -> tuple[Circuit, LinsolveLayout]:
    """Column-scan solver writing ``[eta | b']`` into rows ``n..2n-1``.

    ``interleave_store`` places each column's storage step inside the
    elimination loop, as the step order of the original listing does; that
    order reads pivot rows before later columns finish reducing them and gives
    wrong solutions on some inputs.  It is kept for comparison only.
    """
    return _alg23(m, n, Variant.ALG2, omit_redundant_range, interleave_store)


def build_alg3(m: int, n: int, omit_redundant_range: bool = False, interleave_store: bool = False) -> tuple[Circuit, LinsolveLayout]:
    """Like ALG2 but reduces a scratch copy and stores ``[eta | b']`` in its own block."""
    return _alg23(m, n, Variant.ALG3, omit_redundant_range, interleave_store)


def build(variant: Variant | str, m: int, n: int, **kw) -> tuple[Circuit, LinsolveLayout]:
    variant = Variant(variant)
    if variant is Variant.ALG1:
        return build_alg1(m, n)
    if variant is Variant.ALG2:
        return build_alg2(m, n, **kw)
    return build_alg3(m, n, **kw)


# ---------------------------------------------------------------- counts

def predicted_counts(variant: Variant | str, m: int, n: int) -> dict[str, int]:
    """Closed-form CNOT/TOFFOLI/FREDKIN totals for each construction."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    variant = Variant(variant)
    if variant is Variant.ALG1:
        tof2 = 2 * m * m * n * n + 4 * m * m * n - m * n * n + 4 * n * n - 5 * m * n
        return {"CNOT": m * n + 2 * n - m, "TOFFOLI": tof2 // 2, "FREDKIN": m * n * (n + 1)}
    cnot2 = 2 * m * n + n * n + 3 * n
    tof2 = 4 * m * n * n + n ** 3 + 8 * m * n + 4 * n * n - n
    return {"CNOT": cnot2 // 2, "TOFFOLI": tof2 // 2, "FREDKIN": 0}


def deviation(variant: Variant | str, m: int, n: int) -> dict[str, int]:
    """Expected built-minus-predicted count per gate kind.

    ALG1 with a single column: the pivot flag of column 0 costs one CNOT per
    row, which the closed form omits.
    ALG3: copying the data rows into the scratch block costs one CNOT per cell.
    """
    variant = Variant(variant)
    if variant is Variant.ALG1:
        return {"CNOT": m if n == 1 else 0, "TOFFOLI": 0, "FREDKIN": 0}
    if variant is Variant.ALG3:
        return {"CNOT": m * (n + 1), "TOFFOLI": 0, "FREDKIN": 0}
    return {"CNOT": 0, "TOFFOLI": 0, "FREDKIN": 0}


def built_counts(circuit: Circuit) -> dict[str, int]:
    c = gate_counts(circuit.gates)
    return {"CNOT": c["CNOT"], "TOFFOLI": c["TOFFOLI"], "FREDKIN": c["FREDKIN"]}


# ---------------------------------------------------------------- readout

def _read(key: int, q: int) -> int:
    return (key >> q) & 1


def read_general_solution(key: int, lay: LinsolveLayout) -> tuple[int, int, list[int]]:
    """(rank, b' bits, eta columns) from a basis state after the elimination stage."""
    n = lay.n
    if lay.variant is Variant.ALG1:
        pivots = [_read(key, lay.cell(lay.upper_row0 + j, j)) == 1 for j in range(n)]
    elif lay.variant is Variant.ALG2:
        pivots = [_read(key, lay.mark[j]) == 0 for j in range(n)]
    else:
        pivots = [_read(key, lay.mark[j]) == 0 for j in range(n)]
    special = 0
    for j in range(n):
        special |= _read(key, lay.cell(lay.store_row0 + j, n)) << j
    eta_cols = []
    for h in range(n):
        if pivots[h]:
            continue
        v = 0
        for j in range(n):
            v |= _read(key, lay.cell(lay.store_row0 + j, h)) << j
        eta_cols.append(v)
    return sum(pivots), special, eta_cols


def _data_bits(key: int, lay: LinsolveLayout) -> int:
    out = 0
    for i, q in enumerate(lay.data_qubits()):
        out |= _read(key, q) << i
    return out


def _circuit_cache():
    cache: dict[tuple, tuple[Circuit, LinsolveLayout]] = {}

    def get(variant: Variant, m: int, n: int):
        key = (variant, m, n)
        if key not in cache:
            cache[key] = build(variant, m, n)
        return cache[key]

    return get


cached_build = _circuit_cache()


def solve_instance(
    variant: Variant | str,
    A: Gf2Matrix,
    b: Gf2Vector,
    mode: Mode | str = Mode.ENUMERATE,
    seed: int | None = 0,
    circuit: tuple[Circuit, LinsolveLayout] | None = None,
) -> LinsolveResult:
    """Encode (A, b) as a basis state, simulate the solver and read it out.

    Consistency is decided from the circuit output: the read-back special
    solution must satisfy ``A x = b``; the solution register is meaningless
    otherwise.
    """
    variant = Variant(variant)
    mode = Mode(mode)
    if b.len != A.rows:
        raise DimensionError("b length must equal the number of rows")
    circ, lay = circuit if circuit is not None else cached_build(variant, A.rows, A.cols)
    if lay.variant is not variant or (lay.m, lay.n) != (A.rows, A.cols):
        raise DimensionError("circuit does not match variant or dimensions")
    n = lay.n
    key_in = lay.encode(A, b)
    state = apply_circuit(init_basis(lay.total_width, key_in), circ)
    # every branch agrees outside the k/solution registers
    some_key = next(iter(state.amps))
    rank, special, eta_cols = read_general_solution(some_key, lay)
    x0 = Gf2Vector(n, special)
    consistent = A.matvec(x0) == b
    restored = None
    if variant is Variant.ALG3:
        restored = all(_data_bits(s, lay) == _data_bits(key_in, lay) for s in state.amps)
    if not consistent:
        return LinsolveResult(rank, False, None, (), None, restored)
    basis = tuple(Gf2Vector(n, v) for v in eta_cols)
    sample = None
    sols = None
    if mode is Mode.SAMPLE:
        out = measure_register(state, list(lay.solution.qubits), seed)
        sample = Gf2Vector(n, out.bits)
    else:
        gs = GeneralSolution(rank, (), x0, basis, True)
        sols = frozenset(v.bits for v in enumerate_solutions(gs))
    return LinsolveResult(rank, True, x0, basis, sample, restored, sols)


def solution_marginal(variant: Variant | str, A: Gf2Matrix, b: Gf2Vector) -> dict[int, float]:
    """Exact distribution of the solution register for one basis input."""
    circ, lay = cached_build(Variant(variant), A.rows, A.cols)
    state = apply_circuit(init_basis(lay.total_width, lay.encode(A, b)), circ)
    return exact_marginal(state, list(lay.solution.qubits))


def data_register_restored(circuit: Circuit, lay: LinsolveLayout, A: Gf2Matrix, b: Gf2Vector) -> bool:
    """Whether the permutation part of the circuit leaves the data rows as they were."""
    key = lay.encode(A, b)
    prefix = Circuit(circuit.width, circuit.gates[: lay.elimination_end])
    return _data_bits(classical_eval(prefix, key), lay) == _data_bits(key, lay)


def solve_superposed(
    variant: Variant | str,
    m: int,
    n: int,
    max_entries: int = 1 << 16,
) -> tuple[SparseState, LinsolveLayout]:
    """Uniform superposition over every (A, b), pushed through the solver."""
    variant = Variant(variant)
    circ, lay = cached_build(variant, m, n)
    branches = 1 << (m * (n + 1))
    need = branches << n
    if need > max_entries:
        raise ResourceLimitError(
            f"superposed solve needs about {need} entries (2^{m * (n + 1)} inputs x 2^{n} coefficients), budget {max_entries}"
        )
    state = init_basis(lay.total_width, 0)
    prep = [Gate(GateKind.H, (q,)) for q in lay.data_qubits()]
    state = apply_gates(state, prep, max_entries)
    return apply_circuit(state, circ, max_entries), lay


def decode_input(key: int, lay: LinsolveLayout) -> tuple[Gf2Matrix, Gf2Vector]:
    """Inverse of ``encode`` for ALG3 (whose data rows survive)."""
    rows = []
    bvec = []
    for i in range(lay.m):
        rows.append([_read(key, lay.cell(lay.data_row0 + i, j)) for j in range(lay.n)])
        bvec.append(_read(key, lay.cell(lay.data_row0 + i, lay.n)))
    return Gf2Matrix.from_rows(rows), Gf2Vector.from_list(bvec)


def all_systems(m: int, n: int):
    """Every (A, b) with A in F2^{m x n}."""
    for bits in range(1 << (m * (n + 1))):
        rows = [[(bits >> (i * (n + 1) + j)) & 1 for j in range(n)] for i in range(m)]
        bvec = [(bits >> (i * (n + 1) + n)) & 1 for i in range(m)]
        yield Gf2Matrix.from_rows(rows), Gf2Vector.from_list(bvec)
