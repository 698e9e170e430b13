"""Simon-type pipelines on top of the reversible GF(2) solvers.

Three applications live here:

* parallel Simon sampling, where the measured vectors become the rows of a
  homogeneous system and its kernel is the hidden period span;
* a key search on the FX construction that runs Grover over the inner key
  with a Simon-based classifier;
* a search for the index ``i0`` whose ``f_i0 xor g`` is periodic, reusing one
  prepared ``g`` state across all iterations.

Oracles are explicit truth tables compiled into X/CNOT/Toffoli networks via
their algebraic normal form.  Probabilities are reported as exact final-state
mass.  The probability bounds used to size these experiments are at the end
of the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .circuit_ir import Circuit, CircuitBuilder, Gate, GateKind, Register
from .gf2_oracle import Gf2Matrix, Gf2Vector, rank, span
from .linsolve_circuits import (
    LinsolveLayout,
    Mode,
    Variant,
    build_alg2,
    build_alg3,
    read_general_solution,
    solve_instance,
)
from .sparse_sim import (
    ArrayState,
    ResourceLimitError,
    apply_gates,
    apply_gates_array,
    array_marginal,
    classical_eval,
    exact_marginal,
    init_basis,
    measure_register,
)

SAMPLED = "sampled"
COHERENT = "coherent"
EPSILON_MAX_N = 12


# ---------------------------------------------------------------- oracles

def _as_int(v: Gf2Vector | int | str, n: int) -> int:
    if isinstance(v, Gf2Vector):
        if v.len != n:
            raise ValueError(f"period has {v.len} bits, expected {n}")
        return v.bits
    if isinstance(v, str):
        return _as_int(Gf2Vector.from_string(v), n)
    if v < 0 or v >> n:
        raise ValueError(f"period {v} does not fit in {n} bits")
    return int(v)


@dataclass(frozen=True)
class PeriodicOracle:
    """Truth table of ``f: F2^n -> F2^n`` with a known period basis."""

    n: int
    truth_table: tuple[int, ...]
    period_set: tuple[Gf2Vector, ...] = ()
    epsilon: float | None = field(default=None, compare=False)

    def __call__(self, x: int) -> int:
        return self.truth_table[x]

    def period_span(self) -> frozenset[int]:
        return span(self.period_set, self.n)


def _check_periods(n: int, periods: Sequence[int]) -> None:
    if not periods:
        return
    if any(p == 0 for p in periods):
        raise ValueError("the zero vector is not a period")
    M = Gf2Matrix(len(periods), n, tuple(periods))
    if rank(M) != len(periods):
        raise ValueError("periods are linearly dependent")


def oracle_from_table(n: int, table: Sequence[int], periods: Iterable = ()) -> PeriodicOracle:
    """Wrap an explicit table; every listed period must hold exactly."""
    if n < 1:
        raise ValueError("n must be positive")
    table = tuple(int(t) for t in table)
    if len(table) != 1 << n or any(t < 0 or t >> n for t in table):
        raise ValueError(f"truth table must have {1 << n} entries of {n} bits")
    ps = [_as_int(p, n) for p in periods]
    _check_periods(n, ps)
    for s in span([Gf2Vector(n, p) for p in ps], n):
        if any(table[x] != table[x ^ s] for x in range(1 << n)):
            raise ValueError(f"f(x) != f(x xor {s:0{n}b}) for some x")
    vecs = tuple(Gf2Vector(n, p) for p in ps)
    eps = _epsilon(n, table, span(vecs, n)) if n <= EPSILON_MAX_N else None
    return PeriodicOracle(n, table, vecs, eps)


def make_oracle(n: int, periods: Iterable, seed: int) -> PeriodicOracle:
    """Random injective label per coset of ``span(periods)``."""
    if n < 1:
        raise ValueError("n must be positive")
    ps = [_as_int(p, n) for p in periods]
    _check_periods(n, ps)
    sp = span([Gf2Vector(n, p) for p in ps], n)
    rng = np.random.default_rng(seed)
    labels = rng.permutation(1 << n).tolist()
    rep_label: dict[int, int] = {}
    table = []
    for x in range(1 << n):
        rep = min(x ^ s for s in sp)
        if rep not in rep_label:
            rep_label[rep] = labels[len(rep_label)]
        table.append(rep_label[rep])
    return oracle_from_table(n, table, ps)


def with_collision(oracle: PeriodicOracle, seed: int) -> PeriodicOracle:
    """Give two distinct cosets the same label, keeping the periods intact."""
    n = oracle.n
    sp = oracle.period_span()
    reps = sorted({min(x ^ s for s in sp) for x in range(1 << n)})
    if len(reps) < 2:
        raise ValueError("oracle has a single coset; nothing to merge")
    rng = np.random.default_rng(seed)
    a, b = (reps[i] for i in rng.choice(len(reps), size=2, replace=False))
    la, lb = oracle(a), oracle(b)
    table = [la if t == lb else t for t in oracle.truth_table]
    return oracle_from_table(n, table, [p.bits for p in oracle.period_set])


def _epsilon(n: int, table: Sequence[int], sp: frozenset[int]) -> float:
    tt = np.asarray(table)
    idx = np.arange(1 << n)
    best = 0.0
    for a in range(1, 1 << n):
        if a in sp:
            continue
        best = max(best, float(np.mean(tt == tt[idx ^ a])))
    return best


def epsilon_f(oracle: PeriodicOracle) -> float:
    """Largest collision rate ``Pr_x[f(x) = f(x xor a)]`` over non-period shifts."""
    if oracle.n > EPSILON_MAX_N:
        raise ResourceLimitError(f"epsilon brute force limited to n <= {EPSILON_MAX_N}")
    return _epsilon(oracle.n, oracle.truth_table, oracle.period_span())


# ---------------------------------------------------------------- table compilation

def _anf(values: Sequence[int], nbits: int) -> list[int]:
    """Moebius transform: coefficient word for every monomial mask."""
    coeffs = list(values)
    for i in range(nbits):
        step = 1 << i
        for x in range(1 << nbits):
            if x & step:
                coeffs[x] ^= coeffs[x ^ step]
    return coeffs


def _mcx(cb: CircuitBuilder, controls: Sequence[int], target: int, pool: Sequence[int]) -> None:
    d = len(controls)
    if d == 0:
        cb.x(target)
    elif d == 1:
        cb.cnot(controls[0], target)
    elif d == 2:
        cb.toffoli(controls[0], controls[1], target)
    else:
        if len(pool) < d - 2:
            raise ValueError(f"{d}-control gate needs {d - 2} ancillas, pool has {len(pool)}")
        chain = [(controls[0], controls[1], pool[0])]
        for t in range(1, d - 2):
            chain.append((pool[t - 1], controls[t + 1], pool[t]))
        for g in chain:
            cb.toffoli(*g)
        cb.toffoli(pool[d - 3], controls[d - 1], target)
        for g in reversed(chain):
            cb.toffoli(*g)


def pool_size(nbits: int) -> int:
    """Ancillas needed by compile_table / compile_phase over ``nbits`` inputs."""
    return max(nbits - 1, 0)


def compile_table(
    cb: CircuitBuilder,
    inputs: Sequence[int],
    outputs: Sequence[int],
    table: Sequence[int],
    pool: Sequence[int],
) -> None:
    """XOR ``table[x]`` into ``outputs``; input bit ``i`` of ``x`` is ``inputs[i]``."""
    if len(table) != 1 << len(inputs):
        raise ValueError("table size does not match input width")
    coeffs = _anf(table, len(inputs))
    for mask, word in enumerate(coeffs):
        if not word:
            continue
        ctrls = [inputs[i] for i in range(len(inputs)) if (mask >> i) & 1]
        targets = [outputs[j] for j in range(len(outputs)) if (word >> j) & 1]
        if len(ctrls) >= 2 and len(targets) > 1:
            acc = pool[0]
            _mcx(cb, ctrls, acc, pool[1:])
            for t in targets:
                cb.cnot(acc, t)
            _mcx(cb, ctrls, acc, pool[1:])
        else:
            for t in targets:
                _mcx(cb, ctrls, t, pool)


def compile_phase(cb: CircuitBuilder, inputs: Sequence[int], predicate: Sequence[int], pool: Sequence[int]) -> None:
    """Multiply each basis state by ``(-1)**predicate[x]``, up to a global sign."""
    coeffs = _anf([p & 1 for p in predicate], len(inputs))
    for mask, c in enumerate(coeffs):
        if not c or mask == 0:
            continue  # the constant monomial is a global phase
        qs = [inputs[i] for i in range(len(inputs)) if (mask >> i) & 1]
        if len(qs) == 1:
            cb.add(GateKind.S, qs[0])
            cb.add(GateKind.S, qs[0])
        else:
            cb.h(qs[-1])
            _mcx(cb, qs[:-1], qs[-1], pool)
            cb.h(qs[-1])


def reflect_zero(cb: CircuitBuilder, qubits: Sequence[int], pool: Sequence[int]) -> None:
    """``I - 2|0><0|`` on ``qubits`` (the usual reflection up to a global sign)."""
    for q in qubits:
        cb.x(q)
    if len(qubits) == 1:
        cb.add(GateKind.S, qubits[0])
        cb.add(GateKind.S, qubits[0])
    else:
        cb.h(qubits[-1])
        _mcx(cb, qubits[:-1], qubits[-1], pool)
        cb.h(qubits[-1])
    for q in qubits:
        cb.x(q)


def _gates_inverse(gates: Sequence[Gate]) -> list[Gate]:
    return [g.inverse() for g in reversed(gates)]


# ---------------------------------------------------------------- Simon

@dataclass(frozen=True)
class SimonLayout:
    inp: Register
    out: Register
    pool: Register


def simon_circuit(oracle: PeriodicOracle) -> tuple[Circuit, SimonLayout]:
    """Hadamards on register I, the oracle into register II, Hadamards on I."""
    n = oracle.n
    cb = CircuitBuilder()
    inp = cb.alloc("I", n)
    out = cb.alloc("II", n)
    pool = cb.alloc("pool", pool_size(n))
    for q in inp.qubits:
        cb.h(q)
    compile_table(cb, list(inp.qubits), list(out.qubits), oracle.truth_table, list(pool.qubits))
    for q in inp.qubits:
        cb.h(q)
    return cb.build(), SimonLayout(inp, out, pool)


@lru_cache(maxsize=256)
def simon_marginal(oracle: PeriodicOracle) -> dict[int, float]:
    """Exact distribution of register I after one Simon round."""
    circ, lay = simon_circuit(oracle)
    state = apply_gates(init_basis(circ.width, 0), circ.gates)
    return exact_marginal(state, list(lay.inp.qubits))


def _check_orthogonal(y: int, oracle: PeriodicOracle) -> None:
    for s in oracle.period_set:
        if bin(y & s.bits).count("1") & 1:
            raise AssertionError(f"sampled y={y:0{oracle.n}b} is not orthogonal to period {s.to_string()}")


def sample_simon(oracle: PeriodicOracle, count: int, seed: int | np.random.Generator | None) -> list[Gf2Vector]:
    """``count`` independent Simon measurements drawn from the exact marginal."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return []
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    marg = simon_marginal(oracle)
    outcomes = list(marg)
    p = np.array([marg[o] for o in outcomes])
    draws = rng.choice(len(outcomes), size=count, p=p / p.sum())
    out = []
    for d in draws:
        y = outcomes[int(d)]
        _check_orthogonal(y, oracle)
        out.append(Gf2Vector(oracle.n, y))
    return out


@dataclass(frozen=True)
class ParallelSimonResult:
    periods: tuple[Gf2Vector, ...]
    recovered_span: frozenset[int]
    rank: int
    rows: tuple[Gf2Vector, ...]
    mode: str
    success: bool


def coherent_simon_circuit(oracle: PeriodicOracle, m_parallel: int) -> tuple[Circuit, LinsolveLayout, list[Register]]:
    """``m_parallel`` Simon rounds whose register I rows are the data rows of ALG2."""
    n = oracle.n
    circ2, lay = build_alg2(m_parallel, n)
    cb = CircuitBuilder()
    cb.width = circ2.width
    cb.registers = list(circ2.registers)
    outs = [cb.alloc(f"II_{i}", n) for i in range(m_parallel)]
    pool = cb.alloc("pool", pool_size(n))
    for i in range(m_parallel):
        row = [lay.cell(lay.data_row0 + i, j) for j in range(n)]
        for q in row:
            cb.h(q)
        compile_table(cb, row, list(outs[i].qubits), oracle.truth_table, list(pool.qubits))
        for q in row:
            cb.h(q)
    cb.extend(circ2.gates)
    return cb.build(), lay, outs


def coherent_entries(oracle: PeriodicOracle, m_parallel: int) -> int:
    """Upper estimate of the sparse state size for the coherent pipeline."""
    k = len(oracle.period_set)
    return (1 << (2 * (oracle.n - k) * m_parallel)) << oracle.n


def parallel_simon(
    oracle: PeriodicOracle,
    m_parallel: int,
    mode: str = SAMPLED,
    seed: int | None = 0,
    max_entries: int = 1 << 18,
) -> ParallelSimonResult:
    """Recover the period span from ``m_parallel`` Simon rounds solved by ALG2.

    ``sampled`` draws the rows classically from the exact Simon distribution
    and runs ALG2 on that basis input.  ``coherent`` simulates every Simon
    round and the solver as one circuit and measures the storage block.
    """
    if m_parallel < 1:
        raise ValueError("m_parallel must be positive")
    n = oracle.n
    true_span = oracle.period_span()
    if mode == SAMPLED:
        rng = np.random.default_rng(seed)
        rows = tuple(sample_simon(oracle, m_parallel, rng))
        A = Gf2Matrix(m_parallel, n, tuple(r.bits for r in rows))
        res = solve_instance(Variant.ALG2, A, Gf2Vector(m_parallel), Mode.ENUMERATE, seed)
        periods = res.kernel_basis
        rk = res.rank
    elif mode == COHERENT:
        need = coherent_entries(oracle, m_parallel)
        if need > max_entries:
            raise ResourceLimitError(f"coherent parallel Simon needs about {need} entries, budget {max_entries}")
        circ, lay, _ = coherent_simon_circuit(oracle, m_parallel)
        state = apply_gates(init_basis(circ.width, 0), circ.gates, max_entries)
        reg = list(lay.store_qubits()) + list(lay.mark.qubits)
        post = measure_register(state, reg, seed).post_state
        rk, _, eta = read_general_solution(next(iter(post.amps)), lay)
        periods = tuple(Gf2Vector(n, v) for v in eta)
        rows = ()
    else:
        raise ValueError(f"unknown mode {mode!r}")
    got = span(periods, n)
    return ParallelSimonResult(tuple(periods), got, rk, rows, mode, got == true_span)


# ---------------------------------------------------------------- bounds

def independence_probability(dim: int) -> float:
    """Probability that ``dim`` uniform vectors of ``F2^dim`` are independent."""
    if dim < 0:
        raise ValueError("dim must be non-negative")
    return math.exp(math.fsum(math.log1p(-(2.0 ** -i)) for i in range(1, dim + 1)))


def independence_probability_exact(dim: int) -> Fraction:
    if dim < 0:
        raise ValueError("dim must be non-negative")
    out = Fraction(1)
    for i in range(1, dim + 1):
        out *= 1 - Fraction(1, 1 << i)
    return out


def theorem4_bound(n: int, p0: float, m_parallel: int) -> float:
    """Lower bound on the chance that ``m_parallel`` rounds pin down the periods."""
    if not 0 <= p0 < 1:
        raise ValueError("p0 must lie in [0, 1)")
    return max(0.0, 1 - 2.0 ** n * ((1 + p0) / 2) ** m_parallel)


def recovery_threshold(n: int, p0: float) -> float:
    """Round count ``3n / (1 - p0)`` above which the bound is useful."""
    if not 0 <= p0 < 1:
        raise ValueError("p0 must lie in [0, 1)")
    return 3 * n / (1 - p0)


def grover_iterations(m: int) -> int:
    """``ceil(pi / (4 asin 2^(-m/2)))``, guarded against rounding at exact integers."""
    if m < 1:
        raise ValueError("m must be positive")
    return math.ceil(math.pi / (4 * math.asin(2.0 ** (-m / 2))) - 1e-9)


def classifier_soundness(m: int, n: int, ell: int) -> float:
    """Reported classifier success figure ``1 - 2^-(2m + n ell - 4)``; not certified here."""
    return 1 - 2.0 ** -(2 * m + n * ell - 4)


def default_ell(n: int) -> int:
    return math.ceil(2 * (n + math.sqrt(n)))


def default_pairs(m: int, n: int, ell: int) -> int:
    return -(-(3 * m + n * ell) // n)


def false_period_bound(n: int, c: float) -> float:
    """Per-index false-periodicity bound ``2^((n+1)/2) (3/4)^(c n / 2)``."""
    return 2.0 ** ((n + 1) / 2) * 0.75 ** (c * n / 2)


# ---------------------------------------------------------------- FX key search

@dataclass(frozen=True)
class FxInstance:
    m: int
    n: int
    E: tuple[tuple[int, ...], ...]
    k0: int
    k1: int
    k2: int

    def __post_init__(self) -> None:
        if len(self.E) != 1 << self.m:
            raise ValueError("need one permutation per key")
        for p in self.E:
            if sorted(p) != list(range(1 << self.n)):
                raise ValueError("every E_k must be a permutation")

    def enc(self, x: int) -> int:
        return self.E[self.k0][x ^ self.k1] ^ self.k2

    def f(self, k: int, x: int) -> int:
        return self.enc(x) ^ self.E[k][x]


def make_fx(m: int, n: int, seed: int) -> FxInstance:
    """Random permutation family; ``k1`` is drawn nonzero so a period exists."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.default_rng(seed)
    E = tuple(tuple(int(v) for v in rng.permutation(1 << n)) for _ in range(1 << m))
    k0 = int(rng.integers(1 << m))
    k1 = int(rng.integers(1, 1 << n))
    k2 = int(rng.integers(1 << n))
    return FxInstance(m, n, E, k0, k1, k2)


@dataclass(frozen=True)
class GroverSimonConfig:
    fx: FxInstance
    ell: int = 4
    pairs: int | None = None
    iterations: int | None = None
    seed: int = 0
    classifier: str = "uncompute"

    def __post_init__(self) -> None:
        if self.ell < 1:
            raise ValueError("ell must be positive")
        if self.pairs is not None and self.pairs < 1:
            raise ValueError("pairs must be positive")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.classifier not in ("uncompute", "literal"):
            raise ValueError("classifier must be 'uncompute' or 'literal'")

    @property
    def resolved_pairs(self) -> int:
        return self.pairs if self.pairs is not None else default_pairs(self.fx.m, self.fx.n, self.ell)

    @property
    def resolved_iterations(self) -> int:
        return self.iterations if self.iterations is not None else grover_iterations(self.fx.m)


@dataclass(frozen=True)
class GroverSimonResult:
    k0_found: int
    k1_found: int
    success_probability: float
    key_probability: float     # mass on k0 alone
    iterations: int
    pairs: tuple[tuple[int, int], ...]
    peak_entries: int
    norm: float


def plaintext_pairs(n: int, count: int, seed: int) -> tuple[tuple[int, int], ...]:
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng([seed, 1])
    out = []
    for _ in range(count):
        a, b = rng.choice(1 << n, size=2, replace=False)
        out.append((int(a), int(b)))
    return tuple(out)


def pair_test_table(fx: FxInstance, pairs: Sequence[tuple[int, int]]) -> list[int]:
    """Indicator over ``k | k1' << m``: the candidate reproduces every pair difference."""
    E0 = fx.E[fx.k0]
    want = [E0[a ^ fx.k1] ^ E0[b ^ fx.k1] for a, b in pairs]
    table = []
    for idx in range(1 << (fx.m + fx.n)):
        k, v = idx & ((1 << fx.m) - 1), idx >> fx.m
        Ek = fx.E[k]
        table.append(int(all(Ek[a ^ v] ^ Ek[b ^ v] == w for (a, b), w in zip(pairs, want))))
    return table


def _fixed_coefficient_solution(lay: LinsolveLayout) -> list[Gate]:
    """Solution stage with every kernel coefficient set to 1 (sum of all eta plus b')."""
    cb = CircuitBuilder()
    cb.width = lay.total_width
    n = lay.n
    for q in lay.k.qubits:
        cb.x(q)
    for j in range(n):
        for h in range(n):
            cb.toffoli(lay.k[h], lay.cell(lay.store_row0 + j, h), lay.solution[j])
        cb.cnot(lay.cell(lay.store_row0 + j, n), lay.solution[j])
    for q in lay.k.qubits:
        cb.x(q)
    return cb.gates


@dataclass
class GroverSimonCircuit:
    width: int
    key: Register
    simon_inputs: list[list[int]]
    simon_outputs: list[Register]
    solution: Register
    prepare: list[Gate]        # A
    eliminate: list[Gate]      # U4
    solve: list[Gate]          # U5
    pair_oracle: list[Gate]    # O
    reflect: list[Gate]        # S0
    lay: LinsolveLayout

    def classifier(self, mode: str) -> list[Gate]:
        u4, u5 = self.eliminate, self.solve
        if mode == "literal":
            return u4 + u5 + _gates_inverse(u4) + self.pair_oracle
        return u4 + u5 + self.pair_oracle + _gates_inverse(u5) + _gates_inverse(u4)

    def iteration(self, mode: str) -> list[Gate]:
        return self.classifier(mode) + _gates_inverse(self.prepare) + self.reflect + self.prepare


def grover_simon_circuit(cfg: GroverSimonConfig) -> GroverSimonCircuit:
    fx, ell = cfg.fx, cfg.ell
    m, n = fx.m, fx.n
    circ2, lay = build_alg2(ell, n)
    cb = CircuitBuilder()
    cb.width = circ2.width
    cb.registers = list(circ2.registers)
    key = cb.alloc("key", m)
    outs = [cb.alloc(f"III_{i}", n) for i in range(ell)]
    ins = [[lay.cell(lay.data_row0 + i, j) for j in range(n)] for i in range(ell)]
    reflected = list(key.qubits) + [q for r in ins for q in r] + [q for r in outs for q in r]
    pool = list(cb.alloc("pool", max(len(reflected) - 2, pool_size(m + n))).qubits)

    start = len(cb.gates)
    for q in key.qubits:
        cb.h(q)
    for row in ins:
        for q in row:
            cb.h(q)
    table = [fx.f(idx >> n, idx & ((1 << n) - 1)) for idx in range(1 << (m + n))]
    for row, out in zip(ins, outs):
        compile_table(cb, row + list(key.qubits), list(out.qubits), table, pool)
    for row in ins:
        for q in row:
            cb.h(q)
    prepare = cb.gates[start:]

    start = len(cb.gates)
    pairs = plaintext_pairs(n, cfg.resolved_pairs, cfg.seed)
    compile_phase(cb, list(key.qubits) + list(lay.solution.qubits), pair_test_table(fx, pairs), pool)
    oracle = cb.gates[start:]

    start = len(cb.gates)
    reflect_zero(cb, reflected, pool)
    reflect = cb.gates[start:]

    return GroverSimonCircuit(
        cb.width, key, ins, outs, lay.solution, list(prepare),
        list(circ2.gates[: lay.elimination_end]), _fixed_coefficient_solution(lay),
        list(oracle), list(reflect), lay,
    )


def grover_simon_entries(cfg: GroverSimonConfig) -> int:
    fx = cfg.fx
    return (1 << fx.m) * (1 << (2 * fx.n)) ** cfg.ell


def grover_meets_simon(cfg: GroverSimonConfig, max_entries: int = 1 << 21) -> GroverSimonResult:
    """Amplify the inner key ``k0`` with the Simon-based classifier.

    With ``classifier='uncompute'`` the candidate register is cleared after
    the phase oracle, and one extra elimination pass at the end writes the
    candidate ``k1`` for readout.  ``'literal'`` leaves it in place, as the
    step order of the original construction does, and reads it directly.
    """
    need = grover_simon_entries(cfg)
    if need > max_entries:
        raise ResourceLimitError(f"search needs about {need} entries, budget {max_entries}")
    gc = grover_simon_circuit(cfg)
    pairs = plaintext_pairs(cfg.fx.n, cfg.resolved_pairs, cfg.seed)
    state = ArrayState.from_sparse(init_basis(gc.width, 0))
    state = apply_gates_array(state, gc.prepare, max_entries)
    peak = len(state)
    step = gc.iteration(cfg.classifier)
    for _ in range(cfg.resolved_iterations):
        state = apply_gates_array(state, step, max_entries)
        peak = max(peak, len(state))
    if cfg.classifier == "uncompute":
        state = apply_gates_array(state, gc.eliminate + gc.solve, max_entries)
    fx = cfg.fx
    reg = list(gc.key.qubits) + list(gc.solution.qubits)
    marg = array_marginal(state, reg)
    success = marg.get(fx.k0 | (fx.k1 << fx.m), 0.0)
    key_mass = math.fsum(p for o, p in marg.items() if o & ((1 << fx.m) - 1) == fx.k0)
    rng = np.random.default_rng([cfg.seed, 2])
    outcomes = sorted(marg)
    p = np.array([marg[o] for o in outcomes])
    pick = outcomes[int(rng.choice(len(outcomes), p=p / p.sum()))]
    return GroverSimonResult(
        pick & ((1 << fx.m) - 1), pick >> fx.m, success, key_mass,
        cfg.resolved_iterations, pairs, peak, state.norm(),
    )


# ---------------------------------------------------------------- periodic index search

@dataclass(frozen=True)
class PolyQ2Config:
    m: int
    n: int
    c: int
    F: tuple[tuple[int, ...], ...]
    g: tuple[int, ...]
    i0: int
    s: int
    seed: int = 0
    iterations: int | None = None
    classifier: str = "uncompute"

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1 or self.c < 1:
            raise ValueError("m, n and c must be positive")
        if len(self.F) != 1 << self.m or any(len(f) != 1 << self.n for f in self.F):
            raise ValueError("F must hold 2^m tables of 2^n entries")
        if len(self.g) != 1 << self.n:
            raise ValueError("g must have 2^n entries")
        if not 0 <= self.i0 < 1 << self.m or not 0 < self.s < 1 << self.n:
            raise ValueError("i0 or s out of range")
        h = self.shifted(self.i0)
        if any(h[x] != h[x ^ self.s] for x in range(1 << self.n)):
            raise ValueError("f_i0 xor g does not have period s")
        if self.classifier not in ("uncompute", "literal"):
            raise ValueError("classifier must be 'uncompute' or 'literal'")

    @property
    def blocks(self) -> int:
        return self.c * self.n

    @property
    def resolved_iterations(self) -> int:
        return self.iterations if self.iterations is not None else grover_iterations(self.m)

    def shifted(self, i: int) -> tuple[int, ...]:
        return tuple(a ^ b for a, b in zip(self.F[i], self.g))


def make_polyq2(m: int, n: int, c: int, seed: int) -> PolyQ2Config:
    """``g`` random; ``f_i0 xor g`` a coset labelling with period ``s``; other ``f_i xor g`` random permutations."""
    rng = np.random.default_rng(seed)
    g = tuple(int(v) for v in rng.integers(0, 1 << n, size=1 << n))
    i0 = int(rng.integers(1 << m))
    s = int(rng.integers(1, 1 << n))
    periodic = make_oracle(n, [s], int(rng.integers(1 << 31)))
    F = []
    for i in range(1 << m):
        h = periodic.truth_table if i == i0 else tuple(int(v) for v in rng.permutation(1 << n))
        F.append(tuple(a ^ b for a, b in zip(h, g)))
    return PolyQ2Config(m, n, c, tuple(F), g, i0, s, seed)


def promise_check(cfg: PolyQ2Config) -> float:
    """Largest ``Pr_x[h_i(x xor a) = h_i(x)]`` over ``i != i0`` and ``a`` outside ``{0, s}``."""
    n = cfg.n
    best = 0.0
    idx = np.arange(1 << n)
    for i in range(1 << cfg.m):
        if i == cfg.i0:
            continue
        h = np.asarray(cfg.shifted(i))
        for a in range(1, 1 << n):
            if a != cfg.s:
                best = max(best, float(np.mean(h == h[idx ^ a])))
    return best


def rank_deficiency_probability(dist: dict[int, float], n: int, draws: int) -> float:
    """``Pr[dim span(u_1..u_draws) < n]`` for i.i.d. ``u`` drawn from ``dist``."""
    total = math.fsum(dist.values())
    dist = {u: q / total for u, q in dist.items()}
    states: dict[frozenset[int], float] = {frozenset({0}): 1.0}
    for _ in range(draws):
        nxt: dict[frozenset[int], float] = {}
        for sp, p in states.items():
            for u, q in dist.items():
                key = sp if u in sp else sp | {x ^ u for x in sp}
                nxt[key] = nxt.get(key, 0.0) + p * q
        states = nxt
    return 1.0 - math.fsum(p for sp, p in states.items() if len(sp) == 1 << n)


@dataclass(frozen=True)
class PolyQ2Result:
    i0_found: int
    r: int
    s_found: int | None
    success_probability: float
    engine: str
    false_periodic: float   # max over i != i0 of Pr[r = 1]
    bound: float
    promise: float


@dataclass
class PolyQ2Circuit:
    width: int
    index: Register
    flag: Register
    xs: list[list[int]]
    ys: list[Register]
    prepare: list[Gate]       # Hadamards and the queries to g
    query_f: list[Gate]
    hadamard_x: list[Gate]
    eliminate: list[Gate]     # U4, ALG3 elimination
    solve: list[Gate]         # U5
    rank_flag: list[Gate]
    oracle: list[Gate]
    diffuse: list[Gate]
    lay: LinsolveLayout

    def compute_half(self) -> list[Gate]:
        return self.query_f + self.hadamard_x + self.eliminate + self.solve + self.rank_flag

    def test(self, mode: str) -> list[Gate]:
        head = self.query_f + self.hadamard_x
        if mode == "literal":
            core = self.eliminate + self.solve + self.rank_flag + _gates_inverse(self.eliminate) + self.oracle
        else:
            fwd = self.eliminate + self.solve + self.rank_flag
            core = fwd + self.oracle + _gates_inverse(fwd)
        return head + core + _gates_inverse(head)


def polyq2_circuit(cfg: PolyQ2Config) -> PolyQ2Circuit:
    m, n, cn = cfg.m, cfg.n, cfg.blocks
    circ3, lay = build_alg3(cn, n)
    cb = CircuitBuilder()
    cb.width = circ3.width
    cb.registers = list(circ3.registers)
    index = cb.alloc("index", m)
    flag = cb.alloc("r", 1)
    ys = [cb.alloc(f"y_{j}", n) for j in range(cn)]
    xs = [[lay.cell(lay.data_row0 + j, h) for h in range(n)] for j in range(cn)]
    pool = list(cb.alloc("pool", max(pool_size(m + n), n - 1, m + 1)).qubits)

    def seg(fn) -> list[Gate]:
        start = len(cb.gates)
        fn()
        return list(cb.gates[start:])

    def prep() -> None:
        for row in xs:
            for q in row:
                cb.h(q)
        for q in index.qubits:
            cb.h(q)
        for row, y in zip(xs, ys):
            compile_table(cb, row, list(y.qubits), cfg.g, pool)

    def qf() -> None:
        table = [cfg.F[idx >> n][idx & ((1 << n) - 1)] for idx in range(1 << (m + n))]
        for row, y in zip(xs, ys):
            compile_table(cb, row + list(index.qubits), list(y.qubits), table, pool)

    def hx() -> None:
        for row in xs:
            for q in row:
                cb.h(q)

    def rflag() -> None:
        # r = OR of the free-column marks
        cb.x(flag[0])
        for q in lay.mark.qubits:
            cb.x(q)
        _mcx(cb, list(lay.mark.qubits), flag[0], pool)
        for q in lay.mark.qubits:
            cb.x(q)

    def orc() -> None:
        table = [int((idx & ((1 << m) - 1)) == cfg.i0 and idx >> m == 1) for idx in range(1 << (m + 1))]
        compile_phase(cb, list(index.qubits) + [flag[0]], table, pool)

    def diff() -> None:
        for q in index.qubits:
            cb.h(q)
        reflect_zero(cb, list(index.qubits), pool)
        for q in index.qubits:
            cb.h(q)

    prepare = seg(prep)
    query_f = seg(qf)
    hadamard_x = seg(hx)
    rank_flag = seg(rflag)
    oracle = seg(orc)
    diffuse = seg(diff)
    return PolyQ2Circuit(
        cb.width, index, flag, xs, ys, prepare, query_f, hadamard_x,
        list(circ3.gates[: lay.elimination_end]), _fixed_coefficient_solution(lay),
        rank_flag, oracle, diffuse, lay,
    )


def polyq2_entries(cfg: PolyQ2Config) -> int:
    return (1 << cfg.m) * (1 << (2 * cfg.n)) ** cfg.blocks


def _shift_oracle(cfg: PolyQ2Config, i: int) -> PeriodicOracle:
    return oracle_from_table(cfg.n, cfg.shifted(i), [cfg.s] if i == cfg.i0 else [])


def _false_periodic(cfg: PolyQ2Config) -> tuple[list[float], float]:
    probs = [
        rank_deficiency_probability(simon_marginal(_shift_oracle(cfg, i)), cfg.n, cfg.blocks)
        for i in range(1 << cfg.m)
    ]
    others = [p for i, p in enumerate(probs) if i != cfg.i0]
    return probs, max(others, default=0.0)


def _recover_shift(cfg: PolyQ2Config, i: int, seed: int) -> int | None:
    res = parallel_simon(_shift_oracle(cfg, i), cfg.blocks, SAMPLED, seed)
    if len(res.periods) != 1:
        return None
    return res.periods[0].bits


def alg_polyq2(cfg: PolyQ2Config, engine: str = "auto", max_entries: int = 1 << 18) -> PolyQ2Result:
    """Grover search for the index whose shifted function is periodic.

    ``gates`` simulates the whole circuit.  ``factored`` uses that the phase
    oracle only fires on ``i0``, whose Simon vectors always leave a free
    column, so the test acts as ``-1`` on ``i0`` and as the identity
    elsewhere; the amplitudes over the index then follow the plain Grover
    recursion and the readout of ``r`` uses the exact rank-deficiency
    probability of each index.  ``auto`` picks ``gates`` when it fits.
    """
    probs, false_p = _false_periodic(cfg)
    bound = false_period_bound(cfg.n, cfg.c)
    promise = promise_check(cfg)
    m = cfg.m
    if engine == "auto":
        engine = "gates" if polyq2_entries(cfg) <= max_entries else "factored"
    rng = np.random.default_rng([cfg.seed, 3])
    if engine == "gates":
        need = polyq2_entries(cfg)
        if need > max_entries:
            raise ResourceLimitError(f"index search needs about {need} entries, budget {max_entries}")
        pc = polyq2_circuit(cfg)
        state = ArrayState.from_sparse(init_basis(pc.width, 0))
        state = apply_gates_array(state, pc.prepare, max_entries)
        step = pc.test(cfg.classifier) + pc.diffuse
        for _ in range(cfg.resolved_iterations):
            state = apply_gates_array(state, step, max_entries)
        if cfg.classifier == "uncompute":
            state = apply_gates_array(state, pc.compute_half(), max_entries)
        marg = array_marginal(state, list(pc.index.qubits) + [pc.flag[0]])
    elif engine == "factored":
        if cfg.classifier != "uncompute":
            raise ValueError("the factored engine covers the uncomputing test only")
        if probs[cfg.i0] != 1.0:
            raise AssertionError("the planted index must always leave a free column")
        amps = np.full(1 << m, 2.0 ** (-m / 2))
        for _ in range(cfg.resolved_iterations):
            amps[cfg.i0] *= -1
            amps = 2 * amps.mean() - amps
        marg = {}
        for i, a in enumerate(amps):
            w = float(a * a)
            marg[i | (1 << m)] = w * probs[i]
            marg[i] = w * (1 - probs[i])
        marg = {k: v for k, v in sorted(marg.items()) if v > 0}
    else:
        raise ValueError(f"unknown engine {engine!r}")
    success = marg.get(cfg.i0 | (1 << m), 0.0)
    outcomes = sorted(marg)
    p = np.array([marg[o] for o in outcomes])
    pick = outcomes[int(rng.choice(len(outcomes), p=p / p.sum()))]
    i_found, r = pick & ((1 << m) - 1), pick >> m
    s_found = _recover_shift(cfg, i_found, cfg.seed) if r == 1 else None
    return PolyQ2Result(i_found, r, s_found, success, engine, false_p, bound, promise)


def check_test_restoration(cfg: PolyQ2Config, branches: Iterable[int] | None = None, seed: int = 0, samples: int = 256) -> bool:
    """Per-branch check that the permutation core of the test keeps every
    Simon register and the index bit-identical and clears all work qubits.

    Branches are basis states ``(u rows, labels, index)``; by default every
    branch is enumerated when that is cheap, otherwise ``samples`` random ones.
    """
    pc = polyq2_circuit(cfg)
    fwd = pc.eliminate + pc.solve + pc.rank_flag
    half = Circuit(pc.width, tuple(fwd))
    full = Circuit(pc.width, tuple(fwd + _gates_inverse(fwd)))
    keep = [q for row in pc.xs for q in row] + [q for y in pc.ys for q in y.qubits] + list(pc.index.qubits)
    keep_mask = sum(1 << q for q in keep)
    if branches is None:
        bits = len(keep)
        if bits <= 14:
            branch_vals = range(1 << bits)
        else:
            rng = np.random.default_rng(seed)
            branch_vals = [int.from_bytes(rng.bytes((bits + 7) // 8), "little") & ((1 << bits) - 1) for _ in range(samples)]
        branches = []
        for v in branch_vals:
            key = 0
            for i, q in enumerate(keep):
                key |= ((v >> i) & 1) << q
            branches.append(key)
    for key in branches:
        mid = classical_eval(half, key)
        if mid & keep_mask != key & keep_mask:
            return False
        if classical_eval(full, key) != key:
            return False
    return True
