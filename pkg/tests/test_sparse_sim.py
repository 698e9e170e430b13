import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_run
from qlinsys.circuit_ir import ARITY, Circuit, CircuitBuilder, Gate, GateKind
from qlinsys.sparse_sim import (
    ArrayState,
    NotPermutationError,
    ResourceLimitError,
    apply_circuit,
    apply_gates,
    apply_gates_array,
    array_marginal,
    classical_eval,
    exact_marginal,
    init_basis,
    measure_register,
)


def random_gates(rng, width, length, kinds=tuple(GateKind)):
    kinds = [k for k in kinds if ARITY[k] <= width]
    return [Gate(k, rng.sample(range(width), ARITY[k])) for k in (rng.choice(kinds) for _ in range(length))]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 8))
def test_sparse_matches_dense(seed, width):
    rng = random.Random(seed)
    gates = random_gates(rng, width, 40)
    start = rng.randrange(1 << width)
    sparse = apply_gates(init_basis(width, start), gates).to_dense()
    assert np.max(np.abs(sparse - dense_run(width, gates, start))) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_array_backend_matches_dict_backend(seed):
    rng = random.Random(seed)
    width = rng.choice([6, 70, 140])
    gates = random_gates(rng, width, 60)
    s = init_basis(width, rng.getrandbits(width))
    a = apply_gates_array(ArrayState.from_sparse(s), gates).to_sparse()
    b = apply_gates(s, gates)
    keys = set(a.amps) | set(b.amps)
    assert max(abs(a.amps.get(k, 0) - b.amps.get(k, 0)) for k in keys) < 1e-12
    reg = rng.sample(range(width), 3)
    ma, mb = array_marginal(ArrayState.from_sparse(b), reg), exact_marginal(b, reg)
    assert set(ma) == set(mb) and all(abs(ma[k] - mb[k]) < 1e-12 for k in ma)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_norm_is_preserved(seed):
    rng = random.Random(seed)
    s = apply_gates(init_basis(6, 0), random_gates(rng, 6, 50))
    assert abs(s.norm() - 1) < 1e-12


def test_hadamard_pair_cancels_exactly():
    s = apply_gates(init_basis(2, 0), [Gate(GateKind.H, (0,)), Gate(GateKind.H, (0,))])
    assert s.amps == {0: pytest.approx(1)}
    assert len(s) == 1


def test_bell_state_marginals_and_measurement():
    cb = CircuitBuilder()
    q = cb.alloc("q", 2)
    cb.h(q[0])
    cb.cnot(q[0], q[1])
    s = apply_circuit(init_basis(2, 0), cb.build())
    m = exact_marginal(s, [0, 1])
    assert m == {0: pytest.approx(0.5), 3: pytest.approx(0.5)}
    out = measure_register(s, [0], 7)
    assert out.probability == pytest.approx(0.5)
    assert set(out.post_state.amps) == {out.bits * 3}
    assert abs(out.post_state.norm() - 1) < 1e-12
    again = measure_register(s, [0], 7)
    assert again.bits == out.bits


def test_measurement_frequencies_follow_the_marginal():
    s = apply_gates(init_basis(2, 0), [Gate(GateKind.H, (0,)), Gate(GateKind.H, (1,))])
    rng = np.random.default_rng(1)
    counts = np.zeros(4)
    for _ in range(4000):
        counts[measure_register(s, [0, 1], rng).bits] += 1
    # 3 sigma on each cell of a uniform 4-way split
    assert np.all(np.abs(counts - 1000) < 3 * np.sqrt(4000 * 0.25 * 0.75))


def test_init_basis_forms():
    assert init_basis(3, "110").amps == {0b011: 1}
    assert init_basis(3, [0, 0, 1]).amps == {0b100: 1}
    with pytest.raises(ValueError):
        init_basis(2, 4)
    with pytest.raises(ValueError):
        init_basis(2, "1")


def test_dump_is_deterministic_and_ordered():
    s = apply_gates(init_basis(2, 0), [Gate(GateKind.H, (1,))])
    rows = json.loads(s.dump())
    assert [r["bits"] for r in rows] == ["00", "01"]
    assert s.dump() == s.copy().dump()


def test_resource_limit():
    gates = [Gate(GateKind.H, (i,)) for i in range(6)]
    with pytest.raises(ResourceLimitError):
        apply_gates(init_basis(6, 0), gates, max_entries=10)
    with pytest.raises(ResourceLimitError):
        apply_gates_array(ArrayState.from_sparse(init_basis(6, 0)), gates, max_entries=10)


def test_width_mismatch_rejected():
    with pytest.raises(ValueError):
        apply_circuit(init_basis(2, 0), Circuit(3))
    with pytest.raises(ValueError):
        apply_gates(init_basis(2, 0), [Gate(GateKind.X, (2,))])


def test_classical_eval_agrees_with_simulation():
    rng = random.Random(5)
    perm = (GateKind.X, GateKind.CNOT, GateKind.TOFFOLI, GateKind.FREDKIN)
    for _ in range(50):
        gates = random_gates(rng, 7, 30, perm)
        x = rng.randrange(128)
        assert apply_gates(init_basis(7, x), gates).amps == {classical_eval(Circuit(7, gates), x): 1}
    with pytest.raises(NotPermutationError):
        classical_eval(Circuit(1, [Gate(GateKind.H, (0,))]), 0)
