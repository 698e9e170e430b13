import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_subspace_bases
from qlinsys.circuit_ir import CircuitBuilder
from qlinsys.simon_apps import (
    COHERENT,
    SAMPLED,
    GroverSimonConfig,
    PolyQ2Config,
    _anf,
    alg_polyq2,
    check_test_restoration,
    classifier_soundness,
    compile_phase,
    compile_table,
    default_ell,
    default_pairs,
    epsilon_f,
    false_period_bound,
    grover_iterations,
    grover_meets_simon,
    independence_probability,
    independence_probability_exact,
    make_fx,
    make_oracle,
    make_polyq2,
    oracle_from_table,
    pair_test_table,
    parallel_simon,
    pool_size,
    promise_check,
    rank_deficiency_probability,
    recovery_threshold,
    reflect_zero,
    sample_simon,
    simon_marginal,
    theorem4_bound,
    with_collision,
)
from qlinsys.sparse_sim import ResourceLimitError, apply_gates, classical_eval, init_basis


def dot(a, b):
    return bin(a & b).count("1") & 1


# ------------------------------------------------------------ oracles

def test_single_period_oracle_is_two_to_one():
    o = make_oracle(2, ["11"], seed=1)
    assert o(0b00) == o(0b11) and o(0b01) == o(0b10) and o(0) != o(1)
    assert epsilon_f(o) == 0


def test_two_periods_give_four_to_one():
    o = make_oracle(3, ["110", "011"], seed=2)
    values = list(o.truth_table)
    assert sorted(values.count(v) for v in set(values)) == [4, 4]


def test_epsilon_values():
    assert epsilon_f(oracle_from_table(2, [3, 3, 3, 3])) == 1
    # an injective table with one merged pair collides on exactly 2 of 8 inputs
    assert epsilon_f(with_collision(make_oracle(3, [], seed=0), seed=0)) == 2 / 8
    o = with_collision(make_oracle(3, ["101"], seed=0), seed=0)
    # brute force the same quantity directly
    tt, sp = o.truth_table, o.period_span()
    direct = max(sum(tt[x] == tt[x ^ a] for x in range(8)) / 8 for a in range(1, 8) if a not in sp)
    assert epsilon_f(o) == direct


def test_oracle_contracts():
    with pytest.raises(ValueError):
        make_oracle(3, ["110", "011", "101"], seed=0)
    with pytest.raises(ValueError):
        oracle_from_table(2, [0, 1, 2, 3], ["11"])
    with pytest.raises(ResourceLimitError):
        epsilon_f(make_oracle(13, [], seed=0))


def test_make_oracle_is_deterministic():
    assert make_oracle(4, ["1001"], 7) == make_oracle(4, ["1001"], 7)


# ------------------------------------------------------------ compilation

@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10**9))
def test_compiled_table_matches_truth_table(nbits, seed):
    rng = np.random.default_rng(seed)
    table = rng.integers(0, 1 << nbits, size=1 << nbits).tolist()
    cb = CircuitBuilder()
    x, y = cb.alloc("x", nbits), cb.alloc("y", nbits)
    pool = cb.alloc("pool", pool_size(nbits))
    compile_table(cb, list(x.qubits), list(y.qubits), table, list(pool.qubits))
    c = cb.build()
    for v in range(1 << nbits):
        assert classical_eval(c, v) == v | (table[v] << nbits)


def test_anf_of_and():
    assert _anf([0, 0, 0, 1], 2) == [0, 0, 0, 1]
    assert _anf([1, 1, 1, 1], 2) == [1, 0, 0, 0]


@pytest.mark.parametrize("nbits", [1, 2, 3])
def test_phase_and_reflection(nbits):
    rng = np.random.default_rng(nbits)
    pred = rng.integers(0, 2, size=1 << nbits).tolist()
    cb = CircuitBuilder()
    x = cb.alloc("x", nbits)
    pool = cb.alloc("pool", pool_size(nbits))
    compile_phase(cb, list(x.qubits), pred, list(pool.qubits))
    ph = cb.build()
    cb = CircuitBuilder()
    x = cb.alloc("x", nbits)
    pool = cb.alloc("pool", pool_size(nbits))
    reflect_zero(cb, list(x.qubits), list(pool.qubits))
    rf = cb.build()
    for v in range(1 << nbits):
        a = apply_gates(init_basis(ph.width, v), ph.gates).amps
        # constant monomial dropped: signs agree up to one global factor
        ref = (-1) ** (pred[v] ^ pred[0])
        assert a == {v: pytest.approx(ref)}
        b = apply_gates(init_basis(rf.width, v), rf.gates).amps
        assert b == {v: pytest.approx(-1 if v == 0 else 1)} or b == {v: pytest.approx(1 if v == 0 else -1)}


# ------------------------------------------------------------ Simon sampling

def test_simon_marginal_examples():
    assert simon_marginal(make_oracle(1, ["1"], 0)) == {0: pytest.approx(1)}
    m = simon_marginal(make_oracle(2, ["11"], 0))
    assert set(m) == {0b00, 0b11} and all(abs(p - 0.5) < 1e-12 for p in m.values())
    assert simon_marginal(make_oracle(2, ["10", "01"], 0)) == {0: pytest.approx(1)}


@pytest.mark.parametrize("n", [1, 2, 3])
def test_marginal_is_uniform_on_orthogonal_complement(n):
    for basis, sp in all_subspace_bases(n):
        marg = simon_marginal(make_oracle(n, basis, seed=len(basis)))
        perp = {y for y in range(1 << n) if all(dot(y, s) == 0 for s in sp)}
        want = 2.0 ** -(n - len(basis))
        assert set(marg) == perp
        assert all(abs(p - want) < 1e-10 for p in marg.values())


def test_samples_are_orthogonal_and_chi_square_passes():
    o = make_oracle(3, ["101"], seed=3)
    assert sample_simon(o, 0, seed=1) == []
    ys = sample_simon(o, 10_000, seed=1)
    assert all(dot(y.bits, 0b101) == 0 for y in ys)
    counts = np.bincount([y.bits for y in ys], minlength=8)
    cells = [y for y in range(8) if dot(y, 0b101) == 0]
    expected = 10_000 / len(cells)
    chi2 = sum((counts[y] - expected) ** 2 / expected for y in cells)
    df = len(cells) - 1
    assert chi2 < df + 3 * math.sqrt(2 * df)


def test_parallel_simon_single_period_rate():
    o = make_oracle(2, ["11"], seed=0)
    m = math.ceil(10.4 * 2)
    ok = sum(parallel_simon(o, m, SAMPLED, seed=t).success for t in range(500))
    assert ok / 500 >= 0.99


def test_parallel_simon_returns_kernel_of_rows():
    o = make_oracle(3, ["110", "011"], seed=4)
    res = parallel_simon(o, 12, SAMPLED, seed=5)
    for p in res.periods:
        assert all(dot(r.bits, p.bits) == 0 for r in res.rows)
    assert res.rank + len(res.periods) == 3


def test_coherent_mode_matches_branch_rows():
    o = make_oracle(2, ["11"], seed=0)
    for seed in range(4):
        res = parallel_simon(o, 3, COHERENT, seed=seed)
        # every measured branch solves a system of rows from {00, 11}
        assert res.recovered_span in (frozenset({0, 3}), frozenset(range(4)))
    with pytest.raises(ResourceLimitError):
        parallel_simon(make_oracle(3, [], 0), 4, COHERENT, max_entries=1000)
    with pytest.raises(ValueError):
        parallel_simon(o, 3, "bogus")


# ------------------------------------------------------------ bounds

def test_independence_probability():
    assert independence_probability(0) == 1
    assert independence_probability(1) == 0.5
    assert independence_probability(64) == pytest.approx(0.288788, abs=1e-6)
    exact = [independence_probability_exact(d) for d in range(120)]
    assert all(a > b for a, b in zip(exact, exact[1:]))
    assert exact[3] == Fraction(21, 64)


def test_recovery_bounds():
    assert theorem4_bound(3, 0.5, 0) == 0
    assert theorem4_bound(3, 0.5, 18) == pytest.approx(1 - 8 * 0.75**18)
    assert theorem4_bound(3, 0.5, 18) == pytest.approx(0.9548, abs=1e-4)
    assert recovery_threshold(5, 0.712) / 5 == pytest.approx(10.4167, abs=1e-4)
    with pytest.raises(ValueError):
        theorem4_bound(3, 1.0, 5)


def test_iteration_and_size_helpers():
    assert grover_iterations(2) == 2
    assert grover_iterations(4) == 4
    assert grover_iterations(1) == 1
    assert default_ell(2) == 7
    assert default_pairs(2, 2, 4) == 7
    assert classifier_soundness(2, 2, 4) == pytest.approx(1 - 2.0**-8)
    assert false_period_bound(2, 8) == pytest.approx(2**1.5 * 0.75**8)
    assert false_period_bound(2, 8) == pytest.approx(0.2832, abs=1e-4)


def test_rank_deficiency_probability():
    # uniform over F2^2, 2 draws: full rank with probability 3/4 * 1/2
    uni = {y: 0.25 for y in range(4)}
    assert rank_deficiency_probability(uni, 2, 2) == pytest.approx(1 - 3 / 8)
    assert rank_deficiency_probability({0: 0.5, 3: 0.5}, 2, 10) == pytest.approx(1)


# ------------------------------------------------------------ FX search

def test_fx_instance():
    fx = make_fx(2, 2, seed=3)
    for E in fx.E:
        assert sorted(E) == list(range(4))
    for x in range(4):
        assert fx.enc(x) == fx.E[fx.k0][x ^ fx.k1] ^ fx.k2
    assert fx.k1 != 0


def test_pair_table_marks_true_keys():
    fx = make_fx(2, 2, seed=5)
    t = pair_test_table(fx, [(0, 1), (2, 3)])
    assert t[fx.k0 | (fx.k1 << 2)] == 1


def test_grover_simon_norm_and_determinism():
    cfg = GroverSimonConfig(make_fx(1, 1, seed=0), ell=2, seed=0)
    a, b = grover_meets_simon(cfg), grover_meets_simon(cfg)
    assert a == b
    assert abs(a.norm - 1) < 1e-9


def test_grover_simon_smallest_instance_is_degenerate():
    # every permutation of F2 is affine, so the period check cannot separate
    # keys and the mass stays at one half
    masses = [grover_meets_simon(GroverSimonConfig(make_fx(1, 1, s), ell=2, iterations=1, seed=s)).key_probability
              for s in range(4)]
    assert all(m == pytest.approx(0.5, abs=1e-9) for m in masses)


def test_grover_simon_budget():
    with pytest.raises(ResourceLimitError):
        grover_meets_simon(GroverSimonConfig(make_fx(2, 2, 0), ell=4), max_entries=100)


def test_grover_simon_config_validation():
    fx = make_fx(1, 1, 0)
    with pytest.raises(ValueError):
        GroverSimonConfig(fx, ell=0)
    with pytest.raises(ValueError):
        GroverSimonConfig(fx, classifier="x")


# ------------------------------------------------------------ periodic index search

def test_polyq2_instance_promise():
    cfg = make_polyq2(1, 2, 8, seed=0)
    h = cfg.shifted(cfg.i0)
    assert all(h[x] == h[x ^ cfg.s] for x in range(4))
    assert 0 <= promise_check(cfg) <= 1
    same = PolyQ2Config(1, 2, 1, (cfg.g, cfg.g), cfg.g, 0, 1)
    assert promise_check(same) == 1


def test_polyq2_rejects_bad_config():
    cfg = make_polyq2(1, 2, 1, seed=0)
    wrong = next(a for a in range(1, 4) if a != cfg.s)
    with pytest.raises(ValueError):
        PolyQ2Config(1, 2, 1, cfg.F, cfg.g, cfg.i0, wrong)
    with pytest.raises(ValueError):
        PolyQ2Config(1, 2, 0, cfg.F, cfg.g, cfg.i0, cfg.s)


@pytest.mark.parametrize("c", [1, 2])
def test_polyq2_engines_agree(c):
    for seed in range(3):
        cfg = make_polyq2(1, 2, c, seed)
        g = alg_polyq2(cfg, "gates", max_entries=1 << 20)
        f = alg_polyq2(cfg, "factored")
        assert g.success_probability == pytest.approx(f.success_probability, abs=1e-9)


def test_polyq2_recovers_shift_when_flagged():
    for seed in range(10):
        cfg = make_polyq2(1, 2, 8, seed)
        res = alg_polyq2(cfg)
        assert res.bound == pytest.approx(0.2832, abs=1e-4)
        assert res.false_periodic <= res.bound
        if res.i0_found == cfg.i0 and res.r == 1:
            assert res.s_found == cfg.s


def test_polyq2_test_restores_registers():
    assert check_test_restoration(make_polyq2(1, 2, 1, 0))
    assert check_test_restoration(make_polyq2(1, 2, 8, 0), samples=32)
