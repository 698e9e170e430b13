import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_rank, brute_solutions
from qlinsys.gf2_oracle import (
    DimensionError,
    Gf2Matrix,
    Gf2Vector,
    InconsistentSystemError,
    enumerate_solutions,
    format_system,
    gauss_jordan,
    is_consistent,
    parse_system,
    random_system,
    rank,
    span,
)


@st.composite
def systems(draw, max_m=5, max_n=5):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(1, max_n))
    rows = [draw(st.integers(0, (1 << n) - 1)) for _ in range(m)]
    b = draw(st.integers(0, (1 << m) - 1))
    return Gf2Matrix(m, n, tuple(rows)), Gf2Vector(m, b)


def test_vector_roundtrip_and_ops():
    v = Gf2Vector.from_string("1011")
    assert v.to_list() == [1, 0, 1, 1]
    assert v.bits == 0b1101
    assert v.weight() == 3
    w = Gf2Vector.from_list([1, 1, 0, 0])
    assert (v ^ w).to_string() == "0111"
    assert v.dot(w) == 1
    with pytest.raises(DimensionError):
        v ^ Gf2Vector(3)
    with pytest.raises(ValueError):
        Gf2Vector.from_list([0, 2])


def test_matrix_access_and_matvec():
    A = Gf2Matrix.from_rows([[1, 0, 1], [0, 1, 1]])
    assert A[0, 2] == 1 and A[1, 0] == 0
    assert A.column(2).to_list() == [1, 1]
    assert A.matvec(Gf2Vector.from_list([1, 1, 0])).to_list() == [1, 1]
    assert np.array_equal(Gf2Matrix.from_array(A.to_array()).to_array(), A.to_array())
    assert Gf2Matrix.identity(3).to_rows() == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    with pytest.raises(DimensionError):
        A.matvec(Gf2Vector(2))
    with pytest.raises(ValueError):
        Gf2Matrix.from_rows([[1, 0], [1]])


def test_identity_and_zero_examples():
    gs = gauss_jordan(Gf2Matrix.identity(3), Gf2Vector.from_list([1, 0, 1]))
    assert gs.rank == 3 and gs.special.to_list() == [1, 0, 1] and gs.kernel_basis == ()
    gs = gauss_jordan(Gf2Matrix.zeros(2, 3), Gf2Vector(2))
    assert gs.rank == 0 and gs.nullity == 3
    assert not is_consistent(Gf2Matrix.zeros(2, 2), Gf2Vector.from_list([1, 0]))


def test_inconsistent_system_reports_and_refuses_enumeration():
    A = Gf2Matrix.from_rows([[1, 1], [1, 1]])
    gs = gauss_jordan(A, Gf2Vector.from_list([0, 1]))
    assert not gs.consistent and gs.special is None
    with pytest.raises(InconsistentSystemError):
        list(enumerate_solutions(gs))


def test_exhaustive_small_shapes_against_brute_force():
    for m, n in itertools.product(range(1, 3), range(1, 4)):
        for rows in itertools.product(range(1 << n), repeat=m):
            for bb in range(1 << m):
                A = Gf2Matrix(m, n, rows)
                b = Gf2Vector(m, bb)
                gs = gauss_jordan(A, b)
                want = brute_solutions(list(rows), [(bb >> i) & 1 for i in range(m)], n)
                got = set(v.bits for v in enumerate_solutions(gs)) if gs.consistent else set()
                assert got == want
                assert gs.rank == brute_rank(list(rows), n)


@settings(max_examples=300, deadline=None)
@given(systems())
def test_solution_set_is_special_plus_kernel(sys_):
    A, b = sys_
    gs = gauss_jordan(A, b)
    assert gs.rank == rank(A)
    if not gs.consistent:
        assert rank(A.augment(b)) == gs.rank + 1
        return
    assert gs.rank + gs.nullity == A.cols
    assert A.matvec(gs.special) == b
    for eta in gs.kernel_basis:
        assert A.matvec(eta).bits == 0
    assert len(span(gs.kernel_basis, A.cols)) == 1 << gs.nullity
    sols = [v.bits for v in enumerate_solutions(gs)]
    assert len(set(sols)) == 1 << gs.nullity


@settings(max_examples=100, deadline=None)
@given(systems())
def test_format_parse_roundtrip(sys_):
    A, b = sys_
    A2, b2 = parse_system(format_system(A, b))
    assert A2 == A and b2 == b


@pytest.mark.parametrize(
    "text, needle",
    [
        ("", "line 1"),
        ("2\n11\n", "line 1"),
        ("2 2\n11\n", "expected 2 matrix rows"),
        ("2 2\n11\n1x\n", "row 2"),
        ("2 2\n11\n10\n011\n", "vector line"),
        ("1 2\n11\n1\nextra\n", "trailing"),
    ],
)
def test_parse_errors_point_at_the_problem(text, needle):
    with pytest.raises(ValueError, match=needle):
        parse_system(text)


def test_parse_skips_comments_and_optional_vector():
    A, b = parse_system("# header\n2 3\n101\n# note\n011\n")
    assert b is None and A.to_rows() == [[1, 0, 1], [0, 1, 1]]


def test_random_system_is_deterministic():
    assert random_system(3, 4, 7) == random_system(3, 4, 7)
    with pytest.raises(ValueError):
        random_system(0, 2, 1)
