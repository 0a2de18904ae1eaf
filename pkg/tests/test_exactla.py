from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcslab.exactla import bareiss_det, bareiss_rank, matvec, solve, solve_sparse

sympy = pytest.importorskip("sympy")

entries = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def matrices(max_rows=5, max_cols=5):
    return st.integers(1, max_rows).flatmap(
        lambda r: st.integers(1, max_cols).flatmap(
            lambda c: st.lists(st.lists(entries, min_size=c, max_size=c), min_size=r, max_size=r)))


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_rank_matches_sympy(rows):
    assert bareiss_rank(rows) == sympy.Matrix(rows).rank()


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.lists(st.lists(entries, min_size=n, max_size=n), min_size=n, max_size=n)))
def test_det_matches_sympy(rows):
    assert bareiss_det(rows) == Fraction(str(sympy.Matrix(rows).det()))


@settings(max_examples=60, deadline=None)
@given(matrices(), st.data())
def test_solve_consistent_systems(rows, data):
    x = data.draw(st.lists(entries, min_size=len(rows[0]), max_size=len(rows[0])))
    b = matvec([[Fraction(v) for v in r] for r in rows], x)
    sol = solve(rows, b)
    assert sol is not None
    assert matvec([[Fraction(v) for v in r] for r in rows], sol) == b


def test_solve_inconsistent():
    assert solve([[1, 1], [2, 2]], [1, 3]) is None


def test_rank_edge_cases():
    assert bareiss_rank([[0, 0], [0, 0]]) == 0
    assert bareiss_rank([[1, 2, 3], [2, 4, 6], [1, 0, 1]]) == 2
    assert bareiss_det([[0, 1], [1, 0]]) == -1
    assert bareiss_det([[Fraction(1, 2), 0], [0, Fraction(2, 3)]]) == Fraction(1, 3)


def test_det_rejects_non_square():
    with pytest.raises(ValueError):
        bareiss_det([[1, 2, 3], [4, 5, 6]])


def test_solve_sparse_blocks():
    # two independent blocks plus a homogeneous block
    eqs = [{"a": 1, "b": 1}, {"a": 1, "b": -1}, {"c": 2}, {"d": 1, "e": 1}]
    sol = solve_sparse(eqs, [Fraction(3), Fraction(1), Fraction(4), Fraction(0)])
    assert sol == {"a": 2, "b": 1, "c": 2}


def test_solve_sparse_inconsistent():
    assert solve_sparse([{"a": 1}, {"a": 1}], [Fraction(1), Fraction(2)]) is None
    assert solve_sparse([{}], [Fraction(1)]) is None
