import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from lcslab.coeffalg import CoeffFn, ExpScalar, as_fraction, eval_numeric

from conftest import Z, ez

E_MINUS_1 = ExpScalar([(-1, 0), (1, 1)])


# -- ExpScalar -------------------------------------------------------------


def test_expscalar_canonical_terms():
    s = ExpScalar([(1, 1), (-1, 0), (0, 5), (2, 1), (-2, 1)])
    assert s.terms == ((Fraction(-1), Fraction(0)), (Fraction(1), Fraction(1)))
    assert s == E_MINUS_1
    assert ExpScalar(s.terms.__iter__()) == s  # idempotent
    assert hash(s) == hash(E_MINUS_1)


def test_expscalar_float():
    assert abs(float(E_MINUS_1) - 1.7182818284590452) <= 1e-15
    assert eval_numeric(E_MINUS_1) == float(E_MINUS_1)


def test_expscalar_arithmetic():
    e = ExpScalar.exp(1)
    assert e * e.inverse() == 1
    assert (e - 1) * (e + 1) == ExpScalar([(1, 2), (-1, 0)])
    assert ExpScalar.exp(Fraction(1, 2)) * ExpScalar.exp(Fraction(1, 2)) == e
    with pytest.raises(ZeroDivisionError):
        E_MINUS_1.inverse()
    assert str(E_MINUS_1) == "-1 + e"


def test_as_fraction_rejects_floats():
    with pytest.raises(TypeError):
        as_fraction(0.5)
    assert as_fraction("3/4") == Fraction(3, 4)
    assert as_fraction("0.25") == Fraction(1, 4)


# -- ring operations ---------------------------------------------------------------


def test_ring_examples():
    n = 4
    assert ez(1) * ez(-1) == CoeffFn.constant(n, 1)
    assert ez() + ez() == ez() * 2
    one_plus_z = CoeffFn.constant(n, 1) + CoeffFn.coordinate(n, Z)
    assert one_plus_z * CoeffFn.constant(n, 1) == one_plus_z


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        CoeffFn.constant(2, 1) + CoeffFn.constant(3, 1)
    with pytest.raises(ValueError):
        CoeffFn.constant(2, 1) * CoeffFn.constant(3, 1)


# -- derive --------------------------------------------------------------------


def test_derive_examples():
    z = CoeffFn.coordinate(4, Z)
    assert ez().derive(Z) == ez()
    assert (z * ez()).derive(Z) == ez() + z * ez()
    assert CoeffFn.coordinate(4, 1).derive(0).is_zero()


def test_derive_axis_range():
    with pytest.raises((IndexError, ValueError)):
        ez().derive(4)


# -- integrate_box -----------------------------------------------------------------


def test_integrate_examples():
    assert ez().integrate_box() == E_MINUS_1
    assert CoeffFn.constant(4, 1).integrate_box() == 1
    z = CoeffFn.coordinate(1, 0)
    val = (z * CoeffFn.exp_linear(1, [1])).integrate_box()
    assert val == 1
    ref, _ = integrate.quad(lambda t: t * math.exp(t), 0, 1, epsabs=1e-14)
    assert abs(float(val) - ref) < 1e-12


slopes = st.fractions(min_value=-3, max_value=3, max_denominator=2)


def coeff_fns(n, max_terms=3, max_degree=4):
    term = st.tuples(
        st.fractions(min_value=-3, max_value=3, max_denominator=3),
        st.lists(st.integers(0, max_degree), min_size=n, max_size=n).filter(lambda p: sum(p) <= max_degree),
        st.lists(slopes, min_size=n, max_size=n),
    )
    return st.lists(term, min_size=0, max_size=max_terms).map(lambda ts: CoeffFn(n, ts))


@settings(max_examples=40, deadline=None)
@given(coeff_fns(2))
def test_integrate_matches_quadrature(f):
    exact = float(f.integrate_box())
    ref, _ = integrate.dblquad(lambda y, x: f.evaluate(np.array([x, y])), 0, 1, 0, 1, epsabs=1e-13, epsrel=1e-13)
    assert abs(exact - ref) < 1e-10


# -- pullback -------------------------------------------------------------------


def test_pullback_examples():
    n = 4
    I = [[int(i == j) for j in range(n)] for i in range(n)]
    shifted = ez().pullback_affine(I, [0, 0, 1, 0])
    assert shifted == ez() * ExpScalar.exp(1)
    assert shifted.coefficient((0, 0, 0, 0), (0, 0, 1, 0)) == ExpScalar([(1, 1)])
    shear = [[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    x = CoeffFn.coordinate(n, 0)
    assert x.pullback_affine(shear, [0, 0, 0, 1]) == x + CoeffFn.coordinate(n, 1)


def test_pullback_exponential_rule():
    A = [[2, 1], [0, 1]]
    b = [Fraction(1, 2), -1]
    k = [Fraction(1), Fraction(-1, 3)]
    f = CoeffFn.exp_linear(2, k)
    # e^{<k,b>} e^{<A^T k, x>}
    kb = sum(ki * bi for ki, bi in zip(k, b))
    Atk = [sum(A[i][j] * k[i] for i in range(2)) for j in range(2)]
    assert f.pullback_affine(A, b) == CoeffFn.exp_linear(2, Atk, ExpScalar.exp(kb))


def test_pullback_singular():
    with pytest.raises(ValueError):
        ez().pullback_affine([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, 1]], [0, 0, 0, 0])


def test_eval_numeric_examples():
    z = CoeffFn.coordinate(4, Z)
    assert eval_numeric(ez(), [0, 0, 0, 0]) == 1.0
    assert abs(eval_numeric(z * ez(), [0, 0, 1, 0]) - math.e) < 1e-15
    pts = np.random.default_rng(1).random((5, 4))
    assert np.allclose((z * ez())(pts), pts[:, Z] * np.exp(pts[:, Z]), rtol=1e-15)


def test_degree_and_constants():
    z = CoeffFn.coordinate(4, Z)
    assert (z * z + 1).degree() == 2
    assert CoeffFn.constant(4, 3).constant_value() == 3
    assert ez().is_unit() and not (ez() + 1).is_unit()
    assert (ez(1) * 3).inverse() == ez(-1) * Fraction(1, 3)
