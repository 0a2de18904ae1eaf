from fractions import Fraction

import numpy as np
import pytest

from lcslab.coeffalg import CoeffFn, ExpScalar
from lcslab.forms import Form, VectorField, ext_d, interior, twisted_d
from lcslab.lcs import (
    DegenerateFormError,
    LcsStructure,
    NonUnitPfaffianError,
    SampledField,
    certify_nondegenerate,
    conformal_factor,
    conformal_map,
    descent_check,
    hamiltonian_field,
    integrate_top,
    is_strict_lcs,
    rescale,
    sharp,
    validate,
    volume_form,
)

from conftest import W, X, Y, Z, box_model, d_, dx, ez, kt, kt_generators, kt_Omega, standard

n = 4


def test_validate_corrected_pair(KT):
    rep = validate(KT.Omega, KT.omega)
    assert rep.passed and rep.verdict == "pass"
    assert rep.closedness_residual.is_zero() and rep.structure_residual.is_zero()


def test_validate_literal_pair(KT_literal):
    rep = KT_literal.report()
    assert rep.verdict == "fail"
    assert rep.structure_residual == Form(n, 3, {(Z, X, Y): ez() * 2})


def test_validate_symplectic():
    assert standard().is_valid()


def test_validate_wrong_degrees():
    with pytest.raises(ValueError):
        validate(dx(X), dx(Y))


def test_volume_examples(KT):
    assert volume_form(KT) == Form(n, 4, {(X, Y, W, Z): ez()})
    assert volume_form(standard()) == Form(n, 4, {(X, Y, Z, W): 1})
    L = LcsStructure(Form(n, 2, {(X, Y): ez(-1), (W, Z): ez(-1)}), dx(Z))
    assert volume_form(L) == Form(n, 4, {(X, Y, W, Z): ez(-2)})


def test_volume_degenerate():
    L = LcsStructure(Form(n, 2, {(X, Y): 1}), Form.zero(n, 1))
    with pytest.raises(DegenerateFormError):
        volume_form(L)


def test_sharp_examples(KT):
    assert sharp(KT, dx(Z, coeff=-1)) == d_(W, coeff=-1)
    assert sharp(KT, Form(n, 1, {(Y,): ez()})) == d_(X)
    assert sharp(KT, Form.zero(n, 1)).is_zero()


def test_sharp_numeric_fallback():
    # Pfaffian 1 + x^2 is not a unit: auto mode samples, symbolic mode refuses
    Omega = Form(n, 2, {(X, Y): CoeffFn.constant(n, 1) + CoeffFn.coordinate(n, X) ** 2, (Z, W): 1})
    L = LcsStructure(Omega, Form.zero(n, 1))
    alpha = dx(Y)
    with pytest.raises(NonUnitPfaffianError):
        sharp(L, alpha, mode="symbolic")
    field = sharp(L, alpha)
    assert isinstance(field, SampledField)
    for x, v in zip(field.points, field.values):
        expected = np.array([1.0 / (1.0 + x[0] ** 2), 0.0, 0.0, 0.0])
        assert np.allclose(v, expected, atol=1e-14)


def test_hamiltonian_field_examples(KT):
    assert hamiltonian_field(KT, CoeffFn.constant(n, 1)) == d_(W, coeff=-1)
    assert hamiltonian_field(KT, CoeffFn.zero(n)).is_zero()


def test_hamiltonian_field_symplectic_oracle():
    # independent oracle: pointwise 4x4 solve of M^T X = dH
    L = standard()
    H = CoeffFn(n, [(1, [2, 0, 0, 1], [0, 0, 0, 0]), (Fraction(1, 2), [0, 1, 0, 0], [1, 0, -1, 0])])
    Xh = hamiltonian_field(L, H)
    M = np.zeros((4, 4))
    M[0, 1], M[1, 0], M[2, 3], M[3, 2] = 1, -1, 1, -1
    pts = np.random.default_rng(3).random((6, 4))
    grads = np.stack([H.derive(i)(pts) for i in range(4)], axis=1)
    for x, g, got in zip(pts, grads, Xh(pts)):
        # (i_X Omega)_j = sum_i X_i M_ij
        assert np.allclose(np.linalg.solve(M.T, g), got, atol=1e-13)
    assert interior(Xh, L.Omega) == ext_d(Form.function(H))


def test_is_strict_examples(KT):
    assert is_strict_lcs(KT, d_(X)).holds
    assert is_strict_lcs(KT, d_(W, coeff=-1)).holds
    check = is_strict_lcs(KT, d_(Z))
    assert not check.holds and not check.witness.is_zero()


def test_conformal_factor_examples(KT):
    assert conformal_factor(KT, d_(X)) == CoeffFn.zero(n)
    assert conformal_factor(KT, d_(Z)) is None
    assert conformal_factor(KT, VectorField.zero(n)) == CoeffFn.zero(n)


def test_rescale_examples():
    L = box_model()
    Lh = rescale(L)
    assert Lh.Omega == Form(n, 2, {(X, Y): 1, (W, Z): 1})
    assert ext_d(Lh.Omega).is_zero()
    L0 = standard()
    assert rescale(L0, CoeffFn.zero(n)).Omega == L0.Omega


def test_rescale_intertwines(BOX):
    h = BOX.potential
    alpha = Form(n, 2, {(X, W): CoeffFn.coordinate(n, Y) * ez(), (Y, Z): 3})
    assert ext_d(conformal_map(h, alpha)) == conformal_map(h, twisted_d(alpha, BOX.omega))


def test_rescale_rejects_wrong_potential(KT):
    with pytest.raises(ValueError):
        rescale(KT, CoeffFn.coordinate(n, Z))
    with pytest.raises(ValueError):
        rescale(box_model(), CoeffFn.coordinate(n, Z) ** 2)


def test_descent_examples(KT):
    res = descent_check(KT.Omega, kt_generators())
    assert [r.classification for r in res] == ["invariant", "invariant", "fails", "invariant"]
    assert res[3].factor == ExpScalar.rational(1)
    assert res[2].residual == Form(n, 2, {(X, Y): ez() * (ExpScalar.exp(1) - 1)})
    assert all(r.classification == "invariant" for r in descent_check(KT.omega, kt_generators()))


def test_descent_conformal():
    a = Form(n, 1, {(X,): ez()})
    (r,) = descent_check(a, [kt_generators()[2]])
    assert r.classification == "conformal" and r.factor == ExpScalar.exp(1)


def test_certify_nondegenerate(KT):
    ok, how = certify_nondegenerate(KT)
    assert ok and "unit" in how


def test_integrate_top(KT):
    assert integrate_top(KT, CoeffFn.constant(n, 1)) == ExpScalar([(-1, 0), (1, 1)])
    assert integrate_top(KT, CoeffFn.coordinate(n, Z)) == 1


def test_structure_requires_even_dimension():
    with pytest.raises(ValueError):
        LcsStructure(Form(3, 2, {(0, 1): 1}), Form.zero(3, 1))
