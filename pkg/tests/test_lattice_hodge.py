import numpy as np
import pytest
from scipy.linalg import eigh

from lcslab import lattice_hodge as lh
from lcslab.coeffalg import CoeffFn
from lcslab.forms import Form

RNG = np.random.default_rng(2024)


def random_cochain(grid, p, rng=RNG):
    return lh.Cochain(grid, p, rng.standard_normal(grid.size(p)))


def test_grid_counts():
    g = lh.Grid(3, 4)
    assert [g.size(p) for p in range(4)] == [64, 192, 192, 64]
    with pytest.raises(ValueError):
        lh.Grid(2, 1)


def test_circulant_difference_n1():
    ops = lh.build_operators(lh.Grid(1, 2))
    assert np.array_equal(ops.d[0].toarray(), 2 * np.array([[-1, 1], [1, -1]]))


def test_constant_in_kernel():
    ops = lh.build_operators(lh.Grid(2, 5))
    c = lh.Cochain.constant(ops.grid, 0, [1.0])
    assert np.max(np.abs(ops.laplacian(0) @ c.values)) == 0.0


def test_twisted_p0_kernel_empty():
    ops = lh.build_operators(lh.Grid(2, 4), [0.0, 1.0])
    vals = eigh(ops.laplacian(0).toarray(), eigvals_only=True)
    assert vals.shape == (16,) and vals[0] > 1e-6


@pytest.mark.parametrize("n,N,omega", [(2, 5, [0.3, -1.0]), (3, 3, [1.0, 0.0, 2.0]), (4, 2, [0.5, 0.5, -0.5, 1.0])])
def test_d_squared_vanishes(n, N, omega):
    ops = lh.build_operators(lh.Grid(n, N), omega)
    for p in range(n - 1):
        assert abs(ops.d[p + 1] @ ops.d[p]).max() <= 1e-12


@pytest.mark.parametrize("omega", [[0.0, 0.0, 0.0], [1.0, -0.5, 2.0]])
def test_adjointness(omega):
    grid = lh.Grid(3, 4)
    ops = lh.build_operators(grid, omega)
    for p in range(3):
        a, b = random_cochain(grid, p), random_cochain(grid, p + 1)
        lhs = ops.apply_d(a).inner(b)
        rhs = a.inner(ops.apply_delta(b))
        assert abs(lhs - rhs) <= 1e-13 * max(1.0, abs(lhs))


def test_split_of_exact_form():
    grid = lh.Grid(2, 8)
    ops = lh.build_operators(grid, [0.0, 1.0])
    alpha = ops.apply_d(random_cochain(grid, 0))
    s = lh.hodge_split(ops, alpha)
    a, b, h = s.parts(ops)
    assert s.converged
    assert h.norm() < 1e-8 * alpha.norm()
    assert b.norm() < 1e-8 * alpha.norm()
    assert (alpha - a - b - h).norm() < 1e-8 * alpha.norm()


def test_split_of_constant_harmonic():
    grid = lh.Grid(2, 8)
    ops = lh.build_operators(grid)
    alpha = lh.Cochain.constant(grid, 1, [1.0, 0.0])
    a, b, h = lh.hodge_split(ops, alpha).parts(ops)
    assert (h - alpha).norm() < 1e-12
    assert a.norm() < 1e-12 and b.norm() < 1e-12


def test_split_of_zero():
    grid = lh.Grid(2, 4)
    ops = lh.build_operators(grid)
    a, b, h = lh.hodge_split(ops, lh.Cochain.zeros(grid, 1)).parts(ops)
    assert a.norm() == b.norm() == h.norm() == 0.0


@pytest.mark.parametrize("n,N,omega,p", [(2, 6, [0.0, 0.0], 1), (3, 4, [0.0, 1.0, 0.0], 1), (3, 4, [0.5, 0.0, 0.0], 2)])
def test_split_contracts(n, N, omega, p):
    grid = lh.Grid(n, N)
    ops = lh.build_operators(grid, omega)
    rng = np.random.default_rng(7)
    for _ in range(5):
        alpha = random_cochain(grid, p, rng)
        split = lh.hodge_split(ops, alpha)
        a, b, h = split.parts(ops)
        norm2 = alpha.norm() ** 2
        assert split.converged
        assert (alpha - a - b - h).norm() < 1e-8 * alpha.norm()
        assert max(abs(a.inner(b)), abs(a.inner(h)), abs(b.inner(h))) < 1e-8 * norm2
        assert np.linalg.norm(ops.laplacian(p) @ h.values) < 1e-8 * alpha.norm() * grid.N ** 2


def test_harmonic_part_unique():
    grid = lh.Grid(2, 6)
    ops = lh.build_operators(grid)
    rng = np.random.default_rng(11)
    alpha = random_cochain(grid, 1, rng)
    s1 = lh.hodge_split(ops, alpha)
    x0 = (rng.standard_normal(grid.size(0)), rng.standard_normal(grid.size(2)))
    s2 = lh.hodge_split(ops, alpha, x0=x0)
    assert (s1.harmonic - s2.harmonic).norm() < 1e-8


@pytest.mark.parametrize("n,N,p,expected", [(2, 8, 1, 2), (4, 4, 2, 6), (2, 4, 0, 1), (3, 3, 1, 3), (3, 3, 2, 3)])
def test_harmonic_dim_untwisted(n, N, p, expected):
    assert lh.harmonic_dim(lh.build_operators(lh.Grid(n, N)), p) == expected


def test_harmonic_dim_twisted():
    ops = lh.build_operators(lh.Grid(2, 4), [0.0, 1.0])
    assert lh.harmonic_dim(ops, 0) == 0
    assert lh.harmonic_dim(ops, 1) == 0


def test_harmonic_dim_iterative_agrees():
    ops = lh.build_operators(lh.Grid(2, 8))
    assert lh.harmonic_dim(ops, 1, iterative=True) == 2


def test_harmonic_dim_size_cap():
    ops = lh.build_operators(lh.Grid(4, 12))  # 12^4 * 6 rows at p=2
    with pytest.raises(ValueError):
        lh.harmonic_dim(ops, 2)


def test_flux_split_examples():
    grid = lh.Grid(2, 6)
    ops = lh.build_operators(grid)
    f = random_cochain(grid, 0)
    exact = ops.apply_d(f)
    res = lh.flux_split(ops, [exact, exact], [0.5, 0.5])
    assert res.magnitude < 1e-8
    h = lh.Cochain.constant(grid, 1, [0.0, 2.0])
    assert abs(lh.flux_split(ops, [h], [1.0]).magnitude - h.norm()) < 1e-12
    # alpha_t = t d f + (1 - t) h with trapezoid weights on t = 0, 1/2, 1
    ts, ws = [0.0, 0.5, 1.0], [0.25, 0.5, 0.25]
    res = lh.flux_split(ops, [exact * t + h * (1 - t) for t in ts], ws)
    direct = sum((h * ((1 - t) * w) for t, w in zip(ts, ws)), lh.Cochain.zeros(grid, 1))
    assert (res.harmonic_integral - h * 0.5).norm() < 1e-8
    assert (res.harmonic_integral - direct).norm() < 1e-8


def test_sample_form():
    grid = lh.Grid(2, 4)
    y = CoeffFn.coordinate(2, 1)
    c = lh.sample_form(grid, Form(2, 1, {(0,): y}))
    bary = grid.barycenters((0,))
    assert np.allclose(c.component((0,)).reshape(-1), bary[:, 1])
    assert np.all(c.component((1,)) == 0)
