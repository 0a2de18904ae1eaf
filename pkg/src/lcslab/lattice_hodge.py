"""Discrete twisted Hodge theory on periodic cubical grids.

A ``p``-cochain on the grid ``(Z/N)^n`` assigns a real number to every
(base vertex, sorted ``p``-subset of axes) pair.  With forward differences
``D_i = N (T_i - 1)`` and face averages ``A_i = (T_i + 1) / 2`` (``T_i`` the
unit shift along axis ``i``) the twisted coboundary is

    d^w = sum_i (D_i + w_i A_i) e_i ^

All ``D_i`` and ``A_i`` commute, so ``d^w o d^w = 0`` holds up to rounding.
The inner product is the uniform cell measure ``N^-n``; it is the same in
every degree, so the codifferential is the plain matrix transpose.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import cg, eigsh

from .forms import Form

__all__ = [
    "Grid",
    "Cochain",
    "TwistedOperators",
    "HodgeSplit",
    "FluxSplit",
    "build_operators",
    "hodge_split",
    "harmonic_dim",
    "flux_split",
    "sample_form",
    "DENSE_SIZE_CAP",
]

logger = logging.getLogger(__name__)

DENSE_SIZE_CAP = 20000
CG_RTOL = 1e-10


@dataclass(frozen=True)
class Grid:
    n: int
    N: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("resolution N must be at least 2")
        if self.n < 1:
            raise ValueError("dimension must be positive")

    @property
    def spacing(self) -> float:
        return 1.0 / self.N

    @property
    def vertices(self) -> int:
        return self.N ** self.n

    @property
    def weight(self) -> float:
        return float(self.N) ** (-self.n)

    def subsets(self, p: int) -> List[Tuple[int, ...]]:
        return list(combinations(range(self.n), p))

    def size(self, p: int) -> int:
        return self.vertices * comb(self.n, p)

    def barycenters(self, subset: Tuple[int, ...]) -> np.ndarray:
        """Cell barycentres ``(v + e_S / 2) / N`` in C order of the base vertex."""
        axes = np.indices((self.N,) * self.n).reshape(self.n, -1).T.astype(float)
        for i in subset:
            axes[:, i] += 0.5
        return axes / self.N


@dataclass
class Cochain:
    grid: Grid
    p: int
    values: np.ndarray  # flat, blocks ordered as grid.subsets(p)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.grid.size(self.p):
            raise ValueError(f"expected {self.grid.size(self.p)} values, got {self.values.size}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("cochain values must be finite")

    @classmethod
    def zeros(cls, grid: Grid, p: int) -> "Cochain":
        return cls(grid, p, np.zeros(grid.size(p)))

    @classmethod
    def constant(cls, grid: Grid, p: int, subset_values: Sequence[float]) -> "Cochain":
        """Translation-invariant cochain with one value per axis subset."""
        return cls(grid, p, np.repeat(np.asarray(subset_values, dtype=float), grid.vertices))

    def component(self, subset: Tuple[int, ...]) -> np.ndarray:
        k = self.grid.subsets(self.p).index(tuple(subset))
        V = self.grid.vertices
        return self.values[k * V:(k + 1) * V].reshape((self.grid.N,) * self.grid.n)

    def inner(self, other: "Cochain") -> float:
        return self.grid.weight * float(self.values @ other.values)

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))

    def __add__(self, other: "Cochain") -> "Cochain":
        return Cochain(self.grid, self.p, self.values + other.values)

    def __sub__(self, other: "Cochain") -> "Cochain":
        return Cochain(self.grid, self.p, self.values - other.values)

    def __mul__(self, s: float) -> "Cochain":
        return Cochain(self.grid, self.p, self.values * s)

    __rmul__ = __mul__


def _shift(grid: Grid, axis: int) -> sp.csr_matrix:
    """``(T u)(v) = u(v + e_axis)`` on C-ordered vertex arrays."""
    N = grid.N
    cyc = sp.csr_matrix((np.ones(N), (np.arange(N), (np.arange(N) + 1) % N)), shape=(N, N))
    out = sp.identity(1, format="csr")
    for k in range(grid.n):
        out = sp.kron(out, cyc if k == axis else sp.identity(N, format="csr"), format="csr")
    return out


@dataclass
class TwistedOperators:
    grid: Grid
    omega: np.ndarray
    d: List[sp.csr_matrix] = field(repr=False)  # d[p]: C^p -> C^{p+1}

    def delta(self, p: int) -> sp.csr_matrix:
        """Codifferential ``C^p -> C^{p-1}``: the transpose of ``d[p-1]``."""
        return self.d[p - 1].T.tocsr()

    def laplacian(self, p: int) -> sp.csr_matrix:
        n = self.grid.n
        size = self.grid.size(p)
        L = sp.csr_matrix((size, size))
        if p < n:
            L = L + self.d[p].T @ self.d[p]
        if p > 0:
            L = L + self.d[p - 1] @ self.d[p - 1].T
        return L.tocsr()

    def apply_d(self, c: Cochain) -> Cochain:
        return Cochain(self.grid, c.p + 1, self.d[c.p] @ c.values)

    def apply_delta(self, c: Cochain) -> Cochain:
        return Cochain(self.grid, c.p - 1, self.d[c.p - 1].T @ c.values)


def build_operators(grid: Grid, omega: Sequence[float] = None) -> TwistedOperators:
    """Sparse ``d^w`` for a constant Lee form ``omega`` (one entry per axis)."""
    n = grid.n
    omega = np.zeros(n) if omega is None else np.asarray(omega, dtype=float)
    if omega.shape != (n,):
        raise ValueError(f"omega must have {n} components")
    V = grid.vertices
    eye = sp.identity(V, format="csr")
    T = [_shift(grid, i) for i in range(n)]
    factors = [grid.N * (T[i] - eye) + omega[i] * 0.5 * (T[i] + eye) for i in range(n)]
    d = []
    for p in range(n):
        src = {S: k for k, S in enumerate(grid.subsets(p))}
        tgt = grid.subsets(p + 1)
        blocks = [[None] * len(src) for _ in tgt]
        for r, S in enumerate(tgt):
            for pos, i in enumerate(S):
                rest = S[:pos] + S[pos + 1:]
                blocks[r][src[rest]] = factors[i] if pos % 2 == 0 else -factors[i]
        for r in range(len(tgt)):
            for c in range(len(src)):
                if blocks[r][c] is None:
                    blocks[r][c] = sp.csr_matrix((V, V))
        d.append(sp.bmat(blocks, format="csr"))
    return TwistedOperators(grid, omega, d)


@dataclass
class HodgeSplit:
    exact: Cochain  # f with d^w f the exact part
    coexact: Cochain  # beta with delta^w beta the coexact part
    harmonic: Cochain
    converged: bool
    iterations: Tuple[int, int]

    def parts(self, ops: TwistedOperators) -> Tuple[Cochain, Cochain, Cochain]:
        p = self.harmonic.p
        grid = ops.grid
        da = ops.apply_d(self.exact) if p > 0 else Cochain.zeros(grid, p)
        db = ops.apply_delta(self.coexact) if p < grid.n else Cochain.zeros(grid, p)
        return da, db, self.harmonic


def _norm_bound(D) -> float:
    """Cheap upper bound sqrt(|D|_1 |D|_inf) for the spectral norm."""
    a = abs(D)
    return float(np.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max())) if D.nnz else 0.0


def _cg(A, b, x0, maxiter, scale):
    """CG stopped at ``|r| <= rtol * max(|b|, scale)``.

    ``scale`` is ``|D| |alpha|``: a right-hand side that is pure rounding
    noise (``alpha`` already exact or coexact) then counts as solved instead
    of driving CG into the kernel.
    """
    if not np.any(b):
        return np.zeros_like(b), True, 0
    count = [0]

    def tick(_):
        count[0] += 1

    x, info = cg(A, b, x0=x0, rtol=CG_RTOL, atol=CG_RTOL * scale, maxiter=maxiter, callback=tick)
    return x, info == 0, count[0]


def hodge_split(
    ops: TwistedOperators,
    alpha: Cochain,
    x0: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    maxiter: Optional[int] = None,
) -> HodgeSplit:
    """``alpha = d^w f + delta^w beta + h`` by CG on the two normal equations.

    ``d^w* d^w f = d^w* alpha`` and ``d^w d^w* beta = d^w alpha`` are
    consistent positive semidefinite systems, so CG converges to a solution
    even where ``f`` and ``beta`` are only determined up to a kernel; the
    harmonic remainder ``h`` is unique.  A non-converged solve leaves the
    last iterate in place and clears ``converged``.
    """
    grid, p = ops.grid, alpha.p
    n = grid.n
    cap = maxiter or 10 * max(grid.size(p), 1)
    anorm = float(np.linalg.norm(alpha.values))
    ok = True
    its = [0, 0]
    if p > 0:
        D = ops.d[p - 1]
        A = (D.T @ D).tocsr()
        start = x0[0] if x0 is not None else None
        f, conv, its[0] = _cg(A, D.T @ alpha.values, start, cap, _norm_bound(D) * anorm)
        ok &= conv
    else:
        f = np.zeros(0)
    if p < n:
        D = ops.d[p]
        A = (D @ D.T).tocsr()
        start = x0[1] if x0 is not None else None
        beta, conv, its[1] = _cg(A, D @ alpha.values, start, cap, _norm_bound(D) * anorm)
        ok &= conv
    else:
        beta = np.zeros(0)
    h = alpha.values.copy()
    if p > 0:
        h -= ops.d[p - 1] @ f
    if p < n:
        h -= ops.d[p].T @ beta
    if not ok:
        logger.warning("CG did not reach relative residual %g within %d iterations", CG_RTOL, cap)
    return HodgeSplit(
        exact=Cochain(grid, p - 1, f) if p > 0 else Cochain(grid, 0, np.zeros(grid.size(0))),
        coexact=Cochain(grid, p + 1, beta) if p < n else Cochain(grid, n, np.zeros(grid.size(n))),
        harmonic=Cochain(grid, p, h),
        converged=ok,
        iterations=tuple(its),
    )


def harmonic_dim(
    ops: TwistedOperators,
    p: int,
    tol: float = 1e-8,
    iterative: bool = False,
) -> int:
    """Number of eigenvalues of ``Delta_w`` below ``tol * lambda_max``.

    Dense symmetric eigensolve up to ``DENSE_SIZE_CAP`` unknowns; larger
    operators need ``iterative=True`` (shift-inverted Lanczos).
    """
    L = ops.laplacian(p)
    size = L.shape[0]
    if size <= DENSE_SIZE_CAP and not iterative:
        vals = eigh(L.toarray(), eigvals_only=True)
        lam_max = max(float(vals[-1]), 0.0)
        if lam_max == 0.0:
            return size
        return int(np.sum(vals < tol * lam_max))
    if not iterative:
        raise ValueError(f"operator has {size} rows, above the dense cap {DENSE_SIZE_CAP}; pass iterative=True")
    lam_max = float(eigsh(L, k=1, which="LA", return_eigenvectors=False)[0])
    if lam_max == 0.0:
        return size
    threshold = tol * lam_max
    k = 8
    while True:
        k = min(k, size - 1)
        vals = np.sort(eigsh(L, k=k, sigma=-1.0, which="LM", return_eigenvectors=False))
        below = int(np.sum(vals < threshold))
        if below < k or k == size - 1:
            return below
        k *= 2


@dataclass
class FluxSplit:
    exact_integral: Cochain  # int f_t dt
    harmonic_integral: Cochain  # int h_t dt
    magnitude: float
    converged: bool


def flux_split(ops: TwistedOperators, alphas: Sequence[Cochain], weights: Sequence[float]) -> FluxSplit:
    """Split each ``alpha_t`` and integrate the pieces with the given weights."""
    if len(alphas) != len(weights):
        raise ValueError("one weight per sample is required")
    if any(a.p != 1 for a in alphas):
        raise ValueError("flux samples must be 1-cochains")
    grid = ops.grid
    F = np.zeros(grid.size(0))
    H = np.zeros(grid.size(1))
    ok = True
    for a, w in zip(alphas, weights):
        s = hodge_split(ops, a)
        ok &= s.converged
        F += w * s.exact.values
        H += w * s.harmonic.values
    harmonic = Cochain(grid, 1, H)
    return FluxSplit(Cochain(grid, 0, F), harmonic, harmonic.norm(), ok)


def sample_form(grid: Grid, form: Form) -> Cochain:
    """Cochain of ``form`` coefficients evaluated at cell barycentres."""
    if form.n != grid.n:
        raise ValueError("form and grid dimensions differ")
    blocks = [form[S](grid.barycenters(S)) for S in grid.subsets(form.p)]
    return Cochain(grid, form.p, np.concatenate(blocks) if blocks else np.zeros(0))
