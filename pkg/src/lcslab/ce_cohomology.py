"""Twisted Chevalley-Eilenberg complex of a nilpotent Lie algebra.

Left-invariant forms on a nilmanifold are the exterior algebra on a dual
coframe ``e^0..e^{m-1}`` with ``de^k = -sum_{i<j} c^k_ij e^i ^ e^j``.  Adding
``omega ^`` for an invariant closed 1-form gives a finite complex whose ranks
are computed exactly.  Indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from .coeffalg import CoeffFn, as_fraction
from .exactla import bareiss_rank, matvec, solve, solve_sparse
from .forms import Form, ext_d, sort_with_sign, wedge

__all__ = [
    "LieAlgebraSpec",
    "CeComplex",
    "ClassDecision",
    "NotACocycleError",
    "build",
    "betti",
    "euler_characteristic",
    "class_decide",
    "express_in_coframe",
    "lie_algebra_from_coframe",
    "kodaira_thurston_coframe",
    "kodaira_thurston_algebra",
    "abelian_algebra",
]

Vector = Tuple[Fraction, ...]


class LieAlgebraSpec:
    """Structure constants ``[e_i, e_j] = sum_k c^k_ij e_k`` over Q.

    ``brackets`` maps ``(i, j)`` to ``{k: c}``; the ``(j, i)`` entries are
    filled in by antisymmetry (given ones must agree).  The Jacobi identity is
    checked at construction.
    """

    def __init__(self, dim: int, brackets: Mapping[Tuple[int, int], Mapping[int, object]] = ()):
        self.dim = dim
        c: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
        items = brackets.items() if isinstance(brackets, Mapping) else brackets
        for (i, j), row in items:
            if not (0 <= i < dim and 0 <= j < dim):
                raise ValueError(f"bracket index ({i}, {j}) out of range")
            for k, v in row.items():
                if not 0 <= k < dim:
                    raise ValueError(f"bracket target {k} out of range")
                v = as_fraction(v)
                if v == 0:
                    continue
                if i == j:
                    raise ValueError(f"[e_{i}, e_{i}] must vanish")
                for (a, b), s in (((i, j), v), ((j, i), -v)):
                    prev = c.setdefault((a, b), {}).get(k)
                    if prev is not None and prev != s:
                        raise ValueError(f"structure constants for ({i}, {j}) are not antisymmetric")
                    c[(a, b)][k] = s
        self._c = c
        self._check_jacobi()

    def const(self, k: int, i: int, j: int) -> Fraction:
        return self._c.get((i, j), {}).get(k, Fraction(0))

    def bracket(self, i: int, j: int) -> Dict[int, Fraction]:
        return dict(self._c.get((i, j), {}))

    def _check_jacobi(self) -> None:
        m = self.dim
        for i, j, l in combinations(range(m), 3):
            for s in range(m):
                total = Fraction(0)
                for a, b, c in ((i, j, l), (j, l, i), (l, i, j)):
                    for t, v in self._c.get((a, b), {}).items():
                        total += v * self.const(s, t, c)
                if total != 0:
                    raise ValueError(f"Jacobi identity fails for ({i}, {j}, {l}) in component {s}")

    def brackets_list(self) -> List[Tuple[int, int, int, Fraction]]:
        """``(i, j, k, c)`` records with ``i < j``."""
        return [(i, j, k, v) for (i, j), row in sorted(self._c.items()) if i < j for k, v in sorted(row.items())]

    def __eq__(self, other):
        return isinstance(other, LieAlgebraSpec) and self.dim == other.dim and self._c == other._c

    def __repr__(self):
        return f"LieAlgebraSpec({self.dim}, {self.brackets_list()})"


def _d_generator(spec: LieAlgebraSpec, k: int) -> Dict[Tuple[int, int], Fraction]:
    out = {}
    for i, j in combinations(range(spec.dim), 2):
        v = spec.const(k, i, j)
        if v:
            out[(i, j)] = -v
    return out


def _apply_d(spec: LieAlgebraSpec, omega: Vector, idx: Tuple[int, ...]) -> Dict[Tuple[int, ...], Fraction]:
    """``d^w e^I`` as a sparse map on sorted index tuples."""
    out: Dict[Tuple[int, ...], Fraction] = {}
    for pos, k in enumerate(idx):
        for (i, j), v in _d_generator(spec, k).items():
            sign, key = sort_with_sign(idx[:pos] + (i, j) + idx[pos + 1:])
            if sign:
                out[key] = out.get(key, Fraction(0)) + (v if pos % 2 == 0 else -v) * sign
    for k, w in enumerate(omega):
        if w == 0:
            continue
        sign, key = sort_with_sign((k,) + idx)
        if sign:
            out[key] = out.get(key, Fraction(0)) + w * sign
    return {key: v for key, v in out.items() if v != 0}


@dataclass(frozen=True)
class CeComplex:
    spec: LieAlgebraSpec
    omega: Vector
    bases: Tuple[Tuple[Tuple[int, ...], ...], ...]
    matrices: Tuple[Tuple[Vector, ...], ...]  # matrices[p] : Lambda^p -> Lambda^{p+1}

    @property
    def dim(self) -> int:
        return self.spec.dim

    def apply(self, p: int, vector: Sequence) -> List[Fraction]:
        return matvec(self.matrices[p], [as_fraction(v) for v in vector])


def build(spec: LieAlgebraSpec, omega: Sequence = None) -> CeComplex:
    """Assemble the exact matrices of ``d^w`` on every degree."""
    m = spec.dim
    omega = tuple(as_fraction(v) for v in (omega if omega is not None else [0] * m))
    if len(omega) != m:
        raise ValueError("omega has the wrong length")
    # d omega as a 2-cochain
    domega: Dict[Tuple[int, int], Fraction] = {}
    for k, w in enumerate(omega):
        for key, v in _d_generator(spec, k).items():
            domega[key] = domega.get(key, Fraction(0)) + w * v
    if any(v != 0 for v in domega.values()):
        raise ValueError("omega is not closed in the Chevalley-Eilenberg complex")
    bases = tuple(tuple(combinations(range(m), p)) for p in range(m + 1))
    mats = []
    for p in range(m):
        row_of = {b: r for r, b in enumerate(bases[p + 1])}
        M = [[Fraction(0)] * len(bases[p]) for _ in bases[p + 1]]
        for col, idx in enumerate(bases[p]):
            for key, v in _apply_d(spec, omega, idx).items():
                M[row_of[key]][col] = v
        mats.append(tuple(tuple(r) for r in M))
    cx = CeComplex(spec, omega, bases, tuple(mats))
    for p in range(m - 1):
        for col in range(len(bases[p])):
            e = [Fraction(int(c == col)) for c in range(len(bases[p]))]
            if any(matvec(cx.matrices[p + 1], matvec(cx.matrices[p], e))):
                raise ArithmeticError(f"d^w o d^w != 0 in degree {p}")
    return cx


def ranks(cx: CeComplex) -> List[int]:
    return [bareiss_rank(M) if M and M[0] else 0 for M in cx.matrices]


def betti(cx: CeComplex) -> List[int]:
    """``b^p = dim ker d_p - rank d_{p-1}`` for p = 0..m."""
    r = ranks(cx)
    m = cx.dim
    out = []
    for p in range(m + 1):
        dim = len(cx.bases[p])
        out_rank = r[p] if p < m else 0
        in_rank = r[p - 1] if p > 0 else 0
        out.append(dim - out_rank - in_rank)
    return out


def euler_characteristic(numbers: Sequence[int]) -> int:
    return sum((-1) ** p * b for p, b in enumerate(numbers))


class NotACocycleError(ValueError):
    def __init__(self, image: List[Fraction]):
        super().__init__(f"input is not d^w-closed; d^w(input) = {[str(v) for v in image]}")
        self.image = image


class ClassDecision(NamedTuple):
    zero: bool
    primitive: Optional[List[Fraction]]


def class_decide(cx: CeComplex, cocycle: Sequence, p: int) -> ClassDecision:
    """Decide whether a degree-``p`` cocycle is ``d^w``-exact."""
    c = [as_fraction(v) for v in cocycle]
    if len(c) != len(cx.bases[p]):
        raise ValueError("cocycle has the wrong length")
    if p < cx.dim:
        image = cx.apply(p, c)
        if any(image):
            raise NotACocycleError(image)
    if not any(c):
        return ClassDecision(True, [Fraction(0)] * (len(cx.bases[p - 1]) if p > 0 else 0))
    if p == 0:
        return ClassDecision(False, None)
    x = solve([list(r) for r in cx.matrices[p - 1]], c)
    if x is None:
        return ClassDecision(False, None)
    return ClassDecision(True, x)


# ---------------------------------------------------------------------------
# coframes on R^n


def express_in_coframe(form: Form, coframe: Sequence[Form]) -> Optional[List[Fraction]]:
    """Constant coefficients of ``form`` in the basis ``e^I`` of the coframe.

    Returns the coefficient vector over ``combinations(range(m), p)`` or
    ``None`` when ``form`` is not a constant combination.
    """
    m = len(coframe)
    basis = list(combinations(range(m), form.p))
    products = []
    for I in basis:
        prod = Form.function(CoeffFn.constant(form.n, 1))
        for i in I:
            prod = wedge(prod, coframe[i])
        products.append(prod)
    equations: Dict[tuple, Dict[int, Fraction]] = {}
    rhs: Dict[tuple, Fraction] = {}
    for col, prod in enumerate(products):
        for idx, f in prod.items():
            for key, q in f.items():
                equations.setdefault((idx, key), {})[col] = q
    for idx, f in form.items():
        for key, q in f.items():
            equations.setdefault((idx, key), {})
            rhs[(idx, key)] = q
    keys = sorted(equations, key=repr)
    sol = solve_sparse([equations[k] for k in keys], [rhs.get(k, Fraction(0)) for k in keys])
    if sol is None:
        return None
    return [sol.get(c, Fraction(0)) for c in range(len(basis))]


def lie_algebra_from_coframe(coframe: Sequence[Form]) -> LieAlgebraSpec:
    """Structure constants read off from ``de^k`` in the coframe itself."""
    m = len(coframe)
    pairs = list(combinations(range(m), 2))
    brackets: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
    for k, e in enumerate(coframe):
        coeffs = express_in_coframe(ext_d(e), coframe)
        if coeffs is None:
            raise ValueError(f"d e^{k} is not a constant combination of the coframe")
        for (i, j), v in zip(pairs, coeffs):
            if v:
                brackets.setdefault((i, j), {})[k] = -v
    return LieAlgebraSpec(m, brackets)


def kodaira_thurston_coframe() -> List[Form]:
    """Invariant coframe ``dx - w dy, dy, dz, dw`` on R^4 = (x, y, z, w)."""
    n = 4
    w = CoeffFn.coordinate(n, 3)
    return [
        Form(n, 1, {(0,): 1, (1,): -w}),
        Form.basis(n, 1),
        Form.basis(n, 2),
        Form.basis(n, 3),
    ]


def kodaira_thurston_algebra() -> LieAlgebraSpec:
    """``de^0 = e^1 ^ e^3``, all other generators closed."""
    return LieAlgebraSpec(4, {(1, 3): {0: -1}})


def abelian_algebra(m: int) -> LieAlgebraSpec:
    return LieAlgebraSpec(m, {})
