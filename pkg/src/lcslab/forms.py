"""Exterior calculus with exact ``CoeffFn`` coefficients.

Forms are sparse maps from strictly increasing index tuples to coefficients.
Index order handed to the constructor may be arbitrary; it is normalised
with the permutation sign, and repeated indices give zero.
"""

from __future__ import annotations

from itertools import combinations
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from .coeffalg import CoeffFn, as_fraction
from .exactla import bareiss_det, matmul, matvec

__all__ = [
    "Form",
    "VectorField",
    "AffineMap",
    "NotClosedError",
    "sort_with_sign",
    "wedge",
    "ext_d",
    "interior",
    "twisted_d",
    "lie",
    "lie_twisted",
    "pullback_form",
    "coordinate_field",
]


class NotClosedError(ValueError):
    """Raised when a Lee form is required to be closed and is not."""

    def __init__(self, residual: "Form"):
        super().__init__(f"d(omega) = {residual} is not zero")
        self.residual = residual


def sort_with_sign(indices: Sequence[int]) -> Tuple[int, Tuple[int, ...]]:
    """Sort ``indices``; return ``(sign, sorted)`` or ``(0, ())`` on repeats."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    # insertion sort; each adjacent swap flips the sign
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(idx)


def _accumulate(store: Dict[tuple, CoeffFn], key: tuple, value: CoeffFn) -> None:
    if key in store:
        store[key] = store[key] + value
    else:
        store[key] = value


class Form:
    """Exterior ``p``-form on R^n with ``CoeffFn`` coefficients."""

    __slots__ = ("n", "p", "_c")

    def __init__(self, n: int, p: int, coeffs: Mapping[Sequence[int], object] = ()):
        if not 0 <= p <= n:
            raise ValueError(f"degree {p} outside 0..{n}")
        store: Dict[tuple, CoeffFn] = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for idx, coeff in items:
            idx = tuple(int(i) for i in idx)
            if len(idx) != p:
                raise ValueError(f"index tuple {idx} does not have length {p}")
            if any(not 0 <= i < n for i in idx):
                raise ValueError(f"index tuple {idx} out of range for dimension {n}")
            sign, key = sort_with_sign(idx)
            if sign == 0:
                continue
            if not isinstance(coeff, CoeffFn):
                coeff = CoeffFn.constant(n, coeff)
            elif coeff.n != n:
                raise ValueError("coefficient dimension mismatch")
            _accumulate(store, key, coeff if sign > 0 else -coeff)
        self._set(n, p, store)

    def _set(self, n, p, store):
        self.n = n
        self.p = p
        self._c = {k: store[k] for k in sorted(store) if not store[k].is_zero()}

    @classmethod
    def _raw(cls, n: int, p: int, store: Dict[tuple, CoeffFn]) -> "Form":
        obj = cls.__new__(cls)
        obj._set(n, p, store)
        return obj

    @classmethod
    def zero(cls, n: int, p: int) -> "Form":
        return cls._raw(n, p, {})

    @classmethod
    def function(cls, f: CoeffFn) -> "Form":
        return cls._raw(f.n, 0, {(): f})

    @classmethod
    def basis(cls, n: int, *indices: int, coeff=1) -> "Form":
        """``coeff * dx_{i1} ^ ... ^ dx_{ip}``."""
        return cls(n, len(indices), {indices: coeff})

    @classmethod
    def one_form(cls, n: int, coeffs: Sequence) -> "Form":
        return cls(n, 1, {(i,): c for i, c in enumerate(coeffs)})

    # -- access -------------------------------------------------------------
    def items(self):
        return self._c.items()

    def __getitem__(self, indices: Sequence[int]) -> CoeffFn:
        sign, key = sort_with_sign(indices)
        if sign == 0:
            return CoeffFn.zero(self.n)
        value = self._c.get(key, CoeffFn.zero(self.n))
        return value if sign > 0 else -value

    def is_zero(self) -> bool:
        return not self._c

    def as_function(self) -> CoeffFn:
        if self.p != 0:
            raise ValueError("only 0-forms are functions")
        return self._c.get((), CoeffFn.zero(self.n))

    # -- linear structure -----------------------------------------------------
    def _check(self, other: "Form") -> None:
        if not isinstance(other, Form):
            raise TypeError("expected a Form")
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")
        if other.p != self.p:
            raise ValueError(f"degree mismatch: {self.p} vs {other.p}")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        store = dict(self._c)
        for k, v in other._c.items():
            _accumulate(store, k, v)
        return Form._raw(self.n, self.p, store)

    def __neg__(self) -> "Form":
        return Form._raw(self.n, self.p, {k: -v for k, v in self._c.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def __mul__(self, scalar) -> "Form":
        if isinstance(scalar, Form):
            return NotImplemented
        if isinstance(scalar, CoeffFn) and scalar.n != self.n:
            raise ValueError("dimension mismatch")
        return Form._raw(self.n, self.p, {k: v * scalar for k, v in self._c.items()})

    __rmul__ = __mul__

    def __xor__(self, other: "Form") -> "Form":
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return self.n == other.n and self.p == other.p and self._c == other._c

    def __hash__(self):
        return hash((self.n, self.p, tuple(self._c.items())))

    def __repr__(self):
        return f"Form(n={self.n}, p={self.p}, {str(self)!r})"

    def __str__(self):
        if not self._c:
            return "0"
        names = "xyzw" if self.n <= 4 else None
        parts = []
        for idx, f in self._c.items():
            basis = "^".join(("d" + names[i]) if names else f"dx{i}" for i in idx)
            coeff = str(f)
            if not basis:
                parts.append(coeff)
            elif coeff == "1":
                parts.append(basis)
            else:
                parts.append(f"({coeff}) {basis}")
        return " + ".join(parts)


class VectorField:
    """Vector field ``sum X_i d/dx_i`` with ``CoeffFn`` components."""

    __slots__ = ("n", "components")

    def __init__(self, components: Sequence):
        comps = list(components)
        if not comps:
            raise ValueError("vector field needs at least one component")
        n = next((c.n for c in comps if isinstance(c, CoeffFn)), len(comps))
        if n != len(comps):
            raise ValueError(f"component count {len(comps)} does not match dimension {n}")
        self.n = n
        self.components = tuple(c if isinstance(c, CoeffFn) else CoeffFn.constant(n, c) for c in comps)
        if any(c.n != n for c in self.components):
            raise ValueError("component dimension mismatch")

    numeric = False

    @classmethod
    def zero(cls, n: int) -> "VectorField":
        return cls([CoeffFn.zero(n)] * n)

    def __getitem__(self, i: int) -> CoeffFn:
        return self.components[i]

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __add__(self, other: "VectorField") -> "VectorField":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return VectorField([a + b for a, b in zip(self.components, other.components)])

    def __neg__(self) -> "VectorField":
        return VectorField([-c for c in self.components])

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + (-other)

    def __mul__(self, scalar) -> "VectorField":
        if isinstance(scalar, VectorField):
            return NotImplemented
        return VectorField([c * scalar for c in self.components])

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def apply(self, f: CoeffFn) -> CoeffFn:
        """Directional derivative ``X(f)``."""
        out = CoeffFn.zero(self.n)
        for i, c in enumerate(self.components):
            if not c.is_zero():
                out = out + c * f.derive(i)
        return out

    def __call__(self, points) -> np.ndarray:
        """Numeric field values at points of shape ``(..., n)``."""
        x = np.asarray(points, dtype=float)
        return np.stack([c(x) for c in self.components], axis=-1)

    def __repr__(self):
        return "VectorField(" + ", ".join(str(c) for c in self.components) + ")"


def coordinate_field(n: int, i: int, coeff=1) -> VectorField:
    """``coeff * d/dx_i``."""
    comps = [CoeffFn.zero(n)] * n
    comps[i] = CoeffFn.constant(n, coeff) if not isinstance(coeff, CoeffFn) else coeff
    return VectorField(comps)


class AffineMap:
    """Affine map ``x -> A x + b`` with invertible rational ``A``."""

    __slots__ = ("A", "b", "n")

    def __init__(self, A: Sequence[Sequence], b: Sequence):
        self.A = tuple(tuple(as_fraction(v) for v in row) for row in A)
        self.b = tuple(as_fraction(v) for v in b)
        self.n = len(self.b)
        if len(self.A) != self.n or any(len(r) != self.n for r in self.A):
            raise ValueError("affine map has the wrong shape")
        if bareiss_det(self.A) == 0:
            raise ValueError("affine map is singular")

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls([[int(i == j) for j in range(n)] for i in range(n)], [0] * n)

    @classmethod
    def translation(cls, b: Sequence) -> "AffineMap":
        n = len(b)
        return cls([[int(i == j) for j in range(n)] for i in range(n)], b)

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """``self o inner``: x -> A1 (A2 x + b2) + b1."""
        A = matmul(self.A, inner.A)
        b = [u + v for u, v in zip(matvec(self.A, inner.b), self.b)]
        return AffineMap(A, b)

    def __call__(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        A = np.array(self.A, dtype=float)
        return x @ A.T + np.array(self.b, dtype=float)

    def __eq__(self, other):
        if not isinstance(other, AffineMap):
            return NotImplemented
        return self.A == other.A and self.b == other.b

    def __hash__(self):
        return hash((self.A, self.b))

    def __repr__(self):
        return f"AffineMap(A={[[str(v) for v in r] for r in self.A]}, b={[str(v) for v in self.b]})"


# ---------------------------------------------------------------------------
# operations


def wedge(alpha: Form, beta: Form) -> Form:
    """Exterior product; zero when the total degree exceeds ``n``."""
    if alpha.n != beta.n:
        raise ValueError(f"dimension mismatch: {alpha.n} vs {beta.n}")
    n, p = alpha.n, alpha.p + beta.p
    if p > n:
        return Form.zero(n, n)
    store: Dict[tuple, CoeffFn] = {}
    for i1, f in alpha.items():
        for i2, g in beta.items():
            sign, key = sort_with_sign(i1 + i2)
            if sign == 0:
                continue
            fg = f * g
            _accumulate(store, key, fg if sign > 0 else -fg)
    return Form._raw(n, p, store)


def ext_d(alpha: Form) -> Form:
    """Exterior derivative."""
    n = alpha.n
    if alpha.p >= n:
        return Form.zero(n, n)
    store: Dict[tuple, CoeffFn] = {}
    for idx, f in alpha.items():
        for i in range(n):
            if i in idx:
                continue
            df = f.derive(i)
            if df.is_zero():
                continue
            sign, key = sort_with_sign((i,) + idx)
            _accumulate(store, key, df if sign > 0 else -df)
    return Form._raw(n, alpha.p + 1, store)


def interior(X: VectorField, alpha: Form) -> Form:
    """Interior product ``i_X alpha``; zero on functions."""
    if X.n != alpha.n:
        raise ValueError("dimension mismatch")
    n = alpha.n
    if alpha.p == 0:
        return Form.zero(n, 0)
    store: Dict[tuple, CoeffFn] = {}
    for idx, f in alpha.items():
        for j, i in enumerate(idx):
            xi = X.components[i]
            if xi.is_zero():
                continue
            term = xi * f
            key = idx[:j] + idx[j + 1:]
            _accumulate(store, key, term if j % 2 == 0 else -term)
    return Form._raw(n, alpha.p - 1, store)


def require_closed(omega: Form) -> None:
    if omega.p != 1:
        raise ValueError(f"Lee form must have degree 1, got {omega.p}")
    residual = ext_d(omega)
    if not residual.is_zero():
        raise NotClosedError(residual)


def twisted_d(alpha: Form, omega: Form, check: bool = True) -> Form:
    """Lichnerowicz differential ``d alpha + omega ^ alpha``.

    ``omega`` must be a closed 1-form; this is checked unless ``check`` is
    false (callers that already validated ``omega`` skip the work).
    """
    if check:
        require_closed(omega)
    if alpha.p >= alpha.n:
        return Form.zero(alpha.n, alpha.n)
    return ext_d(alpha) + wedge(omega, alpha)


def lie(X: VectorField, alpha: Form) -> Form:
    """Ordinary Lie derivative by the coordinate formula.

    ``L_X(f dx_I) = X(f) dx_I + f sum_j dx_{i1} ^ .. ^ d(X_{ij}) ^ .. ^ dx_{ip}``;
    it does not go through Cartan's formula, so it can be used to check it.
    """
    n = alpha.n
    store: Dict[tuple, CoeffFn] = {}
    grads = [[X.components[i].derive(k) for k in range(n)] for i in range(n)]
    for idx, f in alpha.items():
        _accumulate(store, idx, X.apply(f))
        for j, i in enumerate(idx):
            for k in range(n):
                g = grads[i][k]
                if g.is_zero():
                    continue
                sign, key = sort_with_sign(idx[:j] + (k,) + idx[j + 1:])
                if sign == 0:
                    continue
                term = f * g
                _accumulate(store, key, term if sign > 0 else -term)
    return Form._raw(n, alpha.p, store)


def evaluate_one_form(omega: Form, X: VectorField) -> CoeffFn:
    """The function ``omega(X)`` for a 1-form ``omega``."""
    return interior(X, omega).as_function()


def lie_twisted(X: VectorField, alpha: Form, omega: Form, check: bool = True) -> Form:
    """Twisted Lie derivative ``d^w i_X alpha + i_X d^w alpha``.

    The result is cross-checked against ``L_X alpha + omega(X) alpha``; a
    mismatch raises ``ArithmeticError``.
    """
    require_closed(omega)
    if alpha.p < alpha.n:
        cartan = interior(X, twisted_d(alpha, omega, check=False))
    else:  # d^w of a top form vanishes
        cartan = Form.zero(alpha.n, alpha.p)
    if alpha.p > 0:
        cartan = cartan + twisted_d(interior(X, alpha), omega, check=False)
    if check:
        algebraic = lie(X, alpha) + alpha * evaluate_one_form(omega, X)
        if algebraic != cartan:
            raise ArithmeticError("Cartan and algebraic twisted Lie derivatives disagree")
    return cartan


def pullback_form(phi: AffineMap, alpha: Form) -> Form:
    """Pullback of ``alpha`` along the affine map ``phi``.

    ``phi^* dx_i = sum_j A_ij dx_j``, so the coefficient of ``dx_J`` picks up
    the minor ``det A[I, J]``.
    """
    n = alpha.n
    if phi.n != n:
        raise ValueError("dimension mismatch")
    pulled = {idx: f.pullback_affine(phi.A, phi.b, check=False) for idx, f in alpha.items()}
    if alpha.p == 0:
        return Form._raw(n, 0, pulled)
    store: Dict[tuple, CoeffFn] = {}
    targets = list(combinations(range(n), alpha.p))
    for idx, g in pulled.items():
        for J in targets:
            minor = bareiss_det([[phi.A[i][j] for j in J] for i in idx])
            if minor != 0:
                _accumulate(store, J, g * minor)
    return Form._raw(n, alpha.p, store)
