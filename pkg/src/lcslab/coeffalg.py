"""Exact polynomial-exponential coefficient algebra.

Two immutable value types:

``ExpScalar``
    a finite sum ``sum q_j * e**r_j`` with rational ``q_j, r_j``.  This is the
    group ring Q[e^Q]; the numbers ``e**r`` for distinct rational ``r`` are
    linearly independent over Q, so the sorted term list is a canonical form
    and equality is syntactic.

``CoeffFn``
    a function on R^n of the form ``sum c * x**a * exp(<k, x>)`` with integer
    powers ``a >= 0``, rational slopes ``k`` and ``ExpScalar`` coefficients
    ``c``.  The ring is closed under products, partial derivatives, affine
    substitution and definite integration over the unit box (the latter
    landing in ``ExpScalar``).
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Dict, Iterable, Sequence, Tuple, Union

import numpy as np

from .exactla import bareiss_det

__all__ = ["ExpScalar", "CoeffFn", "eval_numeric", "as_fraction"]

Number = Union[int, Fraction]


def as_fraction(v) -> Fraction:
    """Coerce ints, Fractions and decimal/ratio strings to ``Fraction``.

    Floats are rejected: they would silently smuggle rounding into exact data.
    """
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(v, (int, Rational)):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v.strip())
    raise TypeError(f"expected an exact rational, got {type(v).__name__}")


def _kn(v):
    """Key normal form: integral rationals become ``int`` (cheap to hash)."""
    if type(v) is int:
        return v
    return v.numerator if v.denominator == 1 else v


class ExpScalar:
    """Exact number ``sum q * e**r`` with rational ``q`` and ``r``."""

    __slots__ = ("_d", "_hash")

    def __init__(self, terms: Iterable[Tuple[Number, Number]] = ()):
        d: Dict[Fraction, Fraction] = {}
        for q, r in terms:
            q, r = as_fraction(q), _kn(as_fraction(r))
            d[r] = d.get(r, Fraction(0)) + q
        self._d = {r: q for r, q in sorted(d.items()) if q != 0}
        self._hash = None

    @classmethod
    def _raw(cls, d: Dict[Fraction, Fraction]) -> "ExpScalar":
        obj = cls.__new__(cls)
        obj._d = {r: d[r] for r in sorted(d) if d[r] != 0}
        obj._hash = None
        return obj

    @classmethod
    def rational(cls, q: Number) -> "ExpScalar":
        return cls([(q, 0)])

    @classmethod
    def exp(cls, r: Number, q: Number = 1) -> "ExpScalar":
        return cls([(q, r)])

    @staticmethod
    def coerce(v) -> "ExpScalar":
        if isinstance(v, ExpScalar):
            return v
        return ExpScalar.rational(as_fraction(v))

    @property
    def terms(self) -> Tuple[Tuple[Fraction, Fraction], ...]:
        """Canonical ``(q, r)`` pairs with strictly increasing ``r``."""
        return tuple((q, r) for r, q in self._d.items())

    def items(self):
        return self._d.items()

    def is_zero(self) -> bool:
        return not self._d

    def is_rational(self) -> bool:
        return all(r == 0 for r in self._d)

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self._d.get(Fraction(0), Fraction(0))

    def is_monomial(self) -> bool:
        return len(self._d) == 1

    def inverse(self) -> "ExpScalar":
        """Inverse of a single term ``q e**r``; other elements are not units."""
        if not self.is_monomial():
            raise ZeroDivisionError(f"{self} is not a unit of Q[e^Q]")
        ((r, q),) = self._d.items()
        return ExpScalar._raw({-r: Fraction(1) / q})

    def __add__(self, other):
        try:
            other = ExpScalar.coerce(other)
        except TypeError:
            return NotImplemented
        d = dict(self._d)
        for r, q in other._d.items():
            d[r] = d.get(r, Fraction(0)) + q
        return ExpScalar._raw(d)

    __radd__ = __add__

    def __neg__(self):
        return ExpScalar._raw({r: -q for r, q in self._d.items()})

    def __sub__(self, other):
        try:
            return self + (-ExpScalar.coerce(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, CoeffFn):
            return NotImplemented
        try:
            other = ExpScalar.coerce(other)
        except TypeError:
            return NotImplemented
        d: Dict[Fraction, Fraction] = {}
        for r1, q1 in self._d.items():
            for r2, q2 in other._d.items():
                r = _kn(r1 + r2)
                d[r] = d.get(r, Fraction(0)) + q1 * q2
        return ExpScalar._raw(d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * ExpScalar.coerce(other).inverse()

    def __eq__(self, other):
        if isinstance(other, ExpScalar):
            return self._d == other._d
        try:
            return self._d == ExpScalar.coerce(other)._d
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._d.items()))
        return self._hash

    def __float__(self):
        return math.fsum(float(q) * math.exp(r) for r, q in self._d.items())

    def __repr__(self):
        return f"ExpScalar({[(str(q), str(r)) for q, r in self.terms]})"

    def __str__(self):
        if not self._d:
            return "0"
        parts = []
        for r, q in self._d.items():
            if r == 0:
                parts.append(str(q))
            elif r == 1:
                parts.append("e" if q == 1 else f"{q}*e")
            else:
                parts.append(f"e^({r})" if q == 1 else f"{q}*e^({r})")
        return " + ".join(parts).replace("+ -", "- ")


@lru_cache(maxsize=4096)
def _interval_moment(m: int, k: Fraction) -> ExpScalar:
    """Exact value of the integral of x**m * e**(k x) over [0, 1]."""
    if k == 0:
        return ExpScalar.rational(Fraction(1, m + 1))
    if m == 0:
        return ExpScalar([(Fraction(1) / k, k), (Fraction(-1) / k, 0)])
    return ExpScalar([(Fraction(1) / k, k)]) - Fraction(m) / k * _interval_moment(m - 1, k)


def _linear_power(coeffs: Tuple[Fraction, ...], const: Fraction, e: int):
    """Expand ``(sum_j coeffs[j] x_j + const) ** e`` as {powers: Fraction}."""
    return _linear_power_cached(coeffs, const, e)


@lru_cache(maxsize=4096)
def _linear_power_cached(coeffs, const, e):
    n = len(coeffs)
    poly = {(0,) * n: Fraction(1)}
    base = {}
    for j, c in enumerate(coeffs):
        if c != 0:
            p = [0] * n
            p[j] = 1
            base[tuple(p)] = c
    if const != 0:
        base[(0,) * n] = base.get((0,) * n, Fraction(0)) + const
    for _ in range(e):
        nxt: Dict[tuple, Fraction] = {}
        for p1, c1 in poly.items():
            for p2, c2 in base.items():
                p = tuple(a + b for a, b in zip(p1, p2))
                nxt[p] = nxt.get(p, Fraction(0)) + c1 * c2
        poly = {p: c for p, c in nxt.items() if c != 0}
    return poly


# A CoeffFn term key is (powers, kvec, r): the monomial q * e**r * x**powers * exp(<kvec, x>)
Key = Tuple[Tuple[int, ...], Tuple[Fraction, ...], Fraction]


class CoeffFn:
    """Exact function ``sum c * prod(x_i**a_i) * exp(<k, x>)`` on R^n.

    Instances are immutable and canonical: terms are kept in a dict keyed by
    ``(powers, kvec, r)`` where the ``ExpScalar`` coefficient has been spread
    over its exponents ``r``, and no stored rational is zero.
    """

    __slots__ = ("n", "_t", "_hash", "_np")

    def __init__(self, n: int, terms: Iterable = ()):
        """Build from ``(coeff, powers, kvec)`` triples.

        ``coeff`` may be a rational or an ``ExpScalar``.
        """
        if n < 0:
            raise ValueError("dimension must be non-negative")
        d: Dict[Key, Fraction] = {}
        for coeff, powers, kvec in terms:
            powers = tuple(int(a) for a in powers)
            kvec = tuple(_kn(as_fraction(k)) for k in kvec)
            if len(powers) != n or len(kvec) != n:
                raise ValueError("term arity does not match dimension")
            if any(a < 0 for a in powers):
                raise ValueError("powers must be non-negative")
            for q, r in ExpScalar.coerce(coeff).terms:
                key = (powers, kvec, r)
                d[key] = d.get(key, Fraction(0)) + q
        self._set(n, d)

    def _set(self, n, d):
        self.n = n
        self._t = {k: d[k] for k in sorted(d) if d[k] != 0}
        self._hash = None
        self._np = None

    @classmethod
    def _raw(cls, n: int, d: Dict[Key, Fraction]) -> "CoeffFn":
        obj = cls.__new__(cls)
        obj._set(n, d)
        return obj

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "CoeffFn":
        return cls._raw(n, {})

    @classmethod
    def constant(cls, n: int, c=1) -> "CoeffFn":
        c = ExpScalar.coerce(c)
        z = (0,) * n
        zk = (0,) * n
        return cls._raw(n, {(z, zk, r): q for q, r in c.terms})

    @classmethod
    def coordinate(cls, n: int, i: int) -> "CoeffFn":
        p = [0] * n
        p[i] = 1
        return cls(n, [(1, p, [0] * n)])

    @classmethod
    def exp_linear(cls, n: int, kvec: Sequence, coeff=1) -> "CoeffFn":
        return cls(n, [(coeff, [0] * n, kvec)])

    @classmethod
    def monomial(cls, n: int, powers: Sequence[int], kvec: Sequence = None, coeff=1) -> "CoeffFn":
        return cls(n, [(coeff, powers, kvec if kvec is not None else [0] * n)])

    # -- inspection ---------------------------------------------------------
    @property
    def terms(self) -> Tuple[Tuple[Fraction, Tuple[int, ...], Tuple[Fraction, ...], Fraction], ...]:
        """Canonical ``(q, powers, kvec, r)`` records, sorted by key."""
        return tuple((q, p, k, r) for (p, k, r), q in self._t.items())

    def items(self):
        return self._t.items()

    def grouped(self) -> Dict[Tuple[Tuple[int, ...], Tuple[Fraction, ...]], ExpScalar]:
        """``{(powers, kvec): ExpScalar coefficient}``."""
        out: Dict = {}
        for (p, k, r), q in self._t.items():
            out.setdefault((p, k), {})[r] = q
        return {key: ExpScalar._raw(d) for key, d in out.items()}

    def coefficient(self, powers: Sequence[int], kvec: Sequence = None) -> ExpScalar:
        powers = tuple(powers)
        kvec = tuple(_kn(as_fraction(k)) for k in (kvec if kvec is not None else [0] * self.n))
        return ExpScalar._raw({r: q for (p, k, r), q in self._t.items() if p == powers and k == kvec})

    def is_zero(self) -> bool:
        return not self._t

    def is_constant(self) -> bool:
        return all(not any(p) and not any(k) for p, k, _ in self._t)

    def constant_value(self) -> ExpScalar:
        if not self.is_constant():
            raise ValueError("function is not constant")
        return ExpScalar._raw({r: q for (_, _, r), q in self._t.items()})

    def degree(self) -> int:
        return max((sum(p) for p, _, _ in self._t), default=0)

    def is_unit(self) -> bool:
        """True for a single term ``q e**r exp(<k,x>)``: the units of this ring."""
        return len(self._t) == 1 and not any(next(iter(self._t))[0])

    def inverse(self) -> "CoeffFn":
        if not self.is_unit():
            raise ZeroDivisionError("only single exponential terms are invertible")
        ((p, k, r), q), = self._t.items()
        return CoeffFn._raw(self.n, {(p, tuple(-v for v in k), -r): Fraction(1) / q})

    def affine_data(self):
        """``(c, k)`` with ``self == c + <k, x>`` for rational c, k; else ``None``."""
        n = self.n
        c = Fraction(0)
        k = [Fraction(0)] * n
        for (p, kv, r), q in self._t.items():
            if any(kv) or r != 0 or sum(p) > 1:
                return None
            if sum(p) == 0:
                c += q
            else:
                k[p.index(1)] += q
        return c, tuple(k)

    # -- ring operations ----------------------------------------------------
    def _coerce(self, other) -> "CoeffFn":
        if isinstance(other, CoeffFn):
            if other.n != self.n:
                raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")
            return other
        return CoeffFn.constant(self.n, ExpScalar.coerce(other))

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        d = dict(self._t)
        for key, q in other._t.items():
            d[key] = d.get(key, Fraction(0)) + q
        return CoeffFn._raw(self.n, d)

    __radd__ = __add__

    def __neg__(self):
        return CoeffFn._raw(self.n, {key: -q for key, q in self._t.items()})

    def __sub__(self, other):
        try:
            return self + (-self._coerce(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            c = Fraction(other)
            if c == 0:
                return CoeffFn.zero(self.n)
            return CoeffFn._raw(self.n, {key: q * c for key, q in self._t.items()})
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        d: Dict[Key, Fraction] = {}
        for (p1, k1, r1), q1 in self._t.items():
            for (p2, k2, r2), q2 in other._t.items():
                key = (
                    tuple(a + b for a, b in zip(p1, p2)),
                    tuple(_kn(a + b) for a, b in zip(k1, k2)),
                    _kn(r1 + r2),
                )
                d[key] = d.get(key, Fraction(0)) + q1 * q2
        return CoeffFn._raw(self.n, d)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        out = CoeffFn.constant(self.n, 1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, CoeffFn):
            return self.n == other.n and self._t == other._t
        try:
            return self._t == self._coerce(other)._t
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, tuple(self._t.items())))
        return self._hash

    # -- calculus -----------------------------------------------------------
    def derive(self, axis: int) -> "CoeffFn":
        """Exact partial derivative along coordinate ``axis``."""
        if not 0 <= axis < self.n:
            raise IndexError(f"axis {axis} out of range for dimension {self.n}")
        d: Dict[Key, Fraction] = {}
        for (p, k, r), q in self._t.items():
            if k[axis] != 0:
                key = (p, k, r)
                d[key] = d.get(key, Fraction(0)) + q * k[axis]
            if p[axis] > 0:
                lowered = p[:axis] + (p[axis] - 1,) + p[axis + 1:]
                key = (lowered, k, r)
                d[key] = d.get(key, Fraction(0)) + q * p[axis]
        return CoeffFn._raw(self.n, d)

    def integrate_box(self) -> ExpScalar:
        """Exact integral over the unit box [0, 1]^n."""
        total: Dict[Fraction, Fraction] = {}
        for (p, k, r), q in self._t.items():
            value = ExpScalar._raw({r: q})
            for m, kk in zip(p, k):
                value = value * _interval_moment(m, kk)
            for rr, qq in value._d.items():
                total[rr] = total.get(rr, Fraction(0)) + qq
        return ExpScalar._raw(total)

    def pullback_affine(self, A: Sequence[Sequence], b: Sequence, check: bool = True) -> "CoeffFn":
        """Exact composition ``x -> f(A x + b)`` for invertible rational ``A``.

        ``check=False`` skips the invertibility test for maps already known
        to be invertible.
        """
        n = self.n
        A = [[_kn(as_fraction(v)) for v in row] for row in A]
        b = [_kn(as_fraction(v)) for v in b]
        if len(A) != n or any(len(row) != n for row in A) or len(b) != n:
            raise ValueError("affine map has the wrong shape")
        if check and bareiss_det(A) == 0:
            raise ValueError("affine map is singular")
        rows = [tuple(row) for row in A]
        d: Dict[Key, Fraction] = {}
        for (p, k, r), q in self._t.items():
            new_k = tuple(_kn(sum(A[i][j] * k[i] for i in range(n) if k[i])) for j in range(n))
            new_r = _kn(r + sum(ki * bi for ki, bi in zip(k, b) if ki))
            poly = {(0,) * n: q}
            for i, e in enumerate(p):
                if e == 0:
                    continue
                factor = _linear_power(rows[i], b[i], e)
                nxt: Dict[tuple, Fraction] = {}
                for p1, c1 in poly.items():
                    for p2, c2 in factor.items():
                        pp = tuple(x + y for x, y in zip(p1, p2))
                        nxt[pp] = nxt.get(pp, Fraction(0)) + c1 * c2
                poly = nxt
            for pp, c in poly.items():
                key = (pp, new_k, new_r)
                d[key] = d.get(key, Fraction(0)) + c
        return CoeffFn._raw(n, d)

    # -- numerics -----------------------------------------------------------
    def _arrays(self):
        if self._np is None:
            if self._t:
                P = np.array([p for p, _, _ in self._t], dtype=float)
                K = np.array([[float(v) for v in k] for _, k, _ in self._t], dtype=float)
                c = np.array([float(q) * math.exp(r) for (_, _, r), q in self._t.items()])
            else:
                P = np.zeros((0, self.n))
                K = np.zeros((0, self.n))
                c = np.zeros(0)
            self._np = (P, K, c)
        return self._np

    def __call__(self, points) -> np.ndarray:
        """Evaluate at an array of points of shape ``(..., n)``."""
        x = np.asarray(points, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"points must have trailing dimension {self.n}")
        P, K, c = self._arrays()
        flat = x.reshape(-1, self.n)
        mono = np.prod(flat[:, None, :] ** P[None, :, :], axis=2) * np.exp(flat @ K.T)
        return (mono @ c).reshape(x.shape[:-1])

    def evaluate(self, point: Sequence[float]) -> float:
        return float(self(np.asarray(point, dtype=float)[None, :])[0])

    def __repr__(self):
        return f"CoeffFn({self.n}, {str(self)!r})"

    def __str__(self):
        if not self._t:
            return "0"
        names = "xyzw" if self.n <= 4 else None
        parts = []
        for (p, k), c in self.grouped().items():
            factors = []
            for i, a in enumerate(p):
                name = names[i] if names else f"x{i}"
                if a == 1:
                    factors.append(name)
                elif a > 1:
                    factors.append(f"{name}^{a}")
            lin = []
            for i, v in enumerate(k):
                if v:
                    name = names[i] if names else f"x{i}"
                    lin.append(name if v == 1 else f"-{name}" if v == -1 else f"{v}{name}")
            if lin:
                factors.append("e^(" + "+".join(lin).replace("+-", "-") + ")")
            coeff = str(c)
            if " " in coeff:
                coeff = f"({coeff})"
            if factors and coeff == "1":
                parts.append("*".join(factors))
            elif factors and coeff == "-1":
                parts.append("-" + "*".join(factors))
            else:
                parts.append("*".join([coeff] + factors))
        return " + ".join(parts).replace("+ -", "- ")


def eval_numeric(value, point=None) -> float:
    """Double-precision value of an ``ExpScalar`` or of a ``CoeffFn`` at a point."""
    if isinstance(value, ExpScalar):
        return float(value)
    if isinstance(value, CoeffFn):
        if point is None:
            raise ValueError("a point is required to evaluate a CoeffFn")
        return value.evaluate(point)
    return float(as_fraction(value))
