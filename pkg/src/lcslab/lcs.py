"""Locally conformally symplectic structures ``(Omega, omega)``.

Everything here is exact except the explicitly flagged numeric fallback of
``sharp`` and the sampled nondegeneracy certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import qmc

from .coeffalg import CoeffFn, ExpScalar
from .forms import (
    AffineMap,
    Form,
    VectorField,
    evaluate_one_form,
    ext_d,
    interior,
    lie,
    lie_twisted,
    pullback_form,
    require_closed,
    twisted_d,
    wedge,
)

__all__ = [
    "LcsStructure",
    "ValidationReport",
    "DegenerateFormError",
    "NonUnitPfaffianError",
    "SampledField",
    "StrictCheck",
    "DescentResult",
    "validate",
    "volume_form",
    "pfaffian",
    "sharp",
    "hamiltonian_field",
    "is_strict_lcs",
    "conformal_factor",
    "rescale",
    "conformal_map",
    "descent_check",
    "top_density",
    "integrate_top",
]

PFAFFIAN_SAMPLE_THRESHOLD = 1e-9
PFAFFIAN_SAMPLES = 16


class DegenerateFormError(ValueError):
    pass


class NonUnitPfaffianError(ValueError):
    pass


@dataclass(frozen=True)
class ValidationReport:
    closedness_residual: Form
    structure_residual: Form
    volume: Form
    passed: bool

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass(frozen=True)
class LcsStructure:
    """An LCS pair on R^n (``n`` even), optionally with deck generators.

    ``potential`` is a function ``h`` with ``dh = omega`` when the Lee form is
    exact; ``generators`` are the affine deck transformations of a quotient
    (used for descent diagnostics and to restrict primitive searches to
    functions that live on the quotient).
    """

    Omega: Form
    omega: Form
    potential: Optional[CoeffFn] = None
    generators: Tuple[AffineMap, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.Omega.p != 2 or self.omega.p != 1:
            raise ValueError("expected a 2-form Omega and a 1-form omega")
        if self.Omega.n != self.omega.n or self.Omega.n % 2:
            raise ValueError("Omega and omega must live on the same even-dimensional space")
        object.__setattr__(self, "generators", tuple(self.generators))

    @property
    def n(self) -> int:
        return self.Omega.n

    @property
    def half_dim(self) -> int:
        return self.Omega.n // 2

    def report(self) -> ValidationReport:
        return validate(self.Omega, self.omega)

    def is_valid(self) -> bool:
        return self.report().passed


def validate(Omega: Form, omega: Form) -> ValidationReport:
    """Exact residuals of ``d omega = 0`` and ``d Omega + omega ^ Omega = 0``."""
    if Omega.p != 2 or omega.p != 1:
        raise ValueError(f"expected degrees (2, 1), got ({Omega.p}, {omega.p})")
    if Omega.n != omega.n or Omega.n % 2:
        raise ValueError("Omega and omega must live on the same even-dimensional space")
    closed = ext_d(omega)
    structure = ext_d(Omega) + wedge(omega, Omega)
    vol = _top_power(Omega)
    return ValidationReport(closed, structure, vol, closed.is_zero() and structure.is_zero())


def _top_power(Omega: Form) -> Form:
    m = Omega.n // 2
    power = Form.function(CoeffFn.constant(Omega.n, 1))
    for _ in range(m):
        power = wedge(power, Omega)
    return power * Fraction(1, factorial(m))


def volume_form(L: LcsStructure) -> Form:
    """``Omega^m / m!``; raises ``DegenerateFormError`` if it vanishes."""
    vol = _top_power(L.Omega)
    if vol.is_zero():
        raise DegenerateFormError("Omega^m vanishes identically")
    return vol


def omega_matrix(Omega: Form) -> List[List[CoeffFn]]:
    n = Omega.n
    M = [[CoeffFn.zero(n) for _ in range(n)] for _ in range(n)]
    for (i, j), f in Omega.items():
        M[i][j] = f
        M[j][i] = -f
    return M


def _pfaffian(M, idx: Tuple[int, ...], zero):
    # expansion along the first remaining row
    if not idx:
        return zero + 1
    first = idx[0]
    total = zero
    for pos in range(1, len(idx)):
        j = idx[pos]
        a = M[first][j]
        if a.is_zero():
            continue
        rest = idx[1:pos] + idx[pos + 1:]
        term = a * _pfaffian(M, rest, zero)
        total = total + term if pos % 2 == 1 else total - term
    return total


def pfaffian(Omega: Form) -> CoeffFn:
    """Pfaffian of the coefficient matrix; ``Omega^m/m! = Pf * dx_1^..^dx_n``."""
    return _pfaffian(omega_matrix(Omega), tuple(range(Omega.n)), CoeffFn.zero(Omega.n))


def halton_points(n: int, count: int = PFAFFIAN_SAMPLES) -> np.ndarray:
    return qmc.Halton(d=n, scramble=False).random(count + 1)[1:]


def certify_nondegenerate(L: LcsStructure) -> Tuple[bool, str]:
    """Nonzero top power plus a unit Pfaffian or sampled ``|Pf| > 1e-9``."""
    if _top_power(L.Omega).is_zero():
        return False, "Omega^m vanishes identically"
    pf = pfaffian(L.Omega)
    if pf.is_unit():
        return True, "unit Pfaffian"
    values = np.abs(pf(halton_points(L.n)))
    if np.all(values > PFAFFIAN_SAMPLE_THRESHOLD):
        return True, f"sampled |Pf| >= {values.min():.3g} at {len(values)} Halton points"
    return False, "Pfaffian vanishes at a sample point"


def _determinant(M, rows: Tuple[int, ...], cols: Tuple[int, ...], zero, memo):
    if not rows:
        return zero + 1
    key = (rows, cols)
    if key in memo:
        return memo[key]
    r = rows[0]
    total = zero
    for pos, c in enumerate(cols):
        a = M[r][c]
        if a.is_zero():
            continue
        minor = _determinant(M, rows[1:], cols[:pos] + cols[pos + 1:], zero, memo)
        total = total + a * minor if pos % 2 == 0 else total - a * minor
    memo[key] = total
    return total


@dataclass(frozen=True)
class SampledField:
    """Pointwise numeric solution of ``i_X Omega = alpha`` at sample points."""

    points: np.ndarray
    values: np.ndarray
    numeric: bool = True


def sharp(
    L: LcsStructure,
    alpha: Form,
    mode: str = "auto",
    points: Optional[np.ndarray] = None,
) -> Union[VectorField, SampledField]:
    """Solve ``i_X Omega = alpha`` for ``X``.

    The symbolic path needs a unit Pfaffian ``c e^<k,x>``; then
    ``X = -M^{-1} alpha`` with ``M^{-1} = adj(M) / Pf^2`` is exact.  With
    ``mode="auto"`` a non-unit Pfaffian falls back to pointwise dense solves
    at ``points`` (16 Halton points by default); ``mode="symbolic"`` raises
    instead and ``mode="numeric"`` always samples.
    """
    if alpha.p != 1 or alpha.n != L.n:
        raise ValueError("sharp expects a 1-form of matching dimension")
    if mode not in ("auto", "symbolic", "numeric"):
        raise ValueError(f"unknown mode {mode!r}")
    n = L.n
    M = omega_matrix(L.Omega)
    pf = pfaffian(L.Omega)
    if mode != "numeric" and pf.is_unit():
        zero = CoeffFn.zero(n)
        a = [alpha[(j,)] for j in range(n)]
        inv_det = pf.inverse() * pf.inverse()
        memo: Dict = {}
        comps = []
        full = tuple(range(n))
        for i in range(n):
            acc = zero
            for j in range(n):
                if a[j].is_zero():
                    continue
                # (M^{-1})_{ij} = (-1)^{i+j} det(M minus row j, col i) / det M
                minor = _determinant(M, full[:j] + full[j + 1:], full[:i] + full[i + 1:], zero, memo)
                if minor.is_zero():
                    continue
                term = minor * a[j]
                acc = acc + term if (i + j) % 2 == 0 else acc - term
            comps.append(-(acc * inv_det))
        return VectorField(comps)
    if mode == "symbolic":
        raise NonUnitPfaffianError(f"Pfaffian {pf} is not a unit; symbolic sharp unavailable")
    pts = halton_points(n) if points is None else np.asarray(points, dtype=float)
    values = np.empty((len(pts), n))
    for s, x in enumerate(pts):
        Mx = np.array([[M[i][j].evaluate(x) for j in range(n)] for i in range(n)])
        ax = np.array([alpha[(j,)].evaluate(x) for j in range(n)])
        if abs(np.linalg.det(Mx)) < PFAFFIAN_SAMPLE_THRESHOLD ** 2:
            raise DegenerateFormError(f"Omega is singular at sample point {x}")
        values[s] = np.linalg.solve(Mx.T, ax)
    return SampledField(pts, values)


def hamiltonian_field(L: LcsStructure, H: CoeffFn, mode: str = "auto"):
    """The field ``X_H`` with ``i_X Omega = d^w H``."""
    return sharp(L, twisted_d(Form.function(H), L.omega), mode=mode)


class StrictCheck(NamedTuple):
    holds: bool
    witness: Form


def is_strict_lcs(L: LcsStructure, X: VectorField) -> StrictCheck:
    """``X`` is strictly LCS iff the twisted Lie derivative of Omega vanishes."""
    witness = lie_twisted(X, L.Omega, L.omega)
    return StrictCheck(witness.is_zero(), witness)


def conformal_factor(L: LcsStructure, X: VectorField) -> Optional[CoeffFn]:
    """``f`` with ``L_X Omega = -f Omega`` and ``L_X omega = df``, or ``None``."""
    n = L.n
    lo = lie(X, L.Omega)
    f = None
    if lo.is_zero():
        f = CoeffFn.zero(n)
    else:
        for idx, c in L.Omega.items():
            if c.is_unit():
                f = -(lo[idx] * c.inverse())
                break
    if f is None:
        return None
    if lo != L.Omega * (-f):
        return None
    if lie(X, L.omega) != ext_d(Form.function(f)):
        return None
    return f


def conformal_map(h: CoeffFn, alpha: Form) -> Form:
    """``alpha -> e^h alpha`` for affine ``h``."""
    return alpha * exp_affine(h)


def exp_affine(h: CoeffFn) -> CoeffFn:
    data = h.affine_data()
    if data is None:
        raise ValueError(f"e^h is only representable for affine h, got {h}")
    c, k = data
    return CoeffFn.exp_linear(h.n, k, ExpScalar.exp(c))


def rescale(L: LcsStructure, h: Optional[CoeffFn] = None) -> LcsStructure:
    """Symplectic structure ``(e^h Omega, 0)`` for an exact Lee form ``omega = dh``."""
    h = L.potential if h is None else h
    if h is None:
        raise ValueError("no potential h supplied")
    if ext_d(Form.function(h)) != L.omega:
        raise ValueError("dh does not equal the Lee form")
    Omega_h = conformal_map(h, L.Omega)
    return LcsStructure(Omega_h, Form.zero(L.n, 1), None, L.generators)


@dataclass(frozen=True)
class DescentResult:
    generator: AffineMap
    classification: str  # invariant | conformal | fails
    factor: Optional[ExpScalar]
    residual: Form


def _constant_ratio(target: Form, base: Form) -> Optional[ExpScalar]:
    """Constant ``c`` with ``target == c * base`` if one can be read off."""
    for idx, f in base.items():
        g = target[idx]
        fg, gg = f.grouped(), g.grouped()
        for key, a in fg.items():
            if a.is_monomial():
                b = gg.get(key, ExpScalar())
                return b * a.inverse()
    return None


def descent_check(form: Form, generators: Sequence[AffineMap]) -> List[DescentResult]:
    """Compare ``g^* form`` with ``c * form`` for each generator ``g``."""
    out = []
    for g in generators:
        pulled = pullback_form(g, form)
        if pulled == form:
            out.append(DescentResult(g, "invariant", ExpScalar.rational(1), Form.zero(form.n, form.p)))
            continue
        c = _constant_ratio(pulled, form)
        if c is not None and not c.is_zero() and pulled == form * c:
            out.append(DescentResult(g, "conformal", c, Form.zero(form.n, form.p)))
        else:
            out.append(DescentResult(g, "fails", None, pulled - form))
    return out


def top_density(L: LcsStructure, Omega: Optional[Form] = None) -> CoeffFn:
    """Coefficient of ``Omega^m/m!`` in the orientation it defines itself.

    The volume form is positive in its own orientation, so the density is
    ``|Pf|``; its sign is read at the box centre (a unit or nonvanishing
    Pfaffian has constant sign on the box).
    """
    Om = L.Omega if Omega is None else Omega
    pf = pfaffian(Om)
    if pf.is_zero():
        raise DegenerateFormError("Omega^m vanishes identically")
    centre = np.full(Om.n, 0.5)
    return pf if pf.evaluate(centre) > 0 else -pf


def integrate_top(L: LcsStructure, f: CoeffFn, Omega: Optional[Form] = None) -> ExpScalar:
    """Exact ``int_{[0,1]^n} f Omega^m/m!`` in the symplectic orientation."""
    return (f * top_density(L, Omega)).integrate_box()
