"""Isotopies, flux, Calabi and Hofer quantities, and RK4 flows.

Time dependence is polynomial: an isotopy is ``X_t = sum_k t^k X_k`` and a
Hamiltonian path is ``H_t = sum_k t^k H_k`` with ``CoeffFn`` coefficients, so
every time integral of an exact quantity is exact.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from . import ce_cohomology as ce
from . import lattice_hodge as lh
from .coeffalg import CoeffFn, ExpScalar, as_fraction
from .exactla import solve_sparse
from .forms import Form, NotClosedError, VectorField, interior, twisted_d
from .lcs import LcsStructure, exp_affine, hamiltonian_field, integrate_top, is_strict_lcs, rescale

__all__ = [
    "Isotopy",
    "HamiltonianPath",
    "ClassVerdict",
    "FluxResult",
    "PrimitiveResult",
    "EnergyCapacity",
    "FlowResult",
    "VanishingVerdict",
    "flux",
    "primitive_search",
    "calabi",
    "calabi_exact",
    "hofer_energy",
    "energy_capacity_check",
    "flow",
    "convergence_order",
    "flux_vanishing_test",
    "hamiltonian_isotopy",
]

logger = logging.getLogger(__name__)

DEFAULT_DEGREE_CAP = 3
DEFAULT_SLOPES = (-1, 0, 1)
GAUSS_NODES = 16
ENERGY_SLACK = 1e-6


def _tpoly_eval(terms: Mapping[int, object], t: Fraction, zero):
    out = zero
    for k, c in terms.items():
        out = out + c * (t ** k)
    return out


def _tpoly_integral(terms: Mapping[int, object], zero, a=Fraction(0), b=Fraction(1)):
    out = zero
    for k, c in terms.items():
        out = out + c * ((b ** (k + 1) - a ** (k + 1)) / (k + 1))
    return out


class Isotopy:
    """Time-dependent field ``X_t = sum_k t^k X_k`` on ``[0, 1]``."""

    def __init__(self, terms: Mapping[int, VectorField]):
        self.terms = {int(k): X for k, X in sorted(terms.items()) if not X.is_zero()}
        if any(k < 0 for k in self.terms):
            raise ValueError("time powers must be non-negative")
        dims = {X.n for X in terms.values()}
        if len(dims) != 1:
            raise ValueError("isotopy needs at least one field and a single dimension")
        self.n = dims.pop()

    @classmethod
    def autonomous(cls, X: VectorField) -> "Isotopy":
        return cls({0: X})

    @property
    def t_degree(self) -> int:
        return max(self.terms, default=0)

    def at(self, t) -> VectorField:
        return _tpoly_eval(self.terms, as_fraction(t), VectorField.zero(self.n))

    def integral(self, a=0, b=1) -> VectorField:
        """Exact ``int_a^b X_t dt``."""
        return _tpoly_integral(self.terms, VectorField.zero(self.n), as_fraction(a), as_fraction(b))

    def __eq__(self, other):
        return isinstance(other, Isotopy) and self.n == other.n and self.terms == other.terms

    __hash__ = None

    def numeric(self, t: float, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x, dtype=float)
        for k, X in self.terms.items():
            out += (t ** k) * X(x)
        return out


class HamiltonianPath:
    """``H_t = sum_k t^k H_k`` with ``CoeffFn`` coefficients."""

    def __init__(self, terms: Mapping[int, CoeffFn]):
        self.terms = {int(k): H for k, H in sorted(terms.items()) if not H.is_zero()}
        dims = {H.n for H in terms.values()}
        if len(dims) != 1:
            raise ValueError("path needs at least one coefficient and a single dimension")
        self.n = dims.pop()

    @classmethod
    def autonomous(cls, H: CoeffFn) -> "HamiltonianPath":
        return cls({0: H})

    @property
    def t_degree(self) -> int:
        return max(self.terms, default=0)

    def at(self, t) -> CoeffFn:
        return _tpoly_eval(self.terms, as_fraction(t), CoeffFn.zero(self.n))

    def integral(self) -> CoeffFn:
        return _tpoly_integral(self.terms, CoeffFn.zero(self.n))

    def scaled(self, factor: CoeffFn) -> "HamiltonianPath":
        return HamiltonianPath({k: H * factor for k, H in self.terms.items()} or {0: CoeffFn.zero(self.n)})

    def __add__(self, other: "HamiltonianPath") -> "HamiltonianPath":
        terms = dict(self.terms)
        for k, H in other.terms.items():
            terms[k] = terms[k] + H if k in terms else H
        return HamiltonianPath(terms or {0: CoeffFn.zero(self.n)})

    def __eq__(self, other):
        return isinstance(other, HamiltonianPath) and self.n == other.n and self.terms == other.terms

    __hash__ = None

    def numeric(self, t: float, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape[:-1])
        for k, H in self.terms.items():
            out += (t ** k) * H(x)
        return out


def hamiltonian_isotopy(L: LcsStructure, path: HamiltonianPath) -> Isotopy:
    """The isotopy generated by ``i_{X_t} Omega = d^w H_t`` (symbolic sharp)."""
    terms = {k: hamiltonian_field(L, H, mode="symbolic") for k, H in path.terms.items()}
    return Isotopy(terms or {0: VectorField.zero(L.n)})


# ---------------------------------------------------------------------------
# flux and class decisions


@dataclass
class ClassVerdict:
    backend: str
    verdict: str
    primitive: Optional[object] = None
    detail: Dict[str, object] = field(default_factory=dict)

    @property
    def has_primitive(self) -> bool:
        return self.primitive is not None


@dataclass
class FluxResult:
    form: Form
    closed: bool
    strict: bool
    verdicts: Dict[str, ClassVerdict]
    warnings: List[str] = field(default_factory=list)


@dataclass
class PrimitiveResult:
    primitive: Optional[CoeffFn]
    degree_cap: int
    slopes: Tuple[Fraction, ...]
    invariant: bool
    unknowns: int

    @property
    def found(self) -> bool:
        return self.primitive is not None

    def describe(self) -> str:
        if self.found:
            return f"primitive {self.primitive}"
        return f"none found up to (D={self.degree_cap}, K={[str(k) for k in self.slopes]})"


def primitive_search(
    L: LcsStructure,
    alpha: Form,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    slopes: Sequence = DEFAULT_SLOPES,
    invariant: bool = True,
) -> PrimitiveResult:
    """Exact search for ``f`` with ``d^w f = alpha`` in a finite ansatz space.

    The ansatz is ``x^a e^<k,x>`` with total degree ``|a| <= degree_cap`` and
    every slope ``k_i`` in ``slopes``, with rational coefficients (times any
    ``e^r`` constants present in ``alpha``).  When ``invariant`` is set and
    the structure carries deck generators, ``f`` must also satisfy
    ``g^* f = f`` so that it is a function on the quotient.  A returned
    primitive is verified; "none found" only covers the ansatz.
    """
    if alpha.p != 1 or alpha.n != L.n:
        raise ValueError("primitive_search expects a 1-form of matching dimension")
    closure = twisted_d(alpha, L.omega)
    if not closure.is_zero():
        raise NotClosedError(closure)
    n = L.n
    slopes = tuple(sorted({as_fraction(k) for k in slopes}))
    exps = sorted({Fraction(0)} | {r for _, f in alpha.items() for (_, _, r), _q in f.items()})
    powers = [p for p in itertools.product(range(degree_cap + 1), repeat=n) if sum(p) <= degree_cap]
    kvecs = [tuple(k.numerator if k.denominator == 1 else k for k in kv) for kv in itertools.product(slopes, repeat=n)]
    gens = L.generators if invariant else ()

    equations: Dict[tuple, Dict[int, Fraction]] = {}
    basis: List[tuple] = []
    unknowns = 0
    for pw in powers:
        for kv in kvecs:
            for r in exps:
                key_u = (pw, kv, r)
                u = unknowns
                basis.append(key_u)
                unknowns += 1
                b = CoeffFn._raw(n, {key_u: Fraction(1)})
                dw = twisted_d(Form.function(b), L.omega, check=False)
                for idx, f in dw.items():
                    for key, q in f.items():
                        equations.setdefault((0, idx, key), {})[u] = q
                for gi, g in enumerate(gens):
                    moved = b.pullback_affine(g.A, g.b, check=False) - b
                    for key, q in moved.items():
                        equations.setdefault((1, gi, key), {})[u] = q
    rhs: Dict[tuple, Fraction] = {}
    for idx, f in alpha.items():
        for key, q in f.items():
            equations.setdefault((0, idx, key), {})
            rhs[(0, idx, key)] = q
    keys = list(equations)
    sol = solve_sparse([equations[k] for k in keys], [rhs.get(k, Fraction(0)) for k in keys])
    result = PrimitiveResult(None, degree_cap, slopes, bool(gens), unknowns)
    if sol is None:
        return result
    f = CoeffFn._raw(n, {basis[u]: q for u, q in sol.items()})
    if twisted_d(Form.function(f), L.omega, check=False) != alpha:
        raise ArithmeticError("primitive search returned a non-primitive")
    result.primitive = f
    return result


def _strict_times(degree: int) -> List[Fraction]:
    count = max(3, degree + 1)
    return [Fraction(i, count - 1) for i in range(count)]


def _ce_verdict(L: LcsStructure, alpha: Form, coframe: Sequence[Form]) -> ClassVerdict:
    algebra = ce.lie_algebra_from_coframe(coframe)
    a = ce.express_in_coframe(alpha, coframe)
    w = ce.express_in_coframe(L.omega, coframe)
    if w is None:
        return ClassVerdict("ce", "inapplicable", detail={"reason": "Lee form is not invariant"})
    if a is None:
        return ClassVerdict("ce", "inapplicable", detail={"reason": "flux form is not a constant combination of the coframe"})
    cx = ce.build(algebra, w)
    decision = ce.class_decide(cx, a, 1)
    if decision.zero:
        prim = decision.primitive[0] if decision.primitive else Fraction(0)
        return ClassVerdict("ce", "zero-class", CoeffFn.constant(L.n, prim), {"coframe_vector": a})
    return ClassVerdict("ce", "nonzero-invariant-class", detail={"coframe_vector": a, "betti": ce.betti(cx)})


def _lattice_verdict(L: LcsStructure, alpha: Form, N: int) -> ClassVerdict:
    omega = []
    for i in range(L.n):
        c = L.omega[(i,)]
        if not c.is_constant():
            return ClassVerdict("lattice", "inapplicable", detail={"reason": "Lee form is not constant"})
        omega.append(float(c.constant_value()))
    grid = lh.Grid(L.n, N)
    ops = lh.build_operators(grid, omega)
    sample = lh.sample_form(grid, alpha)
    split = lh.flux_split(ops, [sample], [1.0])
    rel = split.magnitude / max(sample.norm(), 1e-300)
    verdict = "harmonic-part-negligible" if rel < 1e-8 else "harmonic-part-nonzero"
    return ClassVerdict("lattice", verdict, detail={"N": N, "harmonic_norm": split.magnitude, "relative": rel})


def flux(
    L: LcsStructure,
    iso: Isotopy,
    backends: Sequence[str] = ("primitive-search",),
    degree_cap: int = DEFAULT_DEGREE_CAP,
    slopes: Sequence = DEFAULT_SLOPES,
    coframe: Optional[Sequence[Form]] = None,
    lattice_N: int = 8,
) -> FluxResult:
    """Flux 1-form ``int_0^1 i_{X_t} Omega dt`` and per-backend class verdicts."""
    if iso.n != L.n:
        raise ValueError("dimension mismatch")
    warnings = []
    strict = True
    for t in _strict_times(iso.t_degree):
        check = is_strict_lcs(L, iso.at(t))
        if not check.holds:
            strict = False
            warnings.append(f"X_t is not strictly LCS at t={t}: flux of a non-ker-Phi path")
            break
    alpha = interior(iso.integral(), L.Omega)
    closed = twisted_d(alpha, L.omega).is_zero()
    if not closed:
        warnings.append("flux form is not d^w-closed")
    verdicts: Dict[str, ClassVerdict] = {}
    for backend in backends:
        if not closed:
            verdicts[backend] = ClassVerdict(backend, "inapplicable", detail={"reason": "not closed"})
        elif backend == "primitive-search":
            res = primitive_search(L, alpha, degree_cap, slopes)
            detail = {"degree_cap": degree_cap, "slopes": [str(s) for s in res.slopes],
                      "invariant": res.invariant, "unknowns": res.unknowns}
            if res.found:
                verdicts[backend] = ClassVerdict(backend, "zero-class", res.primitive, detail)
            else:
                verdicts[backend] = ClassVerdict(backend, "no-primitive-up-to-bounds", None, detail)
        elif backend == "ce":
            if coframe is None:
                verdicts[backend] = ClassVerdict("ce", "inapplicable", detail={"reason": "no coframe"})
            else:
                verdicts[backend] = _ce_verdict(L, alpha, coframe)
        elif backend == "lattice":
            verdicts[backend] = _lattice_verdict(L, alpha, lattice_N)
        else:
            raise ValueError(f"unknown backend {backend!r}")
    return FluxResult(alpha, closed, strict, verdicts, warnings)


@dataclass
class VanishingVerdict:
    verdict: str  # "vanishes" | "obstructed up to search bounds"
    primitive: Optional[CoeffFn]
    flux: FluxResult


def flux_vanishing_test(L: LcsStructure, iso: Isotopy, backends: Sequence[str] = ("primitive-search",), **kw) -> VanishingVerdict:
    """Zero flux is declared only when a backend exhibits a primitive."""
    res = flux(L, iso, backends, **kw)
    for v in res.verdicts.values():
        if v.has_primitive:
            return VanishingVerdict("vanishes", v.primitive, res)
    return VanishingVerdict("obstructed up to search bounds", None, res)


# ---------------------------------------------------------------------------
# Calabi and Hofer


def calabi(L: LcsStructure, path: HamiltonianPath) -> ExpScalar:
    """Twisted Calabi invariant ``int_0^1 int_M H_t Omega^m/m! dt`` (exact)."""
    return integrate_top(L, path.integral())


def _exact_rescaling(L: LcsStructure, h: Optional[CoeffFn]):
    h = L.potential if h is None else h
    if h is None:
        raise ValueError("exact mode needs a potential h with dh = omega")
    Lh = rescale(L, h)  # validates dh = omega
    return h, Lh, exp_affine(h)


def calabi_exact(L: LcsStructure, path: HamiltonianPath, h: Optional[CoeffFn] = None) -> ExpScalar:
    """Exact-case Calabi ``int_M int_0^1 K_t dt Omega_h^m/m!`` with ``K_t = e^h H_t``."""
    h, Lh, eh = _exact_rescaling(L, h)
    return integrate_top(Lh, path.integral() * eh)


def _box_grid(n: int, res: int) -> np.ndarray:
    axis = np.linspace(0.0, 1.0, res + 1)
    return np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)


def _polish(fun, grad, x0: np.ndarray, sign: float) -> Tuple[float, np.ndarray]:
    """Local bounded optimisation of ``sign * fun`` starting at ``x0``."""
    n = x0.size
    res = minimize(
        lambda x: -sign * fun(x[None, :])[0],
        x0,
        jac=lambda x: -sign * grad(x[None, :])[0],
        method="L-BFGS-B",
        bounds=[(0.0, 1.0)] * n,
    )
    x = np.clip(res.x, 0.0, 1.0)
    return float(fun(x[None, :])[0]), x


def _extrema(terms: Dict[int, CoeffFn], t: float, n: int, resolution: int) -> Tuple[float, float]:
    """Sampled (max, min) of ``sum t^k F_k`` over the unit box.

    Grids at every dyadic level up to ``resolution`` are nested, and each
    level adds one polished local search from its best sample, so the
    estimates are monotone in ``resolution``.
    """
    grads = {k: [F.derive(i) for i in range(n)] for k, F in terms.items()}

    def fun(x):
        out = np.zeros(x.shape[0])
        for k, F in terms.items():
            out += (t ** k) * F(x)
        return out

    def grad(x):
        out = np.zeros_like(x)
        for k, G in grads.items():
            for i, g in enumerate(G):
                out[:, i] += (t ** k) * g(x)
        return out

    hi, lo = -np.inf, np.inf
    level = 1
    while level <= resolution:
        pts = _box_grid(n, level)
        vals = fun(pts)
        imax, imin = int(np.argmax(vals)), int(np.argmin(vals))
        hi = max(hi, float(vals[imax]), _polish(fun, grad, pts[imax], 1.0)[0])
        lo = min(lo, float(vals[imin]), _polish(fun, grad, pts[imin], -1.0)[0])
        level *= 2
    return hi, lo


def _check_resolution(resolution: int) -> None:
    if resolution < 1 or resolution & (resolution - 1):
        raise ValueError("resolution must be a power of two (nested dyadic grids)")


def _gauss_legendre():
    x, w = np.polynomial.legendre.leggauss(GAUSS_NODES)
    return 0.5 * (x + 1.0), 0.5 * w


def hofer_energy(
    L: LcsStructure,
    path: HamiltonianPath,
    mode: str = "nonexact",
    resolution: int = 8,
    h: Optional[CoeffFn] = None,
) -> float:
    """Sampled lower bound of the single-path LCS-Hofer energy.

    ``mode="exact"``: ``int_0^1 osc(e^h H_t) dt`` (needs ``dh = omega``);
    ``mode="nonexact"``: ``int_0^1 max |H_t| dt``.  Extrema are sampled on
    nested dyadic grids of the unit box up to ``resolution`` with a polishing
    pass; time uses 16-node Gauss-Legendre.
    """
    _check_resolution(resolution)
    if mode == "exact":
        _, _, eh = _exact_rescaling(L, h)
        terms = {k: H * eh for k, H in path.terms.items()}
    elif mode == "nonexact":
        if h is not None:
            raise ValueError("a potential only makes sense in exact mode")
        terms = dict(path.terms)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not terms:
        return 0.0
    nodes, weights = _gauss_legendre()
    total = 0.0
    for t, w in zip(nodes, weights):
        hi, lo = _extrema(terms, float(t), L.n, resolution)
        total += w * ((hi - lo) if mode == "exact" else max(hi, -lo, 0.0))
    return float(total)


@dataclass
class EnergyCapacity:
    calabi: float
    calabi_unnormalised: ExpScalar
    volume: ExpScalar
    energy: float
    holds: bool

    @property
    def bound(self) -> float:
        return float(self.volume) * self.energy


def energy_capacity_check(
    L: LcsStructure,
    path: HamiltonianPath,
    h: Optional[CoeffFn] = None,
    resolution: int = 8,
    slack: float = ENERGY_SLACK,
) -> EnergyCapacity:
    """``|Cal(K - min K)| <= Vol_{Omega_h}(M) * E`` for one exact-case path.

    ``K_t = e^h H_t``; the Calabi side uses the min-normalised ``K_t`` as in
    the standard proof, with ``int K`` exact and the minima sampled at the
    same Gauss-Legendre nodes that give the energy.
    """
    _check_resolution(resolution)
    h, Lh, eh = _exact_rescaling(L, h)
    K = {k: H * eh for k, H in path.terms.items()}
    vol = integrate_top(Lh, CoeffFn.constant(L.n, 1))
    raw = integrate_top(Lh, _tpoly_integral(K, CoeffFn.zero(L.n)))
    nodes, weights = _gauss_legendre()
    min_integral = 0.0
    energy = 0.0
    if K:
        for t, w in zip(nodes, weights):
            hi, lo = _extrema(K, float(t), L.n, resolution)
            min_integral += w * lo
            energy += w * (hi - lo)
    cal = float(raw) - float(vol) * float(min_integral)
    holds = bool(abs(cal) <= float(vol) * energy + slack)
    return EnergyCapacity(cal, raw, vol, float(energy), holds)


# ---------------------------------------------------------------------------
# flows


@dataclass
class FlowResult:
    endpoints: np.ndarray
    trajectory: Optional[np.ndarray]
    blown_up: bool


def flow(
    iso: Isotopy,
    points,
    steps: int,
    t1: float = 1.0,
    wrap: bool = False,
    record: bool = False,
) -> FlowResult:
    """Classical RK4 integration of ``dx/dt = X_t(x)`` from ``t = 0`` to ``t1``."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    x = np.array(points, dtype=float, ndmin=2)
    if x.shape[-1] != iso.n:
        raise ValueError("points have the wrong dimension")
    dt = t1 / steps
    traj = [x.copy()] if record else None
    blown = False
    for s in range(steps):
        t = s * dt
        with np.errstate(over="ignore", invalid="ignore"):  # blow-up is reported below
            k1 = iso.numeric(t, x)
            k2 = iso.numeric(t + 0.5 * dt, x + 0.5 * dt * k1)
            k3 = iso.numeric(t + 0.5 * dt, x + 0.5 * dt * k2)
            k4 = iso.numeric(t + dt, x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            blown = True
            logger.warning("flow left the finite range at step %d", s + 1)
            break
        if wrap:
            x = np.mod(x, 1.0)
        if record:
            traj.append(x.copy())
    return FlowResult(x, np.stack(traj) if record else None, blown)


def convergence_order(iso: Isotopy, x0, exact_endpoint, steps: Sequence[int] = (8, 16, 32, 64)) -> List[float]:
    """Observed orders ``log2(e_k / e_{k+1})`` for successively halved steps."""
    exact = np.asarray(exact_endpoint, dtype=float)
    errors = [float(np.max(np.abs(flow(iso, x0, s).endpoints - exact))) for s in steps]
    return [float(np.log(errors[i] / errors[i + 1]) / np.log(steps[i + 1] / steps[i])) for i in range(len(errors) - 1)]
