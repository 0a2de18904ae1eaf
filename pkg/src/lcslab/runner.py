"""Execute manifest jobs and render reports.

Every job produces a record with ``id``, ``type`` and ``verdict`` (``pass``,
``fail`` or ``error``) plus job-specific fields.  Exact values are written
with the codecs of :mod:`lcslab.serialize`.  A job that carries a
``paper_claim`` object also gets a ``comparison`` block that puts each
claimed value next to the computed one; disagreement is recorded there and
does not change the verdict.
"""

from __future__ import annotations

import json
import time
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from . import ce_cohomology as ce
from . import lattice_hodge as lh
from .coeffalg import CoeffFn, ExpScalar
from .dynamics import (
    Isotopy,
    calabi,
    calabi_exact,
    energy_capacity_check,
    flow,
    flux,
    flux_vanishing_test,
    hamiltonian_isotopy,
    hofer_energy,
)
from .forms import Form, VectorField, pullback_form
from .lcs import certify_nondegenerate, descent_check, validate, volume_form
from .manifest import GridBlock, Job, Manifest
from .serialize import (
    affine_to_json,
    coeff_to_json,
    expscalar_from_json,
    expscalar_to_json,
    field_to_json,
    form_from_json,
    form_to_json,
)

__all__ = ["execute", "emit_report", "exit_code", "RESIDUAL_DIGITS"]

# floating residuals are rounded so that JSON reports stay byte-stable
RESIDUAL_DIGITS = 3
HODGE_TOL = 1e-8


def _round(x: float) -> float:
    return float(f"{x:.{RESIDUAL_DIGITS - 1}e}") if x else 0.0


def _jsonable(v):
    """Convert exact objects in job details into JSON values."""
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, ExpScalar):
        return expscalar_to_json(v)
    if isinstance(v, CoeffFn):
        return coeff_to_json(v)
    if isinstance(v, Form):
        return form_to_json(v)
    if isinstance(v, VectorField):
        return field_to_json(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _isotopy(m: Manifest, job: Job) -> Isotopy:
    p = job.params
    if "field" in p:
        return Isotopy.autonomous(p["field"])
    if "isotopy" in p:
        return p["isotopy"]
    return hamiltonian_isotopy(m.structure, p["hamiltonian"])


# -- job handlers: each returns (fields, computed claims, one-line summary) -----


def _job_validate(m: Manifest, job: Job):
    L = m.structure
    rep = validate(L.Omega, L.omega)
    nondeg, how = certify_nondegenerate(L) if rep.passed else (None, "skipped")
    passed = rep.passed and bool(nondeg)
    out = {
        "verdict": "pass" if passed else "fail",
        "closedness_residual": form_to_json(rep.closedness_residual),
        "structure_residual": form_to_json(rep.structure_residual),
        "nondegenerate": nondeg,
        "nondegeneracy_certificate": how,
    }
    if not rep.passed:
        bad = rep.structure_residual if not rep.structure_residual.is_zero() else rep.closedness_residual
        out["residual"] = form_to_json(bad)
        summary = f"FAIL: d Omega + omega^Omega = {rep.structure_residual}, d omega = {rep.closedness_residual}"
    else:
        summary = f"residuals zero; nondegenerate ({how})"
    return out, {"passes": passed}, summary


def _job_volume(m: Manifest, job: Job):
    vol = volume_form(m.structure)
    return {"verdict": "pass", "volume_form": form_to_json(vol)}, {"volume_form": form_to_json(vol)}, f"Omega^m/m! = {vol}"


def _job_descent(m: Manifest, job: Job):
    L = m.structure
    form = L.Omega if job.params.get("form", "Omega") == "Omega" else L.omega
    results = descent_check(form, L.generators)
    rows = []
    for r in results:
        rows.append({
            "generator": affine_to_json(r.generator),
            "classification": r.classification,
            "factor": expscalar_to_json(r.factor) if r.factor is not None else None,
            "residual": form_to_json(r.residual),
        })
    invariant = all(r.classification == "invariant" for r in results)
    classes = ", ".join(r.classification for r in results) or "no generators"
    return {"verdict": "pass", "generators": rows, "all_invariant": invariant}, {"invariant": invariant}, classes


def _job_ce(m: Manifest, job: Job):
    la = m.lie_algebra
    spec = la.spec
    omega = job.params.get("omega") or la.omega or tuple([0] * spec.dim)
    cx = ce.build(spec, omega)
    b = ce.betti(cx)
    chi = ce.euler_characteristic(b)
    untwisted = not any(omega)
    poincare = b == b[::-1]
    checks = chi == 0 and (poincare or not untwisted)
    out: Dict[str, Any] = {
        "omega": [str(Fraction(v)) for v in omega],
        "ranks": ce.ranks(cx),
        "betti": b,
        "euler_characteristic": chi,
        "poincare_symmetric": poincare,
    }
    if la.coframe is not None:
        derived = ce.lie_algebra_from_coframe(la.coframe)
        invariant = all(pullback_form(g, e) == e for g in m.structure.generators for e in la.coframe)
        out["coframe_derivation"] = {"matches_brackets": derived == spec, "coframe_invariant": invariant}
        checks = checks and derived == spec and invariant
    out = {"verdict": "pass" if checks else "fail", **out}
    claims = {f"b{p}": v for p, v in enumerate(b)}
    claims["betti"] = b
    return out, claims, f"betti {tuple(b)}, euler {chi}"


def _job_hodge(m: Manifest, job: Job):
    g: GridBlock = job.params.get("grid") or m.grid
    p = job.params["p"]
    omega = g.omega if g.omega is not None else (0.0,) * g.n
    grid = lh.Grid(g.n, g.N)
    ops = lh.build_operators(grid, omega)
    size = grid.size(p)
    dim = lh.harmonic_dim(ops, p, tol=HODGE_TOL, iterative=size > lh.DENSE_SIZE_CAP)
    out: Dict[str, Any] = {"grid": {"n": g.n, "N": g.N, "omega": list(omega)}, "p": p, "harmonic_dim": dim}
    ok = True
    samples = job.params.get("samples", 0)
    if samples:
        rng = np.random.default_rng(job.params.get("seed", 0))
        worst_rec = worst_orth = 0.0
        converged = True
        for _ in range(samples):
            alpha = lh.Cochain(grid, p, rng.standard_normal(size))
            split = lh.hodge_split(ops, alpha)
            converged &= split.converged
            a, b, h = split.parts(ops)
            norm2 = alpha.norm() ** 2
            worst_rec = max(worst_rec, (alpha - a - b - h).norm() / alpha.norm())
            worst_orth = max(worst_orth, abs(a.inner(b)) / norm2, abs(a.inner(h)) / norm2, abs(b.inner(h)) / norm2)
        ok = converged and worst_rec < HODGE_TOL and worst_orth < HODGE_TOL
        out["split"] = {
            "samples": samples,
            "max_reconstruction_residual": _round(worst_rec),
            "max_orthogonality_residual": _round(worst_orth),
            "converged": bool(converged),
        }
    return {"verdict": "pass" if ok else "fail", **out}, {"harmonic_dim": dim}, f"harmonic dimension {dim}"


def _verdict_json(v) -> Dict[str, Any]:
    return {
        "verdict": v.verdict,
        "primitive": coeff_to_json(v.primitive) if v.primitive is not None else None,
        "detail": _jsonable(v.detail),
    }


def _flux_kwargs(m: Manifest, job: Job) -> Dict[str, Any]:
    p = job.params
    kw: Dict[str, Any] = {"backends": tuple(p.get("backends", ("primitive-search",)))}
    if "degree_cap" in p:
        kw["degree_cap"] = p["degree_cap"]
    if "slopes" in p:
        kw["slopes"] = p["slopes"]
    if "lattice_N" in p:
        kw["lattice_N"] = p["lattice_N"]
    if m.lie_algebra is not None and m.lie_algebra.coframe is not None:
        kw["coframe"] = m.lie_algebra.coframe
    return kw


def _job_flux(m: Manifest, job: Job):
    res = flux(m.structure, _isotopy(m, job), **_flux_kwargs(m, job))
    out = {
        "verdict": "pass",
        "flux_form": form_to_json(res.form),
        "closed": res.closed,
        "strict": res.strict,
        "warnings": list(res.warnings),
        "class_verdicts": {k: _verdict_json(v) for k, v in res.verdicts.items()},
    }
    verdicts = ", ".join(f"{k}: {v.verdict}" for k, v in res.verdicts.items())
    return out, {"flux_form": form_to_json(res.form)}, f"flux {res.form}; {verdicts}"


def _job_vanishing(m: Manifest, job: Job):
    res = flux_vanishing_test(m.structure, _isotopy(m, job), **_flux_kwargs(m, job))
    out = {
        "verdict": "pass",
        "result": res.verdict,
        "primitive": coeff_to_json(res.primitive) if res.primitive is not None else None,
        "flux_form": form_to_json(res.flux.form),
        "class_verdicts": {k: _verdict_json(v) for k, v in res.flux.verdicts.items()},
    }
    extra = f", primitive {res.primitive}" if res.primitive is not None else ""
    return out, {"result": res.verdict}, f"{res.verdict}{extra}"


def _job_calabi(m: Manifest, job: Job):
    path = job.params["H"]
    exact = job.params.get("exact", False)
    value = calabi_exact(m.structure, path) if exact else calabi(m.structure, path)
    out = {"verdict": "pass", "exact_case": exact, "value": expscalar_to_json(value)}
    return out, {"value": {"terms": expscalar_to_json(value)["terms"]}}, f"{value} ~ {float(value):.15g}"


def _job_hofer(m: Manifest, job: Job):
    mode = job.params.get("mode", "nonexact")
    res = job.params.get("resolution", 8)
    e = hofer_energy(m.structure, job.params["H"], mode=mode, resolution=res)
    out = {"verdict": "pass", "mode": mode, "resolution": res, "energy": e, "kind": "sampled lower bound"}
    return out, {"energy": e}, f"{mode} energy >= {e:.12g} (resolution {res})"


def _job_energy_capacity(m: Manifest, job: Job):
    res = job.params.get("resolution", 8)
    rec = energy_capacity_check(m.structure, job.params["H"], resolution=res)
    out = {
        "verdict": "pass" if rec.holds else "fail",
        "abs_calabi": abs(rec.calabi),
        "calabi_unnormalised": expscalar_to_json(rec.calabi_unnormalised),
        "volume": expscalar_to_json(rec.volume),
        "energy": rec.energy,
        "bound": rec.bound,
        "holds": rec.holds,
        "resolution": res,
    }
    return out, {"holds": rec.holds}, f"|Cal| = {abs(rec.calabi):.12g} <= Vol*E = {rec.bound:.12g}: {rec.holds}"


def _job_flow(m: Manifest, job: Job):
    p = job.params
    res = flow(_isotopy(m, job), p["points"], p["steps"], t1=p.get("t1", 1.0), wrap=p.get("wrap", False))
    out = {
        "verdict": "fail" if res.blown_up else "pass",
        "steps": p["steps"],
        "endpoints": res.endpoints.tolist(),
        "blown_up": res.blown_up,
    }
    return out, {"endpoints": res.endpoints.tolist()}, f"endpoints {np.round(res.endpoints, 12).tolist()}"


HANDLERS: Dict[str, Callable] = {
    "validate": _job_validate,
    "volume": _job_volume,
    "descent": _job_descent,
    "cohomology-ce": _job_ce,
    "hodge": _job_hodge,
    "flux": _job_flux,
    "flux-vanishing": _job_vanishing,
    "calabi": _job_calabi,
    "hofer": _job_hofer,
    "energy-capacity": _job_energy_capacity,
    "flow": _job_flow,
}


def _normalise_claim(key: str, value, n: int):
    """Bring a claimed value into the same canonical JSON as the computed one."""
    if key in ("volume_form", "flux_form", "residual"):
        return form_to_json(form_from_json(value, n))
    if key == "value" and isinstance(value, dict):
        return {"terms": expscalar_to_json(expscalar_from_json(value))["terms"]}
    return value


def _agrees(claim, computed) -> bool:
    if isinstance(claim, (int, float)) and isinstance(computed, (int, float)) and not isinstance(claim, bool):
        return abs(claim - computed) <= 1e-12 * max(1.0, abs(claim))
    return claim == computed


def _comparison(job: Job, claims: Dict[str, Any], n: int) -> Dict[str, Any]:
    out = {}
    for key, claim in job.paper_claim.items():
        if key not in claims:
            out[key] = {"claim": claim, "computed": None, "agrees": None, "note": "not computed by this job"}
            continue
        try:
            norm = _normalise_claim(key, claim, n)
        except ValueError as exc:
            out[key] = {"claim": claim, "computed": claims[key], "agrees": None, "note": f"unreadable claim: {exc}"}
            continue
        out[key] = {"claim": claim, "computed": claims[key], "agrees": _agrees(norm, claims[key])}
    return out


def run_job(m: Manifest, job: Job, timing: bool = False) -> Dict[str, Any]:
    start = time.perf_counter()
    record: Dict[str, Any] = {"id": job.id, "type": job.type}
    try:
        fields, claims, summary = HANDLERS[job.type](m, job)
        record.update(fields)
        record["summary"] = summary
        if job.paper_claim is not None:
            record["paper_claim"] = job.paper_claim
            record["comparison"] = _comparison(job, claims, m.dimension)
    except Exception as exc:  # isolate failures per job
        record["verdict"] = "error"
        record["error"] = f"{type(exc).__name__}: {exc}"
        record["summary"] = record["error"]
    if timing:
        record["seconds"] = time.perf_counter() - start
    return record


def execute(m: Manifest, timing: bool = False) -> Dict[str, Any]:
    """Run every job in order; the report is ``{"jobs": [...]}``."""
    return {"jobs": [run_job(m, job, timing) for job in m.jobs]}


def exit_code(report: Dict[str, Any]) -> int:
    return 0 if all(j.get("verdict") == "pass" for j in report["jobs"]) else 1


def emit_report(report: Dict[str, Any], fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(report, indent=2, sort_keys=False) + "\n").encode("utf-8")
    if fmt == "text":
        lines = []
        for j in report["jobs"]:
            lines.append(f"[{j['verdict'].upper()}] {j['id']} ({j['type']}): {j.get('summary', '')}")
            for key, c in j.get("comparison", {}).items():
                mark = {True: "agrees", False: "DIFFERS", None: "n/a"}[c["agrees"]]
                lines.append(f"    claim {key}: {json.dumps(c['claim'])} vs computed {json.dumps(c['computed'])} -> {mark}")
            if "seconds" in j:
                lines.append(f"    {j['seconds']:.3f} s")
        passed = sum(j["verdict"] == "pass" for j in report["jobs"])
        lines.append(f"{passed}/{len(report['jobs'])} jobs passed")
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")
