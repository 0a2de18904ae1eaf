"""Manifest parsing: JSON schema validation, then decoding into exact objects.

A manifest describes exactly one LCS structure plus optional deck
generators, a Lie-algebra model, a lattice grid and a list of jobs.  See
``schema/manifest-1.0.schema.json`` for the full grammar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import jsonschema

from .ce_cohomology import LieAlgebraSpec
from .coeffalg import CoeffFn
from .forms import AffineMap, Form
from .lcs import LcsStructure
from .serialize import (
    DecodeError,
    affine_from_json,
    affine_to_json,
    coeff_from_json,
    coeff_to_json,
    field_from_json,
    field_to_json,
    form_from_json,
    form_to_json,
    isotopy_from_json,
    isotopy_to_json,
    path_from_json,
    path_to_json,
    rational_from_json,
    rational_to_json,
)

__all__ = [
    "SCHEMA_VERSION",
    "ManifestError",
    "ManifestIOError",
    "LieAlgebraBlock",
    "GridBlock",
    "Job",
    "Manifest",
    "load_schema",
    "parse_manifest",
    "parse_manifest_text",
    "manifest_from_json",
    "manifest_to_json",
    "fixture_names",
    "fixture_path",
]

SCHEMA_VERSION = "1.0"
DEFAULT_COORDINATES = ("x", "y", "z", "w")


class ManifestError(ValueError):
    """Schema or semantic violation; ``path`` is a JSON path like ``$.jobs[2].H``."""

    def __init__(self, message: str, path: str = "$", line: Optional[int] = None):
        where = path if line is None else f"line {line}"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
        self.message = message


class ManifestIOError(OSError):
    pass


def load_schema() -> Dict[str, Any]:
    text = resources.files("lcslab").joinpath(f"schema/manifest-{SCHEMA_VERSION}.schema.json").read_text("utf-8")
    return json.loads(text)


_VALIDATOR = None


def _validator():
    global _VALIDATOR
    if _VALIDATOR is None:
        _VALIDATOR = jsonschema.Draft202012Validator(load_schema())
    return _VALIDATOR


def _json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


@dataclass
class LieAlgebraBlock:
    spec: LieAlgebraSpec
    omega: Optional[Tuple] = None
    coframe: Optional[Tuple[Form, ...]] = None


@dataclass
class GridBlock:
    n: int
    N: int
    omega: Optional[Tuple[float, ...]] = None


@dataclass
class Job:
    type: str
    id: str
    params: Dict[str, Any] = field(default_factory=dict)
    paper_claim: Optional[Dict[str, Any]] = None


@dataclass
class Manifest:
    dimension: int
    coordinates: Tuple[str, ...]
    structure: LcsStructure
    lie_algebra: Optional[LieAlgebraBlock] = None
    grid: Optional[GridBlock] = None
    jobs: List[Job] = field(default_factory=list)
    description: str = ""


# codecs for job parameters holding exact data: key -> (decode, encode)
def _rationals_from(v, n, path):
    return tuple(rational_from_json(x, f"{path}[{i}]") for i, x in enumerate(v))


def _rationals_to(v):
    return [rational_to_json(x) for x in v]


_PARAM_CODECS = {
    "field": (field_from_json, field_to_json),
    "isotopy": (isotopy_from_json, isotopy_to_json),
    "hamiltonian": (path_from_json, path_to_json),
    "H": (path_from_json, path_to_json),
    "omega": (_rationals_from, _rationals_to),
    "slopes": (_rationals_from, _rationals_to),
}


def _decode_job(raw: Dict[str, Any], index: int, n: int) -> Job:
    path = f"$.jobs[{index}]"
    params = {}
    for key, value in raw.items():
        if key in ("type", "id", "paper_claim"):
            continue
        codec = _PARAM_CODECS.get(key)
        params[key] = codec[0](value, n, f"{path}.{key}") if codec else value
    if "grid" in params:
        g = params["grid"]
        params["grid"] = GridBlock(g["n"], g["N"], tuple(float(v) for v in g["omega"]) if "omega" in g else None)
    job_id = raw.get("id", f"{index}:{raw['type']}")
    return Job(raw["type"], job_id, params, raw.get("paper_claim"))


def _encode_job(job: Job) -> Dict[str, Any]:
    out: Dict[str, Any] = {"type": job.type, "id": job.id}
    for key, value in job.params.items():
        codec = _PARAM_CODECS.get(key)
        if codec:
            out[key] = codec[1](value)
        elif isinstance(value, GridBlock):
            out[key] = _grid_to_json(value)
        else:
            out[key] = value
    if job.paper_claim is not None:
        out["paper_claim"] = job.paper_claim
    return out


def _grid_to_json(g: GridBlock) -> Dict[str, Any]:
    out: Dict[str, Any] = {"n": g.n, "N": g.N}
    if g.omega is not None:
        out["omega"] = list(g.omega)
    return out


def _semantic_checks(obj: Dict[str, Any]) -> None:
    n = obj["dimension"]
    coords = obj.get("coordinates")
    if coords is not None and len(coords) != n:
        raise ManifestError(f"{len(coords)} coordinate names for dimension {n}", "$.coordinates")
    la = obj.get("lie_algebra")
    if la is not None:
        m = la["dim"]
        for i, b in enumerate(la["brackets"]):
            for key in ("i", "j", "k"):
                if b[key] >= m:
                    raise ManifestError(f"index {b[key]} out of range for dimension {m}",
                                        f"$.lie_algebra.brackets[{i}].{key}")
        if "omega" in la and len(la["omega"]) != m:
            raise ManifestError(f"omega needs {m} entries", "$.lie_algebra.omega")
        if "coframe" in la and len(la["coframe"]) != m:
            raise ManifestError(f"coframe needs {m} one-forms", "$.lie_algebra.coframe")
    grid = obj.get("grid")
    if grid is not None and "omega" in grid and len(grid["omega"]) != grid["n"]:
        raise ManifestError(f"grid omega needs {grid['n']} entries", "$.grid.omega")
    for i, job in enumerate(obj["jobs"]):
        if job["type"] == "cohomology-ce" and la is None:
            raise ManifestError("cohomology-ce needs a lie_algebra block", f"$.jobs[{i}]")
        if job["type"] == "hodge" and grid is None and "grid" not in job:
            raise ManifestError("hodge needs a grid (manifest-level or per job)", f"$.jobs[{i}]")
        if job["type"] == "flow":
            for j, pt in enumerate(job["points"]):
                if len(pt) != n:
                    raise ManifestError(f"points must have {n} coordinates", f"$.jobs[{i}].points[{j}]")


def manifest_from_json(obj: Any) -> Manifest:
    """Validate a decoded JSON document and build the ``Manifest``."""
    errors = sorted(_validator().iter_errors(obj), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        raise ManifestError(best.message, _json_path(best.absolute_path))
    _semantic_checks(obj)
    n = obj["dimension"]
    try:
        st = obj["structure"]
        Omega = form_from_json(st["Omega"], n, 2, "$.structure.Omega")
        omega = form_from_json(st["omega"], n, 1, "$.structure.omega")
        h = coeff_from_json(st["h"], n, "$.structure.h") if "h" in st else None
        gens = tuple(affine_from_json(g, n, f"$.generators[{i}]") for i, g in enumerate(obj.get("generators", [])))
        L = LcsStructure(Omega, omega, h, gens)
        la = None
        if "lie_algebra" in obj:
            raw = obj["lie_algebra"]
            brackets: Dict[Tuple[int, int], Dict[int, Any]] = {}
            for i, b in enumerate(raw["brackets"]):
                c = rational_from_json(b["c"], f"$.lie_algebra.brackets[{i}].c")
                brackets.setdefault((b["i"], b["j"]), {})[b["k"]] = c
            try:
                spec = LieAlgebraSpec(raw["dim"], brackets)
            except ValueError as exc:
                raise DecodeError(str(exc), "$.lie_algebra.brackets") from None
            w = _rationals_from(raw["omega"], n, "$.lie_algebra.omega") if "omega" in raw else None
            coframe = None
            if "coframe" in raw:
                coframe = tuple(form_from_json(e, n, 1, f"$.lie_algebra.coframe[{i}]") for i, e in enumerate(raw["coframe"]))
            la = LieAlgebraBlock(spec, w, coframe)
        grid = None
        if "grid" in obj:
            g = obj["grid"]
            grid = GridBlock(g["n"], g["N"], tuple(float(v) for v in g["omega"]) if "omega" in g else None)
        jobs = [_decode_job(j, i, n) for i, j in enumerate(obj["jobs"])]
    except DecodeError as exc:
        raise ManifestError(exc.message, exc.path) from None
    ids = [j.id for j in jobs]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise ManifestError(f"duplicate job ids {dup}", "$.jobs")
    coords = tuple(obj.get("coordinates") or (DEFAULT_COORDINATES if n == 4 else tuple(f"x{i}" for i in range(n))))
    return Manifest(n, coords, L, la, grid, jobs, obj.get("description", ""))


def parse_manifest_text(text: str) -> Manifest:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid JSON: {exc.msg} (column {exc.colno})", "$", exc.lineno) from None
    return manifest_from_json(obj)


def parse_manifest(path) -> Manifest:
    """Read and validate a manifest file.

    Raises
    ------
    ManifestIOError
        the file cannot be read
    ManifestError
        malformed JSON, schema violation or inconsistent data
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ManifestIOError(f"cannot read {path}: {exc}") from None
    return parse_manifest_text(text)


def manifest_to_json(m: Manifest) -> Dict[str, Any]:
    """Inverse of ``manifest_from_json`` up to canonical form."""
    L = m.structure
    st: Dict[str, Any] = {"Omega": form_to_json(L.Omega), "omega": form_to_json(L.omega)}
    if L.potential is not None:
        st["h"] = coeff_to_json(L.potential)
    out: Dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    if m.description:
        out["description"] = m.description
    out.update({"dimension": m.dimension, "coordinates": list(m.coordinates), "structure": st})
    if L.generators:
        out["generators"] = [affine_to_json(g) for g in L.generators]
    if m.lie_algebra is not None:
        la = m.lie_algebra
        block: Dict[str, Any] = {
            "dim": la.spec.dim,
            "brackets": [{"i": i, "j": j, "k": k, "c": rational_to_json(c)} for i, j, k, c in la.spec.brackets_list()],
        }
        if la.omega is not None:
            block["omega"] = _rationals_to(la.omega)
        if la.coframe is not None:
            block["coframe"] = [form_to_json(e) for e in la.coframe]
        out["lie_algebra"] = block
    if m.grid is not None:
        out["grid"] = _grid_to_json(m.grid)
    out["jobs"] = [_encode_job(j) for j in m.jobs]
    return out


# -- bundled fixtures --------------------------------------------------------------


def fixture_names() -> List[str]:
    base = resources.files("lcslab").joinpath("fixtures")
    return sorted(p.name[:-5] for p in base.iterdir() if p.name.endswith(".json"))


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled manifest (``name`` with or without ``.json``)."""
    stem = name[:-5] if name.endswith(".json") else name
    if stem not in fixture_names():
        raise KeyError(f"no bundled fixture named {name!r}")
    return Path(str(resources.files("lcslab").joinpath(f"fixtures/{stem}.json")))
