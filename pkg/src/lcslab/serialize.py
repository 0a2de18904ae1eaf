"""JSON codecs for exact values.

Rationals travel as decimal strings (``"-3/2"``, ``"0.25"`` and plain
integers are accepted on input; output is always ``str(Fraction)``).

* ExpScalar: ``{"terms": [{"q": .., "r": ..}], "float": ..}``
* CoeffFn: a list of ``{"q", "powers", "k", "r"}`` records, or a bare
  rational for a constant
* Form: a list of ``{"indices": [..], "coeff": <CoeffFn>}`` records; unsorted
  indices are normalised with the permutation sign
* VectorField: a list of ``n`` CoeffFn literals
* AffineMap: ``{"A": [[..]], "b": [..]}``
* Isotopy / HamiltonianPath: lists of ``{"t_power": k, "field"|"coeff": ..}``
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Dict, List, Optional

from .coeffalg import CoeffFn, ExpScalar, as_fraction
from .dynamics import HamiltonianPath, Isotopy
from .forms import AffineMap, Form, VectorField

__all__ = [
    "DecodeError",
    "rational_to_json",
    "rational_from_json",
    "expscalar_to_json",
    "expscalar_from_json",
    "coeff_to_json",
    "coeff_from_json",
    "form_to_json",
    "form_from_json",
    "field_to_json",
    "field_from_json",
    "affine_to_json",
    "affine_from_json",
    "isotopy_to_json",
    "isotopy_from_json",
    "path_to_json",
    "path_from_json",
]


class DecodeError(ValueError):
    """Malformed literal; ``path`` locates it inside the enclosing document."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


def rational_to_json(q) -> str:
    return str(as_fraction(q))


def rational_from_json(v, path: str = "$") -> Fraction:
    if isinstance(v, float):
        raise DecodeError("floats are not accepted for exact data; use a decimal string", path)
    try:
        return as_fraction(v)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise DecodeError(f"not a rational: {v!r} ({exc})", path) from None


def expscalar_to_json(s: ExpScalar) -> Dict[str, Any]:
    return {
        "terms": [{"q": rational_to_json(q), "r": rational_to_json(r)} for q, r in s.terms],
        "float": float(s),
    }


def expscalar_from_json(obj, path: str = "$") -> ExpScalar:
    if not isinstance(obj, dict) or not isinstance(obj.get("terms"), list):
        raise DecodeError("expected {'terms': [...]}", path)
    terms = []
    for i, t in enumerate(obj["terms"]):
        p = f"{path}.terms[{i}]"
        if not isinstance(t, dict):
            raise DecodeError("expected a term record", p)
        terms.append((rational_from_json(t.get("q"), p + ".q"), rational_from_json(t.get("r", 0), p + ".r")))
    return ExpScalar(terms)


# -- CoeffFn ---------------------------------------------------------------


def coeff_to_json(f: CoeffFn) -> List[Dict[str, Any]]:
    out = []
    for (powers, kvec, r), q in f.items():
        out.append({
            "q": rational_to_json(q),
            "powers": list(powers),
            "k": [rational_to_json(k) for k in kvec],
            "r": rational_to_json(r),
        })
    return out


def coeff_from_json(obj, n: int, path: str = "$") -> CoeffFn:
    if isinstance(obj, (int, str)) and not isinstance(obj, bool):
        return CoeffFn.constant(n, rational_from_json(obj, path))
    if not isinstance(obj, list):
        raise DecodeError("expected a list of term records or a rational", path)
    f = CoeffFn.zero(n)
    for i, t in enumerate(obj):
        p = f"{path}[{i}]"
        if not isinstance(t, dict):
            raise DecodeError("expected a term record", p)
        unknown = set(t) - {"q", "powers", "k", "r"}
        if unknown:
            raise DecodeError(f"unknown keys {sorted(unknown)}", p)
        powers = t.get("powers", [0] * n)
        kvec = t.get("k", [0] * n)
        if not isinstance(powers, list) or len(powers) != n:
            raise DecodeError(f"'powers' must list {n} integers", p + ".powers")
        if any(not isinstance(a, int) or isinstance(a, bool) or a < 0 for a in powers):
            raise DecodeError("powers must be non-negative integers", p + ".powers")
        if not isinstance(kvec, list) or len(kvec) != n:
            raise DecodeError(f"'k' must list {n} rationals", p + ".k")
        q = rational_from_json(t.get("q"), p + ".q")
        r = rational_from_json(t.get("r", 0), p + ".r")
        k = [rational_from_json(v, f"{p}.k[{j}]") for j, v in enumerate(kvec)]
        f = f + CoeffFn(n, [(ExpScalar.exp(r, q), powers, k)])
    return f


# -- forms and fields ----------------------------------------------------------


def form_to_json(alpha: Form) -> List[Dict[str, Any]]:
    return [{"indices": list(idx), "coeff": coeff_to_json(f)} for idx, f in alpha.items()]


def form_from_json(obj, n: int, p: Optional[int] = None, path: str = "$") -> Form:
    """Decode a form literal; ``p`` is required when the literal is empty."""
    if not isinstance(obj, list):
        raise DecodeError("expected a list of {indices, coeff} records", path)
    degrees = set()
    coeffs = []
    for i, rec in enumerate(obj):
        q = f"{path}[{i}]"
        if not isinstance(rec, dict) or "indices" not in rec or "coeff" not in rec:
            raise DecodeError("expected {indices, coeff}", q)
        idx = rec["indices"]
        if not isinstance(idx, list) or any(not isinstance(j, int) or isinstance(j, bool) for j in idx):
            raise DecodeError("indices must be a list of integers", q + ".indices")
        if any(not 0 <= j < n for j in idx):
            raise DecodeError(f"index out of range for dimension {n}", q + ".indices")
        degrees.add(len(idx))
        coeffs.append((tuple(idx), coeff_from_json(rec["coeff"], n, q + ".coeff")))
    if p is not None:
        degrees.add(p)
    if len(degrees) > 1:
        raise DecodeError(f"mixed degrees {sorted(degrees)}", path)
    if not degrees:
        raise DecodeError("cannot infer the degree of an empty form", path)
    deg = degrees.pop()
    out = Form.zero(n, deg)
    for idx, f in coeffs:
        out = out + Form(n, deg, {idx: f})
    return out


def field_to_json(X: VectorField) -> List[Any]:
    return [coeff_to_json(X[i]) for i in range(X.n)]


def field_from_json(obj, n: int, path: str = "$") -> VectorField:
    if not isinstance(obj, list) or len(obj) != n:
        raise DecodeError(f"a vector field lists {n} component functions", path)
    return VectorField([coeff_from_json(c, n, f"{path}[{i}]") for i, c in enumerate(obj)])


def affine_to_json(g: AffineMap) -> Dict[str, Any]:
    return {"A": [[rational_to_json(v) for v in row] for row in g.A], "b": [rational_to_json(v) for v in g.b]}


def affine_from_json(obj, n: int, path: str = "$") -> AffineMap:
    if not isinstance(obj, dict) or "A" not in obj or "b" not in obj:
        raise DecodeError("expected {A, b}", path)
    A, b = obj["A"], obj["b"]
    if not isinstance(A, list) or len(A) != n or any(not isinstance(r, list) or len(r) != n for r in A):
        raise DecodeError(f"A must be {n}x{n}", path + ".A")
    if not isinstance(b, list) or len(b) != n:
        raise DecodeError(f"b must have {n} entries", path + ".b")
    A = [[rational_from_json(v, f"{path}.A[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(A)]
    b = [rational_from_json(v, f"{path}.b[{i}]") for i, v in enumerate(b)]
    try:
        return AffineMap(A, b)
    except ValueError as exc:
        raise DecodeError(str(exc), path) from None


# -- time-dependent data ---------------------------------------------------------


def _t_power(rec, path):
    k = rec.get("t_power", 0)
    if not isinstance(k, int) or isinstance(k, bool) or k < 0:
        raise DecodeError("t_power must be a non-negative integer", path + ".t_power")
    return k


def isotopy_to_json(iso: Isotopy) -> List[Dict[str, Any]]:
    return [{"t_power": k, "field": field_to_json(X)} for k, X in iso.terms.items()]


def isotopy_from_json(obj, n: int, path: str = "$") -> Isotopy:
    if not isinstance(obj, list):
        raise DecodeError("expected a list of {t_power, field}", path)
    terms: Dict[int, VectorField] = {}
    for i, rec in enumerate(obj):
        q = f"{path}[{i}]"
        if not isinstance(rec, dict) or "field" not in rec:
            raise DecodeError("expected {t_power, field}", q)
        k = _t_power(rec, q)
        X = field_from_json(rec["field"], n, q + ".field")
        terms[k] = terms[k] + X if k in terms else X
    return Isotopy(terms or {0: VectorField.zero(n)})


def path_to_json(path_: HamiltonianPath) -> List[Dict[str, Any]]:
    return [{"t_power": k, "coeff": coeff_to_json(H)} for k, H in path_.terms.items()]


def path_from_json(obj, n: int, path: str = "$") -> HamiltonianPath:
    if not isinstance(obj, list):
        raise DecodeError("expected a list of {t_power, coeff}", path)
    terms: Dict[int, CoeffFn] = {}
    for i, rec in enumerate(obj):
        q = f"{path}[{i}]"
        if not isinstance(rec, dict) or "coeff" not in rec:
            raise DecodeError("expected {t_power, coeff}", q)
        k = _t_power(rec, q)
        H = coeff_from_json(rec["coeff"], n, q + ".coeff")
        terms[k] = terms[k] + H if k in terms else H
    return HamiltonianPath(terms or {0: CoeffFn.zero(n)})
