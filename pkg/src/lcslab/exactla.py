"""Exact linear algebra over the rationals.

Dense matrices are lists of rows of ``Fraction``.  Ranks and determinants
use fraction-free (Bareiss) elimination on an integer-scaled copy, so no
intermediate fractions appear; solves use Gauss-Jordan over ``Fraction``.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Dict, Hashable, List, Mapping, Optional, Sequence

Matrix = List[List[Fraction]]


def as_fraction_matrix(rows: Sequence[Sequence]) -> Matrix:
    return [[Fraction(v) for v in row] for row in rows]


def _integer_rows(rows: Sequence[Sequence[Fraction]]) -> List[List[int]]:
    # scaling a row by a nonzero constant changes neither rank nor kernel
    out = []
    for row in rows:
        den = 1
        for v in row:
            den = lcm(den, Fraction(v).denominator)
        out.append([int(Fraction(v) * den) for v in row])
    return out


def bareiss_rank(rows: Sequence[Sequence]) -> int:
    """Rank of a rational matrix by fraction-free Bareiss elimination."""
    a = _integer_rows(rows)
    if not a:
        return 0
    m, n = len(a), len(a[0])
    rank = 0
    prev = 1
    for col in range(n):
        if rank == m:
            break
        pivot = next((r for r in range(rank, m) if a[r][col] != 0), None)
        if pivot is None:
            continue
        a[rank], a[pivot] = a[pivot], a[rank]
        p = a[rank][col]
        for r in range(rank + 1, m):
            arc = a[r][col]
            row_r, row_k = a[r], a[rank]
            for c in range(col + 1, n):
                # exact division is the Bareiss (Sylvester) identity
                row_r[c] = (p * row_r[c] - arc * row_k[c]) // prev
            row_r[col] = 0
        prev = p
        rank += 1
    return rank


def bareiss_det(rows: Sequence[Sequence]) -> Fraction:
    """Determinant of a square rational matrix (fraction-free elimination)."""
    n = len(rows)
    if n == 0:
        return Fraction(1)
    if any(len(r) != n for r in rows):
        raise ValueError("determinant requires a square matrix")
    scale = Fraction(1)
    a = []
    for row in rows:
        den = 1
        for v in row:
            den = lcm(den, Fraction(v).denominator)
        scale /= den
        a.append([int(Fraction(v) * den) for v in row])
    sign = 1
    prev = 1
    for k in range(n - 1):
        pivot = next((r for r in range(k, n) if a[r][k] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != k:
            a[k], a[pivot] = a[pivot], a[k]
            sign = -sign
        p = a[k][k]
        for r in range(k + 1, n):
            for c in range(k + 1, n):
                a[r][c] = (p * a[r][c] - a[r][k] * a[k][c]) // prev
            a[r][k] = 0
        prev = p
    return sign * a[n - 1][n - 1] * scale


def solve(rows: Sequence[Sequence], rhs: Sequence) -> Optional[List[Fraction]]:
    """One exact solution of ``rows @ x = rhs`` (free variables set to 0).

    Returns ``None`` when the system is inconsistent.
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    aug = [[Fraction(v) for v in rows[i]] + [Fraction(rhs[i])] for i in range(m)]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = 1 / aug[r][c]
        aug[r] = [v * inv for v in aug[r]]
        for i in range(m):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [vi - f * vr for vi, vr in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if aug[i][n] != 0:
            return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = aug[i][n]
    return x


def matvec(rows: Sequence[Sequence[Fraction]], x: Sequence[Fraction]) -> List[Fraction]:
    return [sum((a * b for a, b in zip(row, x)), Fraction(0)) for row in rows]


def matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> Matrix:
    if not a or not b:
        return [[] for _ in a]
    cols = list(zip(*b))
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in cols] for row in a]


def solve_sparse(
    equations: Sequence[Mapping[Hashable, Fraction]],
    rhs: Sequence[Fraction],
) -> Optional[Dict[Hashable, Fraction]]:
    """Exactly solve a sparse system given as ``{unknown: coefficient}`` rows.

    The system is split into blocks that share no unknowns; blocks whose
    right-hand side is identically zero are solved by zero.  Returns a dict
    holding the nonzero entries of one solution, or ``None`` if inconsistent.
    """
    parent: Dict[Hashable, Hashable] = {}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for eq in equations:
        keys = [k for k, v in eq.items() if v != 0]
        for k in keys:
            parent.setdefault(k, k)
        for k in keys[1:]:
            ra, rb = find(keys[0]), find(k)
            if ra != rb:
                parent[ra] = rb

    blocks: Dict[Hashable, List[int]] = {}
    for i, eq in enumerate(equations):
        keys = [k for k, v in eq.items() if v != 0]
        if not keys:
            if rhs[i] != 0:
                return None
            continue
        blocks.setdefault(find(keys[0]), []).append(i)

    solution: Dict[Hashable, Fraction] = {}
    for eq_ids in blocks.values():
        if all(rhs[i] == 0 for i in eq_ids):
            continue
        found = {k for i in eq_ids for k, v in equations[i].items() if v != 0}
        try:
            unknowns = sorted(found)
        except TypeError:
            unknowns = sorted(found, key=repr)
        col = {k: j for j, k in enumerate(unknowns)}
        dense = []
        for i in eq_ids:
            row = [Fraction(0)] * len(unknowns)
            for k, v in equations[i].items():
                if v != 0:
                    row[col[k]] = Fraction(v)
            dense.append(row)
        x = solve(dense, [rhs[i] for i in eq_ids])
        if x is None:
            return None
        for k, v in zip(unknowns, x):
            if v != 0:
                solution[k] = v
    return solution
