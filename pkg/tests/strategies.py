"""Hypothesis strategies for exact objects (small supports keep runs fast)."""

from fractions import Fraction
from itertools import combinations

from hypothesis import strategies as st

from lcslab.coeffalg import CoeffFn, ExpScalar
from lcslab.exactla import bareiss_det
from lcslab.forms import AffineMap, Form, VectorField, ext_d

small_q = st.fractions(min_value=-3, max_value=3, max_denominator=3).filter(lambda q: q != 0)
slope = st.sampled_from([Fraction(-1), Fraction(0), Fraction(1), Fraction(1, 2)])


def coeff_fns(n, max_terms=2, max_degree=2, exps=True):
    term = st.tuples(
        st.builds(lambda q, r: ExpScalar.exp(r, q), small_q, st.sampled_from([0, 0, 1])),
        st.lists(st.integers(0, n - 1), max_size=max_degree).map(lambda axes: [axes.count(i) for i in range(n)]),
        st.lists(slope if exps else st.just(Fraction(0)), min_size=n, max_size=n),
    )
    return st.lists(term, min_size=0, max_size=max_terms).map(lambda ts: CoeffFn(n, ts))


def forms(n, p=None, max_entries=2, **kw):
    degree = st.integers(0, n) if p is None else st.just(p)

    def build(p):
        keys = list(combinations(range(n), p))
        return st.dictionaries(st.sampled_from(keys), coeff_fns(n, **kw), max_size=min(max_entries, len(keys))).map(
            lambda d: Form(n, p, d))

    return degree.flatmap(build)


def vector_fields(n, **kw):
    return st.lists(coeff_fns(n, **kw), min_size=n, max_size=n).map(VectorField)


def constant_one_forms(n):
    return st.lists(st.fractions(-2, 2, max_denominator=2), min_size=n, max_size=n).map(
        lambda c: Form(n, 1, {(i,): v for i, v in enumerate(c)}))


def closed_one_forms(n):
    """Closed by construction: constant coefficients, or dh for a random h."""
    return st.one_of(constant_one_forms(n), coeff_fns(n).map(lambda h: ext_d(Form.function(h))))


def affine_maps(n):
    entry = st.integers(-2, 2)
    mats = st.lists(st.lists(entry, min_size=n, max_size=n), min_size=n, max_size=n).filter(lambda A: bareiss_det(A) != 0)
    return st.builds(AffineMap, mats, st.lists(st.fractions(-2, 2, max_denominator=2), min_size=n, max_size=n))


def affine_functions(n):
    """``h = c + <k, x>`` with rational data."""
    return st.tuples(st.fractions(-2, 2, max_denominator=2), st.lists(st.fractions(-2, 2, max_denominator=2), min_size=n, max_size=n)).map(
        lambda ck: CoeffFn.constant(n, ck[0]) + sum((CoeffFn.coordinate(n, i) * v for i, v in enumerate(ck[1])), CoeffFn.zero(n)))
