"""Shared builders for the test suite.

The Kodaira-Thurston data is written out by hand here (not loaded from the
bundled manifests) so that the manifest tests can compare against it.
"""

from fractions import Fraction

import pytest
from hypothesis import settings

settings.register_profile("lcslab", deadline=None, database=None, print_blob=True)
settings.load_profile("lcslab")

from lcslab.coeffalg import CoeffFn
from lcslab.forms import AffineMap, Form, coordinate_field
from lcslab.lcs import LcsStructure

N4 = 4
X, Y, Z, W = range(4)


def ez(sign=1, n=N4):
    """``e^{sign z}``."""
    k = [0] * n
    k[Z] = sign
    return CoeffFn.exp_linear(n, k)


def kt_Omega(sign=1):
    """``e^{sign z} dx^dy + dw^dz``."""
    return Form(N4, 2, {(X, Y): ez(sign), (W, Z): 1})


def kt_generators():
    I = [[int(i == j) for j in range(4)] for i in range(4)]
    shear = [[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    return (
        AffineMap(I, [1, 0, 0, 0]),
        AffineMap(I, [0, 1, 0, 0]),
        AffineMap(I, [0, 0, 1, 0]),
        AffineMap(shear, [0, 0, 0, 1]),
    )


def kt(lee_sign=-1, generators=True):
    """Corrected pair (lee_sign=-1) or the printed pair (lee_sign=+1)."""
    omega = Form.basis(N4, Z, coeff=lee_sign)
    return LcsStructure(kt_Omega(), omega, None, kt_generators() if generators else ())


def box_model():
    """``Omega = e^{-z}(dx^dy + dw^dz)``, ``omega = dz = dh`` with ``h = z``."""
    Omega = Form(N4, 2, {(X, Y): ez(-1), (W, Z): ez(-1)})
    return LcsStructure(Omega, Form.basis(N4, Z), CoeffFn.coordinate(N4, Z))


def standard(n=N4):
    """``sum dx_{2i} ^ dx_{2i+1}`` with zero Lee form."""
    return LcsStructure(Form(n, 2, {(2 * i, 2 * i + 1): 1 for i in range(n // 2)}), Form.zero(n, 1))


def dx(i, n=N4, coeff=1):
    return Form.basis(n, i, coeff=coeff)


def d_(i, n=N4, coeff=1):
    return coordinate_field(n, i, coeff)


@pytest.fixture
def KT():
    return kt()


@pytest.fixture
def KT_literal():
    return kt(+1)


@pytest.fixture
def BOX():
    return box_model()


F = Fraction


# -- acceptance reporting ------------------------------------------------------------
# Tests marked ``@pytest.mark.criterion(k, title)`` get a one-line verdict in
# the terminal summary.

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "ran": False, "time": 0.0})
    if rep.when == "call":
        entry["ran"] = True
        entry["time"] += rep.duration
    if rep.failed or rep.skipped and rep.when == "call":
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        verdict = "PASS" if e["passed"] and e["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {e['title']}  ({e['time']:.2f} s)")
