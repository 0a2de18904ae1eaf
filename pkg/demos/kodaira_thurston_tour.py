"""Walk through the Kodaira-Thurston LCS structure with exact arithmetic.

Run with ``python demos/kodaira_thurston_tour.py``.
"""

from lcslab.ce_cohomology import betti, build, kodaira_thurston_algebra
from lcslab.coeffalg import CoeffFn
from lcslab.dynamics import HamiltonianPath, Isotopy, calabi, flux, primitive_search
from lcslab.forms import coordinate_field, interior, twisted_d
from lcslab.lcs import descent_check, hamiltonian_field, volume_form
from lcslab.manifest import fixture_path, parse_manifest

X, Y, Z, W = range(4)


def section(title):
    print(f"\n== {title}")


def main():
    L = parse_manifest(fixture_path("kodaira_thurston")).structure
    literal = parse_manifest(fixture_path("kodaira_thurston_literal")).structure

    section("structure")
    print("Omega  =", L.Omega)
    print("omega  =", L.omega)
    rep = L.report()
    print("dOmega + omega^Omega =", rep.structure_residual, "->", rep.verdict)
    bad = literal.report()
    print("with omega = +dz the residual is", bad.structure_residual)

    section("volume")
    print("Omega^2/2 =", volume_form(L))

    section("descent to the quotient")
    for r in descent_check(L.Omega, L.generators):
        g = r.generator
        shift = [str(v) for v in g.b]
        extra = "" if r.residual.is_zero() else f", g*Omega - Omega = {r.residual}"
        print(f"  translation {shift}{' with shear' if g.A[0][1] else ''}: {r.classification}{extra}")

    section("the x-translation")
    dx_field = coordinate_field(4, X)
    beta = interior(dx_field, L.Omega)
    print("i_X Omega =", beta, "  d^w of it:", twisted_d(beta, L.omega))
    res = flux(L, Isotopy.autonomous(dx_field), backends=())
    print("flux of the loop =", res.form)
    search = primitive_search(L, res.form, 3, (-1, 0, 1))
    print("primitive search:", search.describe(), f"({search.unknowns} unknowns)")

    section("the Hamiltonian H = 1")
    one = CoeffFn.constant(4, 1)
    print("X_H =", hamiltonian_field(L, one, mode="symbolic"))
    cal = calabi(L, HamiltonianPath.autonomous(one))
    print("Calabi invariant =", cal, "=", float(cal))

    section("invariant (Chevalley-Eilenberg) cohomology")
    spec = kodaira_thurston_algebra()
    print("untwisted betti numbers:", betti(build(spec)))
    for sign in (1, -1):
        print(f"twisted by {sign:+d} e^3:", betti(build(spec, [0, 0, sign, 0])))


if __name__ == "__main__":
    main()
