"""Calabi invariant against Hofer energy on the exact box model.

On ``Omega = e^{-z}(dx^dy + dw^dz)`` with ``omega = dz`` the rescaled form is
standard, so ``K = e^z H`` is an ordinary Hamiltonian.  Run with
``python demos/energy_capacity_tour.py``.
"""

from fractions import Fraction

from lcslab.coeffalg import CoeffFn
from lcslab.dynamics import HamiltonianPath, calabi_exact, energy_capacity_check, hofer_energy
from lcslab.manifest import fixture_path, parse_manifest

X, Y, Z, W = range(4)


def main():
    L = parse_manifest(fixture_path("box_exact")).structure
    e_minus_z = CoeffFn.exp_linear(4, [0, 0, -1, 0])
    x, y = CoeffFn.coordinate(4, X), CoeffFn.coordinate(4, Y)
    cases = {
        "K = x": x,
        "K = x*y": x * y,
        "K = (x - 1/2)^2 - y": (x - Fraction(1, 2)) * (x - Fraction(1, 2)) - y,
    }
    print(f"{'case':24s} {'Cal exact':>10s} {'|Cal(K-min)|':>13s} {'Vol*E':>8s}  holds")
    for name, K in cases.items():
        path = HamiltonianPath.autonomous(K * e_minus_z)
        rec = energy_capacity_check(L, path)
        print(f"{name:24s} {str(calabi_exact(L, path)):>10s} {abs(rec.calabi):13.6f} {rec.bound:8.4f}  {rec.holds}")
    one = HamiltonianPath.autonomous(CoeffFn.constant(4, 1))
    print("\nHofer energy of H = 1 (exact mode):", hofer_energy(L, one, "exact"))


if __name__ == "__main__":
    main()
