"""Harmonic forms on periodic lattices, untwisted and twisted.

Run with ``python demos/lattice_hodge_tour.py``.
"""

import numpy as np

import lcslab.lattice_hodge as lh


def main():
    print("harmonic dimensions, omega = 0 (binomial coefficients expected):")
    for n, N in ((2, 8), (3, 4), (4, 4)):
        ops = lh.build_operators(lh.Grid(n, N))
        print(f"  T^{n}, N={N}:", [lh.harmonic_dim(ops, p) for p in range(n + 1)])

    ops = lh.build_operators(lh.Grid(2, 4), [0.0, 1.0])
    print("T^2, N=4, omega=(0, 1):", [lh.harmonic_dim(ops, p) for p in range(3)])

    print("\nHodge split of a random 1-cochain on T^2 (N=16):")
    rng = np.random.default_rng(1)
    for omega in ((0.0, 0.0), (0.0, 1.0)):
        ops = lh.build_operators(lh.Grid(2, 16), omega)
        alpha = lh.Cochain(ops.grid, 1, rng.standard_normal(ops.grid.size(1)))
        split = lh.hodge_split(ops, alpha)
        a, b, h = split.parts(ops)
        print(f"  omega={omega}: |exact|={a.norm():.4f} |coexact|={b.norm():.4f} "
              f"|harmonic|={h.norm():.2e} CG iterations={split.iterations}")


if __name__ == "__main__":
    main()
