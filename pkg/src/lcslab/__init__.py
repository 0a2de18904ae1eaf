"""lcslab: exact and lattice computations for locally conformally symplectic structures.

Submodules
----------
coeffalg        exact scalars ``sum q e^r`` and poly-exp functions on R^n
forms           differential forms, d, d^omega, interior and Lie derivatives, pullbacks
lcs             structure validation, volume, sharp, Hamiltonian fields, descent
ce_cohomology   twisted Chevalley-Eilenberg complex over Q
lattice_hodge   twisted Hodge theory on periodic grids
dynamics        flux, Calabi, Hofer energies, RK4 flows
manifest/runner/cli   manifest-driven batch front end
"""

from .coeffalg import CoeffFn, ExpScalar, as_fraction, eval_numeric
from .forms import (
    AffineMap,
    Form,
    NotClosedError,
    VectorField,
    coordinate_field,
    ext_d,
    interior,
    lie,
    lie_twisted,
    pullback_form,
    twisted_d,
    wedge,
)
from .lcs import (
    LcsStructure,
    ValidationReport,
    conformal_factor,
    descent_check,
    hamiltonian_field,
    integrate_top,
    is_strict_lcs,
    rescale,
    sharp,
    validate,
    volume_form,
)
from .dynamics import (
    HamiltonianPath,
    Isotopy,
    calabi,
    calabi_exact,
    energy_capacity_check,
    flow,
    flux,
    flux_vanishing_test,
    hofer_energy,
    primitive_search,
)

__version__ = "0.1.0"

__all__ = [
    "CoeffFn", "ExpScalar", "as_fraction", "eval_numeric",
    "AffineMap", "Form", "NotClosedError", "VectorField", "coordinate_field",
    "ext_d", "interior", "lie", "lie_twisted", "pullback_form", "twisted_d", "wedge",
    "LcsStructure", "ValidationReport", "conformal_factor", "descent_check", "hamiltonian_field",
    "integrate_top", "is_strict_lcs", "rescale", "sharp", "validate", "volume_form",
    "HamiltonianPath", "Isotopy", "calabi", "calabi_exact", "energy_capacity_check", "flow",
    "flux", "flux_vanishing_test", "hofer_energy", "primitive_search",
]
