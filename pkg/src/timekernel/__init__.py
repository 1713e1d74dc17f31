"""Exact series, transforms and grid solvers for time kernel equations."""

from .coeff_tables import (
    CoefficientTable,
    LeadingShiftTable,
    build_c_table,
    leading_shift_table,
    leading_shift_ww_check,
    power_identity_check,
)
from .errors import (
    ConsistencyError,
    DivergenceError,
    GradeError,
    NonConvergenceError,
    PreconditionError,
    TimeKernelError,
    ValidationError,
)
from .frobenius import (
    BoundaryConditionSpec,
    ShiftSpec,
    classify_symmetry,
    commutant_spec,
    conjugacy_check,
    residual_vanishes,
    solve_tke,
    tke_residual,
    toa_spec,
)
from .mtke import (
    DistributionBoundary,
    DistributionKernel,
    PiecewiseTerm,
    delta_jump_check,
    moment_family,
    mtke_classify,
    mtke_free_solution,
    mtke_ho_solution,
    weyl_transform_distribution,
)
from .phase_space import (
    ClassicalTOASeries,
    PhaseSpaceSeries,
    classical_limit,
    inverse_hamiltonian_series,
    local_toa_series,
    quantum_corrections,
    weyl_transform_sgn,
)
from .picard import Grid, GridKernel, picard_bound, picard_solve, picard_solve_mtke
from .potential import PolynomialPotential, harmonic, linear, potential_difference_expand, random_potential
from .scalar import GradedScalar
from .series import BivariatePolynomial, GradedPoly, KernelSeries, series_equal, series_evaluate
from .weights import Weight

__version__ = "0.1.0"
