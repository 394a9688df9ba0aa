"""Numerical engine for the exact closed master equation of Gaussian,
trace-preserving, completely positive non-Markovian dynamics.

The package builds the nonlocal kernel series of the memory expansion,
reduces it to time-local coefficients for linear systems, propagates
density matrices and Gaussian moments, and validates everything against
a brute-force system-plus-modes reference.
"""

from .bath import (
    CorrelationKernel,
    make_discrete_modes,
    make_exponential,
    make_qmupl_matrix,
    make_white_noise_approximant,
)
from .coefficients import (
    MECoefficients,
    build_ab_tables,
    coefficients_dephasing,
    coefficients_linear,
    coefficients_nondissipative,
    coefficients_qmupl,
    kossakowski_form,
    write_coefficients_csv,
)
from .grids import TimeGrid, integrate_1d, integrate_triangular, make_grid
from .oracle import JointModel, build_joint, compare_with_me, evolve_joint
from .propagate import (
    DensityMatrix,
    GaussianMoments,
    Trajectory,
    diagnostics,
    evolve,
    evolve_moments,
    me_rhs,
    trace_distance,
)
from .series import ABKernels, KernelTable, SeriesConfig, assemble_AB
from .system import (
    CommutatorKernel,
    LinearSystem,
    PropagatorKernels,
    commutator_kernel,
    fock_operators,
    harmonic_kernels,
    qmupl_kernels,
    quadratic_hamiltonian,
    zero_commutator,
)

__version__ = "0.1.0"

__all__ = [
    "CorrelationKernel",
    "make_exponential",
    "make_discrete_modes",
    "make_qmupl_matrix",
    "make_white_noise_approximant",
    "TimeGrid",
    "make_grid",
    "integrate_1d",
    "integrate_triangular",
    "LinearSystem",
    "PropagatorKernels",
    "CommutatorKernel",
    "harmonic_kernels",
    "qmupl_kernels",
    "commutator_kernel",
    "zero_commutator",
    "fock_operators",
    "quadratic_hamiltonian",
    "SeriesConfig",
    "KernelTable",
    "ABKernels",
    "assemble_AB",
    "MECoefficients",
    "build_ab_tables",
    "coefficients_linear",
    "coefficients_nondissipative",
    "coefficients_qmupl",
    "coefficients_dephasing",
    "kossakowski_form",
    "write_coefficients_csv",
    "DensityMatrix",
    "GaussianMoments",
    "Trajectory",
    "me_rhs",
    "evolve",
    "evolve_moments",
    "diagnostics",
    "trace_distance",
    "JointModel",
    "build_joint",
    "evolve_joint",
    "compare_with_me",
]
