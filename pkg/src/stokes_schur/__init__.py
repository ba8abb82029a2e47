"""Structured Schur complements for the fully-staggered Stokes system.

The package assembles the staggered-grid Stokes operators on the unit
square as Kronecker products, verifies their structural identities against
dense oracles, and solves enclosed-flow problems by Schur-complement CG
with exact low-rank preconditioners.
"""

from .checks import Check, CheckReport, checks_for, run_suite
from .errors import (
    CgDivergenceError,
    DenseCapError,
    FactorizationError,
    InvalidSizeError,
    InvalidToleranceError,
    ModeMismatchError,
    StructuralError,
)
from .grid import GridAxis, StaggeredGrid, make_grid
from .linalg import (
    CgOptions,
    CgResult,
    cg_solve,
    dense_cap,
    pseudoinverse,
    rank_of,
    sym_solve,
)
from .operators import (
    BOUNDARY,
    FULL,
    OperatorSet,
    assemble_curl,
    assemble_curl_direct,
    assemble_divergence,
    assemble_laplacian_dirichlet,
    assemble_laplacian_neumann,
    assemble_perturbation,
    assemble_velocity_derivatives,
    build_operator_set,
    derivative_1d,
)
from .schur import (
    SchurRep,
    build_limiting_inverse,
    build_schur_dirichlet,
    build_schur_dirichlet_inverse,
    build_schur_neumann,
    count_nonunit_eigenvalues,
    helmholtz_split,
    laplacian_inverse_split_check,
    pressure_constant,
    schur_dense_oracle,
)
from .solver import (
    BvpConfig,
    SaddleSolution,
    StudyRow,
    build_rhs,
    iteration_study,
    lid_driven_cavity,
    solve_stokes,
    solve_stokes_with_ops,
)

__version__ = "0.1.0"

__all__ = [
    "BOUNDARY",
    "FULL",
    "BvpConfig",
    "CgDivergenceError",
    "CgOptions",
    "CgResult",
    "Check",
    "CheckReport",
    "DenseCapError",
    "FactorizationError",
    "GridAxis",
    "InvalidSizeError",
    "InvalidToleranceError",
    "ModeMismatchError",
    "OperatorSet",
    "SaddleSolution",
    "SchurRep",
    "StaggeredGrid",
    "StructuralError",
    "StudyRow",
    "assemble_curl",
    "assemble_curl_direct",
    "assemble_divergence",
    "assemble_laplacian_dirichlet",
    "assemble_laplacian_neumann",
    "assemble_perturbation",
    "assemble_velocity_derivatives",
    "build_limiting_inverse",
    "build_operator_set",
    "build_rhs",
    "build_schur_dirichlet",
    "build_schur_dirichlet_inverse",
    "build_schur_neumann",
    "cg_solve",
    "checks_for",
    "count_nonunit_eigenvalues",
    "dense_cap",
    "derivative_1d",
    "helmholtz_split",
    "iteration_study",
    "laplacian_inverse_split_check",
    "lid_driven_cavity",
    "make_grid",
    "pressure_constant",
    "pseudoinverse",
    "rank_of",
    "run_suite",
    "schur_dense_oracle",
    "solve_stokes",
    "solve_stokes_with_ops",
    "sym_solve",
]
