"""Nehari-manifold solutions and loop continuation for indefinite
concave-convex Neumann problems."""

from .errors import (
    ConfigError,
    DepartureFailedError,
    DivergedError,
    DomainError,
    InsufficientDataError,
    NehariLoopError,
    NoAdmissibleDirectionError,
    NoRootError,
    NotConvergedError,
    SingularLinearizationError,
    StepCollapseError,
)
from .mesh import (
    CoeffSpec,
    CoeffTerm,
    DiscreteOperator,
    Grid,
    ScalarField,
    build_grid,
    integrate,
    laplacian_neumann,
    sample_coefficient,
)
from .functional import (
    EnergyTriple,
    FiberingReport,
    NehariClass,
    ProblemParams,
    cstar,
    energies,
    fibering_analyze,
    jacobian,
    lambda0_estimate,
    residual,
)
from .solve import (
    SolveReport,
    ground_state,
    nehari_lambda_sweep,
    nehari_minimize,
    newton_solve,
)
from .spectral import (
    EigenReport,
    gamma1,
    lambda_epsilon_curve,
    principal_eig_dense_oracle,
    principal_eigs_weighted,
    stability_label,
)
from .continuation import (
    Branch,
    BranchPoint,
    ContinuationSettings,
    LoopDiagnostics,
    ScalingFit,
    branch_csv_text,
    depart_from_lambda_eps,
    depart_from_zero,
    epsilon_homotopy,
    read_branch_csv,
    scaling_fit,
    start_from_solution,
    trace_branch,
    write_branch_csv,
)
from .checks import (
    BoundsReport,
    Verdict,
    newton_sweep_finds_solution,
    no_bifurcation_floor,
    nonexistence_lambda_bar,
    solvability_identity,
    subsupersolution_window,
)
from .config import RunConfig, hypothesis_audit, load_config

__all__ = [name for name in dir() if not name.startswith("_")]
