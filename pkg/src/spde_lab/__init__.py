"""Positivity-preserving Lie-Trotter splitting for nonlinear stochastic
heat equations driven by a scalar Brownian motion, with classical
comparator integrators and Monte Carlo experiment drivers."""

__version__ = "0.1.0"

from .mesh import Grid, GridField, InitialData, min_value, sample_initial, sup_norm
from .heat_operator import HeatOperator, PositivityDiagnosticsError
from .noise_paths import BrownianPath, coarsen_increments, sample_path
from .nonlinearity import (
    Nonlinearity,
    NonlinearityKind,
    eval_f,
    eval_g,
    from_name,
    linear,
    log1p,
    rational,
    sine_plus,
    zero,
)
from .integrators import (
    IntegratorKind,
    PathRecord,
    StepContext,
    exact_linear_solution,
    run_path,
    step_em,
    step_lt,
    step_sem,
    step_sexp,
)
from .experiments import (
    CensusConfig,
    ConvergenceConfig,
    ExperimentReport,
    mean_square_error_study,
    merge_reports,
    mesh_independence_study,
    moment_bound_study,
    positivity_census,
    write_report,
)

__all__ = [
    "Grid",
    "GridField",
    "InitialData",
    "sample_initial",
    "sup_norm",
    "min_value",
    "HeatOperator",
    "PositivityDiagnosticsError",
    "BrownianPath",
    "sample_path",
    "coarsen_increments",
    "Nonlinearity",
    "NonlinearityKind",
    "linear",
    "rational",
    "sine_plus",
    "log1p",
    "zero",
    "from_name",
    "eval_f",
    "eval_g",
    "IntegratorKind",
    "StepContext",
    "PathRecord",
    "run_path",
    "step_lt",
    "step_em",
    "step_sem",
    "step_sexp",
    "exact_linear_solution",
    "CensusConfig",
    "ConvergenceConfig",
    "ExperimentReport",
    "positivity_census",
    "mean_square_error_study",
    "mesh_independence_study",
    "moment_bound_study",
    "write_report",
    "merge_reports",
    "__version__",
]
