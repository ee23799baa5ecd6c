"""Low-rank solver for generalized Lyapunov equations A X M + M X A = B B^T."""

from ._irrlyap import (
    ConfigError,
    DimensionError,
    Error,
    LyapunovProblem,
    NumericalError,
    ParseError,
    apply_preconditioner,
    cost,
    dense_oracle_solve,
    gen_poisson,
    hessian_action,
    load_manifest,
    metric_inner,
    project_horizontal,
    relative_residual,
    residual_fro,
    riemannian_gradient,
    solve,
    solve_fixed_rank,
    write_problem,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "Error",
    "LyapunovProblem",
    "NumericalError",
    "ParseError",
    "apply_preconditioner",
    "cost",
    "dense_oracle_solve",
    "gen_poisson",
    "hessian_action",
    "load_manifest",
    "metric_inner",
    "project_horizontal",
    "relative_residual",
    "residual_fro",
    "riemannian_gradient",
    "solve",
    "solve_fixed_rank",
    "write_problem",
]
