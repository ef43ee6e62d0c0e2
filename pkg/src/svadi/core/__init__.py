"""Numerical core: model, meshes, compact operators and the HV solver."""

from .baseline import run_baseline
from .experiments import (
    convergence_study,
    error_norms,
    fit_slope,
    gamma_order_table,
    heston_check,
    heston_fourier_price,
    pair_orders,
    stability_sweep,
    temporal_order_study,
)
from .explicit_stencils import apply_F, apply_F0, apply_F1, apply_F2, extend_with_ghosts
from .grid import (
    DEFAULT_DOMAIN,
    Domain,
    Grid,
    TimeGrid,
    build_grid,
    build_nested_grids,
    build_time_grid,
    inner_index_map,
)
from .implicit_hoc import (
    LineOperator,
    OperatorSet,
    assemble_boundary_vector,
    assemble_operator_set,
    assemble_x_line,
    assemble_y_line,
)
from .linalg import tri_apply, tri_factor, tri_solve
from .model import (
    ModelParams,
    ModelVariant,
    TransformedCoefficients,
    dirichlet_x,
    initial_condition,
    inverse_transform,
    no_arbitrage_bounds,
    price_at,
    smoothed_initial_condition,
    transformed_coefficients,
)
from .timestepper import HVConfig, Scheme, SolverResult, hv_step, run


__all__ = [
    "ModelParams",
    "ModelVariant",
    "TransformedCoefficients",
    "transformed_coefficients",
    "initial_condition",
    "smoothed_initial_condition",
    "no_arbitrage_bounds",
    "dirichlet_x",
    "inverse_transform",
    "price_at",
    "Grid",
    "TimeGrid",
    "Domain",
    "DEFAULT_DOMAIN",
    "build_grid",
    "build_nested_grids",
    "build_time_grid",
    "inner_index_map",
    "LineOperator",
    "OperatorSet",
    "assemble_x_line",
    "assemble_y_line",
    "assemble_boundary_vector",
    "assemble_operator_set",
    "extend_with_ghosts",
    "apply_F",
    "apply_F0",
    "apply_F1",
    "apply_F2",
    "tri_factor",
    "tri_solve",
    "tri_apply",
    "HVConfig",
    "Scheme",
    "SolverResult",
    "hv_step",
    "run",
    "run_baseline",
    "convergence_study",
    "stability_sweep",
    "gamma_order_table",
    "temporal_order_study",
    "heston_fourier_price",
    "heston_check",
    "error_norms",
    "fit_slope",
    "pair_orders",
]
