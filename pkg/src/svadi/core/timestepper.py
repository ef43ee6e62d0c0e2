"""Hundsdorfer-Verwer ADI time stepping.

One step from ``U`` at ``tau_n`` to ``tau_{n+1}``::

    Y0  = U  + dt F(U)
    Y1  = Y0 + phi dt (F1(Y1) - F1(U))
    Y2  = Y1 + phi dt (F2(Y2) - F2(U))
    Yt0 = Y0 + psi dt (F(Y2) - F(U))
    Yt1 = Yt0 + phi dt (F1(Yt1) - F1(Y2))
    Yt2 = Yt1 + phi dt (F2(Yt2) - F2(Y2))

Implicit stages are solved for the increment ``Z = Y_k - Y_{k-1}`` with
the compact relation ``A (Y_k - base) = B g`` and ``g = Z / (phi dt)``:
``(B - phi dt A) Z = phi dt A (Y_{k-1} - base)``. Every stage carries
x-walls at ``tau_{n+1}`` and y-walls extrapolated from the interior,
clipped to the no-arbitrage range of the put.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from numpy.typing import NDArray

from ..exception import InstabilityError, ValidationError
from .explicit_stencils import Applier, fourth_order_applier
from .grid import Grid, TimeGrid
from .implicit_hoc import EXTRAPOLATION, OperatorSet, assemble_operator_set
from .linalg import bordered_solve, tri_solve
from .model import (
    ModelParams,
    PriceSurface,
    TransformedCoefficients,
    dirichlet_walls,
    initial_condition,
    inverse_transform,
    no_arbitrage_bounds,
    project_to_bounds,
    smoothed_initial_condition,
    transformed_coefficients,
)


logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


class Scheme(str, Enum):
    """Spatial discretization plugged into the HV step."""

    HIGH_ORDER = "ho"
    SECOND_ORDER = "second"


@dataclass(frozen=True)
class HVConfig:
    """Weights of the HV scheme; ``psi = 1/2`` gives second order in time.

    ``smooth_payoff`` replaces the payoff near the strike by its kernel
    average at mesh scale, which removes the kink error from the
    spatial order.
    """

    phi: float = 0.5
    psi: float = 0.5
    scheme: Scheme = Scheme.HIGH_ORDER
    smooth_payoff: bool = True

    def __post_init__(self) -> None:
        if not 0 < self.phi <= 1:
            raise ValidationError(f"phi must lie in (0, 1], got {self.phi}")
        if self.psi < 0:
            raise ValidationError(f"psi must be nonnegative, got {self.psi}")


@dataclass(frozen=True)
class SpatialScheme:
    """Explicit applier and factored implicit operators of one discretization."""

    operators: OperatorSet
    explicit: Applier


@dataclass(frozen=True)
class StepContext:
    params: ModelParams
    grid: Grid
    tgrid: TimeGrid
    hv: HVConfig
    scheme: SpatialScheme


@dataclass(frozen=True)
class SolverState:
    """Field at time level ``n`` with walls consistent with ``tau_n``."""

    u: FloatArray
    n: int
    context: StepContext

    @property
    def tau(self) -> float:
        return self.context.tgrid.tau(self.n)


@dataclass
class SolveStats:
    factorization_passes: int = 0
    steps: int = 0
    stage_solves: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class SolverResult:
    """Final field of a pricing run with its setup and instrumentation."""

    u: FloatArray
    params: ModelParams
    grid: Grid
    tgrid: TimeGrid
    hv: HVConfig
    stats: SolveStats = field(compare=False)

    def surface(self) -> PriceSurface:
        """Prices at maturity, clipped into the no-arbitrage range."""
        T = self.tgrid.T
        return inverse_transform(project_to_bounds(self.u, self.grid, self.params, T), self.grid, self.params, T)


Observer = Callable[[SolverState], None]
WallBounds = tuple[FloatArray, FloatArray]


def _refresh_y_walls_inplace(u: FloatArray, bounds: WallBounds | None = None) -> None:
    inner = u[1:-1]
    low_src = inner[:, 1:6]
    high_src = inner[:, -2:-7:-1]
    inner[:, 0] = low_src @ EXTRAPOLATION
    inner[:, -1] = high_src @ EXTRAPOLATION
    if bounds is None:
        return
    lower, upper = bounds
    for col, src in ((0, low_src), (-1, high_src)):
        lo = np.minimum(lower, src.min(axis=1))
        hi = np.maximum(upper, src.max(axis=1))
        inner[:, col] = np.clip(inner[:, col], lo, hi)


def refresh_y_walls(u: FloatArray, bounds: WallBounds | None = None) -> FloatArray:
    """Set the y-wall columns from the five nearest interior columns.

    Only inner x-indices are touched; the corners belong to the Dirichlet
    x-walls. With ``bounds`` (lower and upper value per inner x-index) an
    extrapolated value is clipped into the bounds widened to the range of
    its five source values, so the wall never crosses a bound the interior
    respects.
    """
    field = np.array(u, dtype=np.float64, copy=True)
    if field.shape[1] < 7:
        raise ValidationError(f"y-wall extrapolation needs N >= 7, got {field.shape[1]}")
    _refresh_y_walls_inplace(field, bounds)
    return field


def wall_bounds(grid: Grid, p: ModelParams, tau: float) -> WallBounds:
    """No-arbitrage bounds at the inner x-nodes for the y-wall closure."""
    return no_arbitrage_bounds(grid.x[1:-1], tau, p)


def _set_x_walls(u: FloatArray, walls: tuple[float, float]) -> None:
    u[0, :] = walls[0]
    u[-1, :] = walls[1]


def _check_finite(stage: str, u: FloatArray, n: int) -> None:
    bad = ~np.isfinite(u)
    if bad.any():
        i, j = (int(k) for k in np.argwhere(bad)[0])
        raise InstabilityError(
            f"Non-finite value in stage {stage} at node ({i}, {j}), step {n}",
            stage=stage,
            node=(i, j),
            time_index=n,
        )


def _x_stage(ops: OperatorSet, prev: FloatArray, base: FloatArray, bounds: WallBounds) -> FloatArray:
    diff = (prev - base)[:, 1:-1]
    rhs = ops.weight * ops.x.A.apply_with_walls(diff)
    out = prev.copy()
    out[1:-1, 1:-1] += tri_solve(ops.x_factor, rhs)
    _refresh_y_walls_inplace(out, bounds)
    return out


def _y_stage(ops: OperatorSet, prev: FloatArray, base: FloatArray, bounds: WallBounds) -> FloatArray:
    diff = (prev - base)[1:-1, :].T
    rhs = ops.weight * ops.y.A.apply_with_walls(diff)
    out = prev.copy()
    out[1:-1, 1:-1] += bordered_solve(ops.y_factor, rhs).T
    _refresh_y_walls_inplace(out, bounds)
    return out


def _explicit_stage(
    start: FloatArray, increment: FloatArray, walls: tuple[float, float], bounds: WallBounds
) -> FloatArray:
    out = start.copy()
    out[1:-1, 1:-1] += increment
    _set_x_walls(out, walls)
    _refresh_y_walls_inplace(out, bounds)
    return out


def hv_step(state: SolverState) -> SolverState:
    """Advance one HV step, from level ``n`` to ``n + 1``."""
    ctx = state.context
    ops = ctx.scheme.operators
    F = ctx.scheme.explicit
    dt = ctx.tgrid.dtau
    n_next = state.n + 1
    tau = ctx.tgrid.tau(n_next)
    walls = dirichlet_walls(tau, ctx.params, ctx.grid)
    bounds = wall_bounds(ctx.grid, ctx.params, tau)
    U = state.u

    FU = F(U)
    y0 = _explicit_stage(U, dt * FU, walls, bounds)
    _check_finite("Y0", y0, n_next)
    y1 = _x_stage(ops, y0, U, bounds)
    _check_finite("Y1", y1, n_next)
    y2 = _y_stage(ops, y1, U, bounds)
    _check_finite("Y2", y2, n_next)

    yt0 = _explicit_stage(y0, ctx.hv.psi * dt * (F(y2) - FU), walls, bounds)
    _check_finite("Yt0", yt0, n_next)
    yt1 = _x_stage(ops, yt0, y2, bounds)
    _check_finite("Yt1", yt1, n_next)
    yt2 = _y_stage(ops, yt1, y2, bounds)
    _check_finite("Yt2", yt2, n_next)

    return SolverState(u=yt2, n=n_next, context=ctx)


def initial_field(grid: Grid, p: ModelParams, smooth: bool = True) -> FloatArray:
    """Payoff on every node, with walls at ``tau = 0``.

    With ``smooth`` the nodes within three cells of the strike carry the
    smoothed payoff.
    """
    payoff = smoothed_initial_condition(grid.x, grid.dx) if smooth else initial_condition(grid.x)
    u = np.repeat(payoff[:, np.newaxis], grid.N, axis=1)
    _set_x_walls(u, dirichlet_walls(0.0, p, grid))
    _refresh_y_walls_inplace(u, wall_bounds(grid, p, 0.0))
    return u


def high_order_scheme(
    grid: Grid, coeffs: TransformedCoefficients, hv: HVConfig, dtau: float
) -> SpatialScheme:
    return SpatialScheme(
        operators=assemble_operator_set(grid, coeffs, hv, dtau),
        explicit=fourth_order_applier(grid, coeffs),
    )


def build_scheme(
    grid: Grid, coeffs: TransformedCoefficients, hv: HVConfig, dtau: float
) -> SpatialScheme:
    if hv.scheme is Scheme.SECOND_ORDER:
        from .baseline import second_order_scheme

        return second_order_scheme(grid, coeffs, hv, dtau)
    return high_order_scheme(grid, coeffs, hv, dtau)


def run(
    p: ModelParams,
    grid: Grid,
    tgrid: TimeGrid,
    hv: HVConfig | None = None,
    observer: Observer | None = None,
    coeffs: TransformedCoefficients | None = None,
) -> SolverResult:
    """Price on ``grid`` from the payoff to ``tau = T``.

    Operators are assembled and factored once before the loop.

    Args:
        p: Model parameters.
        grid: Space mesh.
        tgrid: Time partition; ``P = 1`` returns the initial condition.
        hv: Scheme weights and spatial discretization.
        observer: Called with the state after every accepted step.
        coeffs: Coefficient functions, defaulting to those of ``p``.

    Raises:
        InstabilityError: A stage produced non-finite values.
    """
    hv = hv or HVConfig()
    coeffs = coeffs or transformed_coefficients(p)
    start = time.perf_counter()

    scheme = build_scheme(grid, coeffs, hv, tgrid.dtau)
    ctx = StepContext(params=p, grid=grid, tgrid=tgrid, hv=hv, scheme=scheme)
    state = SolverState(u=initial_field(grid, p, smooth=hv.smooth_payoff), n=0, context=ctx)
    logger.debug(
        "Running %s scheme on %dx%d mesh, %d steps", hv.scheme.value, grid.M, grid.N, tgrid.steps
    )

    for _ in range(tgrid.steps):
        state = hv_step(state)
        if observer is not None:
            observer(state)

    stats = SolveStats(
        factorization_passes=scheme.operators.factorization_passes,
        steps=tgrid.steps,
        stage_solves=4 * tgrid.steps,
        wall_time=time.perf_counter() - start,
    )
    logger.info(
        "Solved %s scheme on %dx%d mesh in %d steps (%.2fs)",
        hv.scheme.value,
        grid.M,
        grid.N,
        stats.steps,
        stats.wall_time,
    )
    return SolverResult(u=state.u, params=p, grid=grid, tgrid=tgrid, hv=hv, stats=stats)


def with_scheme(hv: HVConfig, scheme: Scheme) -> HVConfig:
    return replace(hv, scheme=scheme)
