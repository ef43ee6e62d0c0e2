"""Second-order central differences in the same HV loop.

Used as the comparison scheme: only the spatial discretization differs
from the compact path. ``B`` is the identity, the line operators are
``c δ² + c' δ0`` and the mixed term uses the four-point cross stencil,
so no ghost values are needed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .explicit_stencils import Applier
from .grid import Grid, TimeGrid
from .implicit_hoc import LineOperator, factor_operator_set
from .linalg import Tridiagonal
from .model import ModelParams, TransformedCoefficients
from .timestepper import HVConfig, Scheme, SolverResult, SpatialScheme, run, with_scheme


logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class SecondOrderOperatorSet:
    """Central-difference line operators and the mixed-term weights per inner ``j``."""

    x: LineOperator
    y: LineOperator
    mixed: FloatArray


def _central(diffusion: FloatArray, drift: FloatArray, h: float) -> tuple[FloatArray, ...]:
    return (
        diffusion / h**2 - drift / (2 * h),
        -2.0 * diffusion / h**2,
        diffusion / h**2 + drift / (2 * h),
    )


def assemble_second_order(grid: Grid, coeffs: TransformedCoefficients) -> SecondOrderOperatorSet:
    y = grid.y[1:-1]
    mx, ny = grid.M - 2, grid.N - 2

    xs = _central(coeffs.c_xx(y), coeffs.c_x(y), grid.dx)
    x_op = LineOperator(
        orientation="x",
        index=np.arange(1, grid.N - 1),
        A=Tridiagonal(*(np.broadcast_to(t[np.newaxis, :], (mx, ny)).copy() for t in xs)),
        B=Tridiagonal.identity(mx, ny),
    )

    ys = _central(coeffs.c_yy(y), coeffs.c_y(y), grid.dy)
    y_op = LineOperator(
        orientation="y",
        index=np.arange(1, grid.M - 1),
        A=Tridiagonal(*(t[:, np.newaxis].copy() for t in ys)),
        B=Tridiagonal.identity(ny, 1),
    )
    return SecondOrderOperatorSet(x=x_op, y=y_op, mixed=coeffs.c_xy(y))


def second_order_applier(grid: Grid, coeffs: TransformedCoefficients) -> Applier:
    """Explicit ``F`` with three-point stencils at the inner nodes."""
    y = grid.y[1:-1][np.newaxis, :]
    dx, dy = grid.dx, grid.dy
    xx, x1 = coeffs.c_xx(y) / dx**2, coeffs.c_x(y) / (2 * dx)
    yy, y1 = coeffs.c_yy(y) / dy**2, coeffs.c_y(y) / (2 * dy)
    xy = coeffs.c_xy(y) / (4 * dx * dy)

    def apply(u: FloatArray) -> FloatArray:
        c = u[1:-1, 1:-1]
        e, w = u[2:, 1:-1], u[:-2, 1:-1]
        n, s = u[1:-1, 2:], u[1:-1, :-2]
        cross = u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]
        return (
            xx * (e - 2.0 * c + w)
            + x1 * (e - w)
            + yy * (n - 2.0 * c + s)
            + y1 * (n - s)
            + xy * cross
        )

    return apply


def second_order_scheme(
    grid: Grid, coeffs: TransformedCoefficients, hv: HVConfig, dtau: float
) -> SpatialScheme:
    ops = assemble_second_order(grid, coeffs)
    return SpatialScheme(
        operators=factor_operator_set(
            ops.x, ops.y, grid, hv.phi * dtau, scheme=Scheme.SECOND_ORDER.value
        ),
        explicit=second_order_applier(grid, coeffs),
    )


def run_baseline(
    p: ModelParams, grid: Grid, tgrid: TimeGrid, hv: HVConfig | None = None
) -> SolverResult:
    """``timestepper.run`` with the second-order discretization."""
    return run(p, grid, tgrid, with_scheme(hv or HVConfig(), Scheme.SECOND_ORDER))
