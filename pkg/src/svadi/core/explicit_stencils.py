"""Explicit fourth-order evaluation of the split operators.

``F1`` differentiates along x, ``F2`` along y and ``F0`` is the mixed
term; each is evaluated at the inner nodes with five-point central
stencils. Nodes next to the walls need values one cell outside the
domain, which come from a ghost ring filled by extrapolation.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..exception import ValidationError
from .grid import Grid
from .model import TransformedCoefficients


logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
Applier = Callable[[FloatArray], FloatArray]

OFFSETS = (-2, -1, 0, 1, 2)
FIRST = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
SECOND = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
GHOST = np.array([5.0, -10.0, 10.0, -5.0, 1.0])


@dataclass(frozen=True)
class ExtendedField:
    """Field of shape ``(M, N)`` padded with one ghost cell on every side."""

    values: FloatArray

    @property
    def interior(self) -> FloatArray:
        return self.values[1:-1, 1:-1]

    @property
    def shape(self) -> tuple[int, int]:
        M, N = self.values.shape
        return M - 2, N - 2

    def shifted(self, a: int, b: int) -> FloatArray:
        """Values at ``(i + a, j + b)`` for every inner node ``(i, j)``."""
        M, N = self.shape
        return self.values[2 + a : M + a, 2 + b : N + b]


def _diagonal(u: FloatArray, di: int, dj: int, i0: int, j0: int) -> FloatArray:
    return np.array([u[i0 + k * di, j0 + k * dj] for k in range(GHOST.size)])


def extend_with_ghosts(u: FloatArray) -> ExtendedField:
    """Pad ``u`` with ghost values extrapolated from five interior points.

    Edge ghosts extrapolate along the normal; corner ghosts along the
    diagonal.
    """
    field = np.asarray(u, dtype=np.float64)
    M, N = field.shape
    if M < 6 or N < 6:
        raise ValidationError(f"Ghost extrapolation needs a 6x6 field, got {M}x{N}")

    ext = np.empty((M + 2, N + 2))
    ext[1:-1, 1:-1] = field
    ext[0, 1:-1] = np.tensordot(GHOST, field[:5], axes=1)
    ext[-1, 1:-1] = np.tensordot(GHOST, field[-1:-6:-1], axes=1)
    ext[1:-1, 0] = np.tensordot(field[:, :5], GHOST, axes=1)
    ext[1:-1, -1] = np.tensordot(field[:, -1:-6:-1], GHOST, axes=1)
    ext[0, 0] = GHOST @ _diagonal(field, 1, 1, 0, 0)
    ext[0, -1] = GHOST @ _diagonal(field, 1, -1, 0, N - 1)
    ext[-1, 0] = GHOST @ _diagonal(field, -1, 1, M - 1, 0)
    ext[-1, -1] = GHOST @ _diagonal(field, -1, -1, M - 1, N - 1)
    return ExtendedField(ext)


def _inner_y(grid: Grid) -> FloatArray:
    return grid.y[1:-1][np.newaxis, :]


def _line_sum(ext: ExtendedField, weights: FloatArray, axis: int) -> FloatArray:
    total: FloatArray | float = 0.0
    for w, k in zip(weights, OFFSETS, strict=True):
        if w == 0:
            continue
        total = total + w * (ext.shifted(k, 0) if axis == 0 else ext.shifted(0, k))
    return np.asarray(total)


def _cross_sum(ext: ExtendedField) -> FloatArray:
    total: FloatArray | float = 0.0
    for wa, a in zip(FIRST, OFFSETS, strict=True):
        for wb, b in zip(FIRST, OFFSETS, strict=True):
            if wa == 0 or wb == 0:
                continue
            total = total + wa * wb * ext.shifted(a, b)
    return np.asarray(total)


def apply_F1(u: ExtendedField, grid: Grid, coeffs: TransformedCoefficients) -> FloatArray:
    """``c_xx u_xx + c_x u_x`` at the inner nodes."""
    y = _inner_y(grid)
    dx = grid.dx
    return coeffs.c_xx(y) * _line_sum(u, SECOND, 0) / dx**2 + coeffs.c_x(y) * _line_sum(
        u, FIRST, 0
    ) / dx


def apply_F2(u: ExtendedField, grid: Grid, coeffs: TransformedCoefficients) -> FloatArray:
    """``c_yy u_yy + c_y u_y`` at the inner nodes."""
    y = _inner_y(grid)
    dy = grid.dy
    return coeffs.c_yy(y) * _line_sum(u, SECOND, 1) / dy**2 + coeffs.c_y(y) * _line_sum(
        u, FIRST, 1
    ) / dy


def apply_F0(u: ExtendedField, grid: Grid, coeffs: TransformedCoefficients) -> FloatArray:
    """``c_xy u_xy`` at the inner nodes, as the product of two first-derivative stencils."""
    return coeffs.c_xy(_inner_y(grid)) * _cross_sum(u) / (grid.dx * grid.dy)


def apply_F(
    u: FloatArray,
    grid: Grid,
    coeffs: TransformedCoefficients,
    walls: tuple[float, float] | None = None,
) -> FloatArray:
    """``F0 + F1 + F2`` at the inner nodes of a field that includes its walls.

    ``walls`` are the low and high x-wall values at the field's time
    level; when given they overwrite rows ``0`` and ``M-1`` of a copy of
    ``u`` before the ghosts are filled.
    """
    field = np.asarray(u, dtype=np.float64)
    if walls is not None:
        field = field.copy()
        field[0, :], field[-1, :] = walls
    ext = extend_with_ghosts(field)
    return apply_F0(ext, grid, coeffs) + apply_F1(ext, grid, coeffs) + apply_F2(ext, grid, coeffs)


def fourth_order_applier(grid: Grid, coeffs: TransformedCoefficients) -> Applier:
    """``apply_F`` with the coefficient columns sampled once for a grid."""
    y = _inner_y(grid)
    dx, dy = grid.dx, grid.dy
    xx = coeffs.c_xx(y) / dx**2
    x1 = coeffs.c_x(y) / dx
    yy = coeffs.c_yy(y) / dy**2
    y1 = coeffs.c_y(y) / dy
    xy = coeffs.c_xy(y) / (dx * dy)

    def apply(u: FloatArray) -> FloatArray:
        ext = extend_with_ghosts(u)
        return (
            xy * _cross_sum(ext)
            + xx * _line_sum(ext, SECOND, 0)
            + x1 * _line_sum(ext, FIRST, 0)
            + yy * _line_sum(ext, SECOND, 1)
            + y1 * _line_sum(ext, FIRST, 1)
        )

    return apply
