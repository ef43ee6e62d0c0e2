"""Fourth-order compact line operators for the implicit ADI stages.

Along a line the one-dimensional operator ``g = P u'' + Q u'`` is
discretized as ``A u = B g`` with tridiagonal ``A`` and ``B``. The
fourth-order correction terms ``u'''`` and ``u''''`` are eliminated by
differentiating the equation itself, which keeps the stencil on three
points. In x the coefficients are constant along a line; in y they vary
with ``y_j`` and their derivatives enter the elimination.

Row sums of ``A`` vanish and row sums of ``B`` equal one; both include
the couplings to the wall nodes stored in ``sub[0]`` and ``sup[n-1]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..exception import ValidationError
from .grid import Grid
from .linalg import BorderedFactor, TriFactor, Tridiagonal, bordered_factor, tri_factor
from .model import ModelParams, TransformedCoefficients, dirichlet_flux, dirichlet_x


if TYPE_CHECKING:
    from .timestepper import HVConfig


logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

# Six-point extrapolation of a wall value from the five nearest interior values.
EXTRAPOLATION = np.array([5.0, -10.0, 10.0, -5.0, 1.0])


@dataclass(frozen=True)
class LineOperator:
    """Compact operator pair ``(A, B)`` on lines of one orientation.

    ``index`` lists the fixed grid index of each line (``j`` for x-lines,
    ``i`` for y-lines). Coefficient arrays have shape ``(n, L)``; y-line
    coefficients do not depend on ``i``, so one column serves every line.
    """

    orientation: Literal["x", "y"]
    index: NDArray[np.int_]
    A: Tridiagonal
    B: Tridiagonal

    @property
    def n(self) -> int:
        return self.A.n

    def implicit_matrix(self, weight: float) -> Tridiagonal:
        """``B - weight * A``."""
        return self.B.combine(self.A, weight)


@dataclass(frozen=True)
class BoundaryVector:
    """Wall contributions ``d`` so that inner rows read ``A u - B g = d``."""

    d: FloatArray

    def nonzero_rows(self) -> NDArray[np.int_]:
        return np.flatnonzero(np.any(self.d != 0, axis=1))


def _x_triples(a: FloatArray, b: FloatArray, h: float) -> tuple[FloatArray, ...]:
    """Compact triples for ``a u'' + b u' = g`` with constant ``a``, ``b``."""
    if np.any((a == 0) & (b != 0)):
        raise ValidationError("x-line operator is degenerate where v*y = 0")
    ratio = np.divide(b, a, out=np.zeros_like(b), where=a != 0)
    K = a + h * h * b * ratio / 12.0
    a_sub = K / h**2 - b / (2 * h)
    a_diag = -2.0 * K / h**2
    a_sup = K / h**2 + b / (2 * h)
    b_sub = 1.0 / 12.0 - h * ratio / 24.0
    b_diag = np.full_like(a, 5.0 / 6.0)
    b_sup = 1.0 / 12.0 + h * ratio / 24.0
    return a_sub, a_diag, a_sup, b_sub, b_diag, b_sup


def _y_triples(
    P: FloatArray,
    P1: FloatArray,
    P2: FloatArray,
    Q: FloatArray,
    Q1: FloatArray,
    Q2: FloatArray,
    h: float,
) -> tuple[FloatArray, ...]:
    """Compact triples for ``P(y) u'' + Q(y) u' = g``.

    Differentiating the equation gives ``u'''`` and ``u''''`` in terms of
    ``g``, its derivatives, ``u'`` and ``u''``; those are substituted into
    the truncation error of the central differences.
    """
    live = P != 0
    if np.any(~live & ((Q != 0) | (Q1 != 0))):
        raise ValidationError("y-line operator is degenerate where c_yy = 0")
    inv = np.divide(1.0, P, out=np.zeros_like(P), where=live)

    s3 = (Q + P1) * inv
    s4 = (Q + 2.0 * P1) * inv
    # u''' = d3_g1 g' + d3_u1 u' + d3_u2 u''
    d3_g1 = inv
    d3_u1 = -Q1 * inv
    d3_u2 = -s3
    # u'''' = g''/P + d4_g1 g' + d4_u1 u' + d4_u2 u''
    d4_g1 = -s4 * d3_g1
    d4_u1 = -Q2 * inv - s4 * d3_u1
    d4_u2 = -(2.0 * Q1 + P2) * inv - s4 * d3_u2

    hh = h * h
    K2 = P - P * hh / 12.0 * d4_u2 - Q * hh / 6.0 * d3_u2
    K1 = Q - P * hh / 12.0 * d4_u1 - Q * hh / 6.0 * d3_u1
    G1 = hh * (P * d4_g1 / 12.0 + Q * d3_g1 / 6.0)

    a_sub = K2 / hh - K1 / (2 * h)
    a_diag = -2.0 * K2 / hh
    a_sup = K2 / hh + K1 / (2 * h)
    b_sub = 1.0 / 12.0 - G1 / (2 * h)
    b_diag = np.full_like(P, 5.0 / 6.0)
    b_sup = 1.0 / 12.0 + G1 / (2 * h)
    return a_sub, a_diag, a_sup, b_sub, b_diag, b_sup


def _line_operator(
    orientation: Literal["x", "y"],
    index: ArrayLike,
    triples: tuple[FloatArray, ...],
    n: int,
) -> LineOperator:
    a_sub, a_diag, a_sup, b_sub, b_diag, b_sup = triples
    lines = 1 if orientation == "y" else len(np.atleast_1d(index))

    def shape(arr: FloatArray) -> FloatArray:
        if orientation == "x":
            return np.broadcast_to(np.reshape(arr, (1, lines)), (n, lines)).copy()
        return np.reshape(arr, (n, 1)).copy()

    return LineOperator(
        orientation=orientation,
        index=np.atleast_1d(np.asarray(index, dtype=np.int_)),
        A=Tridiagonal(shape(a_sub), shape(a_diag), shape(a_sup)),
        B=Tridiagonal(shape(b_sub), shape(b_diag), shape(b_sup)),
    )


def assemble_x_lines(grid: Grid, coeffs: TransformedCoefficients) -> LineOperator:
    """Compact x-operators for every inner y-index ``j``."""
    j = np.arange(1, grid.N - 1)
    y = grid.y[j]
    triples = _x_triples(coeffs.c_xx(y), coeffs.c_x(y), grid.dx)
    return _line_operator("x", j, triples, grid.M - 2)


def assemble_x_line(grid: Grid, coeffs: TransformedCoefficients, j: int) -> LineOperator:
    """Compact x-operator on the line at y-index ``j``."""
    if not 1 <= j <= grid.N - 2:
        raise ValidationError(f"x-line index {j} is not an inner y-index")
    y = grid.y[j : j + 1]
    triples = _x_triples(coeffs.c_xx(y), coeffs.c_x(y), grid.dx)
    return _line_operator("x", [j], triples, grid.M - 2)


def assemble_y_lines(grid: Grid, coeffs: TransformedCoefficients) -> LineOperator:
    """Compact y-operator shared by every inner x-index ``i``."""
    s = coeffs.sample(grid.y[1:-1])
    triples = _y_triples(s.c_yy, s.c_yy_1, s.c_yy_2, s.c_y, s.c_y_1, s.c_y_2, grid.dy)
    return _line_operator("y", np.arange(1, grid.M - 1), triples, grid.N - 2)


def assemble_y_line(grid: Grid, coeffs: TransformedCoefficients, i: int) -> LineOperator:
    """Compact y-operator on the line at x-index ``i``."""
    if not 1 <= i <= grid.M - 2:
        raise ValidationError(f"y-line index {i} is not an inner x-index")
    op = assemble_y_lines(grid, coeffs)
    return LineOperator("y", np.array([i]), op.A, op.B)


def boundary_vector(
    op: LineOperator,
    u_low: ArrayLike,
    u_high: ArrayLike,
    g_low: ArrayLike = 0.0,
    g_high: ArrayLike = 0.0,
) -> BoundaryVector:
    """Fold wall values of ``u`` and ``g`` into the first and last inner rows.

    ``d = b_side * g_wall - a_side * u_wall``; scalars or one value per line.
    """
    A, B = op.A, op.B
    d = np.zeros(np.broadcast_shapes(A.diag.shape, (1, np.size(u_low))))
    d[0] += B.sub[0] * np.asarray(g_low) - A.sub[0] * np.asarray(u_low)
    d[-1] += B.sup[-1] * np.asarray(g_high) - A.sup[-1] * np.asarray(u_high)
    return BoundaryVector(d)


def assemble_boundary_vector(
    grid: Grid, coeffs: TransformedCoefficients, tau: float, p: ModelParams
) -> BoundaryVector:
    """Dirichlet contributions of both x-walls to every x-line at ``tau``.

    ``g`` on a wall is the x-operator applied to the wall data, which equals
    ``u_tau`` there because the wall data do not depend on ``y``.
    """
    if not 0 <= tau <= p.T:
        raise ValidationError(f"tau={tau} outside [0, {p.T}]")
    op = assemble_x_lines(grid, coeffs)
    return boundary_vector(
        op,
        u_low=dirichlet_x("low", tau, p, grid.L1),
        u_high=dirichlet_x("high", tau, p, grid.L1),
        g_low=coeffs.scale * dirichlet_flux("low", tau, p, grid.L1),
        g_high=coeffs.scale * dirichlet_flux("high", tau, p, grid.L1),
    )


@dataclass(frozen=True)
class OperatorSet:
    """Line operators with their implicit matrices factored once.

    ``x_factor`` holds ``B_x - weight A_x`` for all x-lines; ``y_factor``
    holds ``B_y - weight A_y`` with the y-walls closed by extrapolation of
    the interior, which borders the first and last rows.
    """

    x: LineOperator
    y: LineOperator
    weight: float
    x_factor: TriFactor
    y_factor: BorderedFactor
    factorization_passes: int
    scheme: str = "high_order"


def extrapolation_border(
    matrix: Tridiagonal,
) -> tuple[Tridiagonal, FloatArray, FloatArray]:
    """Eliminate extrapolated wall values from the first and last rows.

    The couplings ``sub[0]`` and ``sup[n-1]`` multiply wall values that
    are themselves ``EXTRAPOLATION`` combinations of the five nearest
    inner values. Terms reaching the neighbouring node fold into the
    tridiagonal part; the rest form the border rows.
    """
    n = matrix.n
    if n < EXTRAPOLATION.size:
        raise ValidationError(f"Extrapolation closure needs at least 5 inner nodes, got {n}")
    sub, diag, sup = matrix.sub.copy(), matrix.diag.copy(), matrix.sup.copy()
    s_low, s_high = sub[0].copy(), sup[-1].copy()

    diag[0] += EXTRAPOLATION[0] * s_low
    sup[0] += EXTRAPOLATION[1] * s_low
    diag[-1] += EXTRAPOLATION[0] * s_high
    sub[-1] += EXTRAPOLATION[1] * s_high
    sub[0] = 0.0
    sup[-1] = 0.0

    v_low = np.zeros_like(diag)
    v_high = np.zeros_like(diag)
    for k in range(2, EXTRAPOLATION.size):
        v_low[k] = EXTRAPOLATION[k] * s_low
        v_high[n - 1 - k] = EXTRAPOLATION[k] * s_high
    return Tridiagonal(sub, diag, sup), v_low, v_high


def factor_operator_set(
    x_op: LineOperator,
    y_op: LineOperator,
    grid: Grid,
    weight: float,
    scheme: str = "high_order",
) -> OperatorSet:
    """Form and factor the implicit line matrices for ``weight = phi * dtau``."""
    passes = 0
    mx = x_op.implicit_matrix(weight)
    x_factor = tri_factor(mx.sub, mx.diag, mx.sup, coords=grid.y[x_op.index])
    passes += 1

    closed, v_low, v_high = extrapolation_border(y_op.implicit_matrix(weight))
    y_factor = bordered_factor(closed.sub, closed.diag, closed.sup, v_low, v_high)
    passes += 1

    logger.debug(
        "Factored %s operators: %d x-lines of %d, y-lines of %d, weight %g",
        scheme,
        x_op.A.lines,
        x_op.n,
        y_op.n,
        weight,
    )
    return OperatorSet(
        x=x_op,
        y=y_op,
        weight=weight,
        x_factor=x_factor,
        y_factor=y_factor,
        factorization_passes=passes,
        scheme=scheme,
    )


def assemble_operator_set(
    grid: Grid, coeffs: TransformedCoefficients, hv: HVConfig, dtau: float
) -> OperatorSet:
    """Assemble all compact lines and factor ``B - phi dtau A`` once."""
    if dtau < 0:
        raise ValidationError(f"Time step must be nonnegative, got {dtau}")
    return factor_operator_set(
        assemble_x_lines(grid, coeffs),
        assemble_y_lines(grid, coeffs),
        grid,
        hv.phi * dtau,
    )
