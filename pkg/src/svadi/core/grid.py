"""Truncated space mesh and uniform time partition.

Fields are stored as arrays of shape ``(M, N)`` indexed ``u[i, j]`` with
``i`` along ``x`` and ``j`` along ``y``; rows ``i = 0, M-1`` are the
Dirichlet x-walls and columns ``j = 0, N-1`` the extrapolated y-walls.
All indices are 0-based.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np
from numpy.typing import NDArray

from ..exception import ValidationError


logger = logging.getLogger(__name__)

MIN_NODES = 7
STRIKE_TOL = 1e-12
_CEIL_SLACK = 1e-9


@dataclass(frozen=True)
class Grid:
    """Rectangular mesh on ``[L1, K1] x [L2, K2]`` with ``M x N`` nodes."""

    L1: float
    K1: float
    L2: float
    K2: float
    M: int
    N: int
    h: float

    def __post_init__(self) -> None:
        if not self.L1 < self.K1:
            raise ValidationError(f"Grid requires L1 < K1, got {self.L1} >= {self.K1}")
        if not 0 < self.L2 < self.K2:
            raise ValidationError(
                f"Grid requires 0 < L2 < K2, got L2={self.L2}, K2={self.K2}"
            )
        if self.M < MIN_NODES or self.N < MIN_NODES:
            raise ValidationError(
                f"Grid needs at least {MIN_NODES} nodes per direction, got M={self.M}, N={self.N}"
            )

    @property
    def dx(self) -> float:
        return (self.K1 - self.L1) / (self.M - 1)

    @property
    def dy(self) -> float:
        return (self.K2 - self.L2) / (self.N - 1)

    @property
    def x(self) -> NDArray[np.float64]:
        return np.linspace(self.L1, self.K1, self.M)

    @property
    def y(self) -> NDArray[np.float64]:
        return np.linspace(self.L2, self.K2, self.N)

    @property
    def shape(self) -> tuple[int, int]:
        return self.M, self.N

    @property
    def inner(self) -> tuple[slice, slice]:
        """Index of the inner nodes, ``u[grid.inner]``."""
        return slice(1, self.M - 1), slice(1, self.N - 1)

    @property
    def inner_shape(self) -> tuple[int, int]:
        return self.M - 2, self.N - 2

    def node_of(self, x: float, y: float) -> tuple[int, int]:
        """Nearest node to ``(x, y)``, clipped to the mesh."""
        i = int(np.clip(round((x - self.L1) / self.dx), 0, self.M - 1))
        j = int(np.clip(round((y - self.L2) / self.dy), 0, self.N - 1))
        return i, j

    def min_abs_x(self) -> float:
        return float(np.min(np.abs(self.x)))

    def refines(self, coarse: Grid) -> int | None:
        """Refinement stride if ``coarse`` nodes are a subset of this mesh."""
        if (coarse.L1, coarse.K1, coarse.L2, coarse.K2) != (self.L1, self.K1, self.L2, self.K2):
            return None
        sx, rx = divmod(self.M - 1, coarse.M - 1)
        sy, ry = divmod(self.N - 1, coarse.N - 1)
        if rx or ry or sx != sy:
            return None
        return sx


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of ``[0, T]`` into ``P`` levels."""

    T: float
    P: int
    dtau: float
    gamma: float

    def __post_init__(self) -> None:
        if self.P < 1:
            raise ValidationError(f"TimeGrid needs P >= 1, got {self.P}")
        if self.P > 1 and abs(self.dtau * (self.P - 1) - self.T) > 1e-12 * self.T:
            raise ValidationError("TimeGrid step does not partition [0, T]")

    @property
    def steps(self) -> int:
        return self.P - 1

    def tau(self, n: int) -> float:
        return n * self.dtau


def _intervals(length: float, h: float) -> int:
    return math.ceil(length / h - _CEIL_SLACK)


def _hits_strike(L1: float, dx: float, count: int) -> bool:
    x = L1 + np.arange(count) * dx
    return bool(np.min(np.abs(x)) < STRIKE_TOL)


def build_grid(L1: float, K1: float, L2: float, K2: float, h: float) -> Grid:
    """Build the mesh with the smallest node counts giving spacing <= ``h``.

    If a node would land on the strike ``x = 0`` the x-mesh is shifted by
    half a cell.
    """
    if h <= 0:
        raise ValidationError(f"Mesh spacing must be positive, got h={h}")
    if not (L1 < K1 and 0 < L2 < K2):
        raise ValidationError(f"Invalid domain [{L1}, {K1}] x [{L2}, {K2}]")

    mx = _intervals(K1 - L1, h)
    ny = _intervals(K2 - L2, h)
    if mx + 1 < MIN_NODES or ny + 1 < MIN_NODES:
        raise ValidationError(
            f"Domain too small for h={h}: M={mx + 1}, N={ny + 1}, need at least {MIN_NODES}"
        )

    dx = (K1 - L1) / mx
    if _hits_strike(L1, dx, mx + 1):
        logger.debug("Strike on mesh, shifting x-nodes by %g", dx / 2)
        L1, K1 = L1 + dx / 2, K1 + dx / 2

    return Grid(L1=L1, K1=K1, L2=L2, K2=K2, M=mx + 1, N=ny + 1, h=h)


def build_nested_grids(
    L1: float, K1: float, L2: float, K2: float, h_coarse: float, levels: int
) -> list[Grid]:
    """Build ``levels`` meshes, each halving the spacing of the previous one.

    Node counts minus one double per level so every coarse node is a fine
    node. When the strike would fall on any level, all levels share one
    shift of a third of the coarsest spacing; a half-cell shift would put
    the strike on the next finer mesh. Where the strike then falls inside
    a cell does not affect the order once the payoff is smoothed.
    """
    if levels < 1:
        raise ValidationError(f"Need at least one level, got {levels}")
    base = build_grid(L1, K1, L2, K2, h_coarse)
    mx, ny = base.M - 1, base.N - 1
    dx0 = (K1 - L1) / mx
    finest = mx * 2 ** (levels - 1)
    if _hits_strike(L1, (K1 - L1) / finest, finest + 1):
        logger.debug("Strike on nested mesh, shifting x-nodes by %g", dx0 / 3)
        L1, K1 = L1 + dx0 / 3, K1 + dx0 / 3

    return [
        Grid(
            L1=L1,
            K1=K1,
            L2=L2,
            K2=K2,
            M=mx * 2**k + 1,
            N=ny * 2**k + 1,
            h=h_coarse / 2**k,
        )
        for k in range(levels)
    ]


def build_time_grid(T: float, gamma: float, h: float) -> TimeGrid:
    """Partition ``[0, T]`` so that ``dtau / h**2`` is close to ``gamma``.

    ``gamma`` is recomputed from the adjusted step.
    """
    if T <= 0 or gamma <= 0 or h <= 0:
        raise ValidationError(
            f"Time grid needs T, gamma, h > 0, got T={T}, gamma={gamma}, h={h}"
        )
    raw = gamma * h * h
    P = 1 + math.ceil(T / raw - _CEIL_SLACK)
    dtau = T / (P - 1)
    return TimeGrid(T=T, P=P, dtau=dtau, gamma=dtau / (h * h))


def time_grid_with_steps(T: float, steps: int, h: float) -> TimeGrid:
    """Time grid with an explicit step count; ``steps = 0`` is the initial level only."""
    if T <= 0 or steps < 0:
        raise ValidationError(f"Invalid time grid T={T}, steps={steps}")
    if steps == 0:
        return TimeGrid(T=T, P=1, dtau=0.0, gamma=0.0)
    dtau = T / steps
    return TimeGrid(T=T, P=steps + 1, dtau=dtau, gamma=dtau / (h * h))


@dataclass(frozen=True)
class InnerIndexMap:
    """Bijection between inner nodes and flat unknown indices.

    ``order="x"`` numbers unknowns along x-lines (``i`` fastest), the
    layout of the x-direction solves; ``order="y"`` along y-lines.
    """

    M: int
    N: int

    def __post_init__(self) -> None:
        if self.M < 3 or self.N < 3:
            raise ValidationError("Index map needs at least one inner node")

    @property
    def count(self) -> int:
        return (self.M - 2) * (self.N - 2)

    def flat_index(self, i: int, j: int, order: Literal["x", "y"] = "x") -> int:
        if not (1 <= i <= self.M - 2 and 1 <= j <= self.N - 2):
            raise ValidationError(f"Node ({i}, {j}) is not an inner node")
        if order == "x":
            return (j - 1) * (self.M - 2) + (i - 1)
        return (i - 1) * (self.N - 2) + (j - 1)

    def node(self, k: int, order: Literal["x", "y"] = "x") -> tuple[int, int]:
        if not 0 <= k < self.count:
            raise ValidationError(f"Unknown index {k} out of range")
        if order == "x":
            j, i = divmod(k, self.M - 2)
        else:
            i, j = divmod(k, self.N - 2)
        return i + 1, j + 1

    def gather(self, u: NDArray[np.float64], order: Literal["x", "y"] = "x") -> NDArray[np.float64]:
        inner = u[1 : self.M - 1, 1 : self.N - 1]
        return inner.ravel(order="F" if order == "x" else "C").copy()

    def scatter(
        self, vec: NDArray[np.float64], u: NDArray[np.float64], order: Literal["x", "y"] = "x"
    ) -> NDArray[np.float64]:
        out = np.array(u, dtype=np.float64, copy=True)
        out[1 : self.M - 1, 1 : self.N - 1] = np.reshape(
            vec, (self.M - 2, self.N - 2), order="F" if order == "x" else "C"
        )
        return out


def inner_index_map(grid: Grid | tuple[int, int]) -> InnerIndexMap:
    """Index map for a grid or an ``(M, N)`` shape."""
    if isinstance(grid, Grid):
        return InnerIndexMap(grid.M, grid.N)
    M, N = grid
    return InnerIndexMap(M, N)


class Domain(NamedTuple):
    """Truncation bounds ``[L1, K1] x [L2, K2]``."""

    L1: float = -5.0
    K1: float = 5.0
    L2: float = 0.1
    K2: float = 5.0


DEFAULT_DOMAIN = Domain()
