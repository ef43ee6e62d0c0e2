"""Batched tridiagonal kernels with factor-once, solve-many semantics.

Arrays hold one system per column: shape ``(n, L)`` for ``L`` lines of
length ``n``. Row ``k`` of a system reads
``sub[k] * x[k-1] + diag[k] * x[k] + sup[k] * x[k+1]``; ``sub[0]`` and
``sup[n-1]`` are couplings to values outside the system and are ignored
by the solves. A factor built from a single line (``L = 1``) broadcasts
against any number of right-hand-side columns.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..exception import SingularLineError, ValidationError


logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

PIVOT_FLOOR = 1e-14
DENSE_ORACLE_MAX = 64


def _as_lines(arr: ArrayLike) -> FloatArray:
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 1:
        return a[:, np.newaxis]
    if a.ndim != 2:
        raise ValidationError(f"Expected a 1-D or 2-D array, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Tridiagonal:
    """Coefficient triples of ``L`` tridiagonal lines, each of shape ``(n, L)``."""

    sub: FloatArray
    diag: FloatArray
    sup: FloatArray

    @classmethod
    def from_triples(cls, sub: ArrayLike, diag: ArrayLike, sup: ArrayLike) -> Tridiagonal:
        s, d, u = _as_lines(sub), _as_lines(diag), _as_lines(sup)
        shape = np.broadcast_shapes(s.shape, d.shape, u.shape)
        return cls(
            np.broadcast_to(s, shape).copy(),
            np.broadcast_to(d, shape).copy(),
            np.broadcast_to(u, shape).copy(),
        )

    @classmethod
    def identity(cls, n: int, lines: int = 1) -> Tridiagonal:
        zeros = np.zeros((n, lines))
        return cls(zeros, np.ones((n, lines)), zeros.copy())

    @property
    def n(self) -> int:
        return int(self.diag.shape[0])

    @property
    def lines(self) -> int:
        return int(self.diag.shape[1])

    def row_sums(self) -> FloatArray:
        """Row sums including the outside couplings."""
        return self.sub + self.diag + self.sup

    def combine(self, other: Tridiagonal, weight: float) -> Tridiagonal:
        """Return ``self - weight * other``."""
        return Tridiagonal(
            self.sub - weight * other.sub,
            self.diag - weight * other.diag,
            self.sup - weight * other.sup,
        )

    def apply(self, x: ArrayLike) -> FloatArray:
        return tri_apply(self.sub, self.diag, self.sup, x)

    def apply_with_walls(self, full: ArrayLike) -> FloatArray:
        """Apply to values of length ``n + 2`` that include both outside nodes."""
        f = np.asarray(full, dtype=np.float64)
        if f.shape[0] != self.n + 2:
            raise ValidationError(
                f"Expected {self.n + 2} values along the line, got {f.shape[0]}"
            )
        return self.sub * f[:-2] + self.diag * f[1:-1] + self.sup * f[2:]


@dataclass(frozen=True)
class TriFactor:
    """LU factors of tridiagonal lines, computed without pivot search.

    ``lower[k]`` is the multiplier eliminating row ``k``, ``pivots`` the
    diagonal of U and ``upper`` the unchanged super-diagonal.
    """

    lower: FloatArray
    pivots: FloatArray
    upper: FloatArray
    floor: FloatArray

    @property
    def n(self) -> int:
        return int(self.pivots.shape[0])

    @property
    def lines(self) -> int:
        return int(self.pivots.shape[1])

    def reconstruct(self) -> Tridiagonal:
        """Multiply the factors back into coefficient triples."""
        sub = np.zeros_like(self.pivots)
        diag = self.pivots.copy()
        sub[1:] = self.lower[1:] * self.pivots[:-1]
        diag[1:] += self.lower[1:] * self.upper[:-1]
        return Tridiagonal(sub, diag, self.upper.copy())


def tri_factor(
    sub: ArrayLike,
    diag: ArrayLike,
    sup: ArrayLike,
    coords: ArrayLike | None = None,
) -> TriFactor:
    """Factor tridiagonal lines with the Thomas recursion.

    Args:
        sub, diag, sup: Coefficient arrays of shape ``(n,)`` or ``(n, L)``.
        coords: Optional coordinate of each line, reported on failure.

    Raises:
        SingularLineError: A pivot falls below ``1e-14`` times the largest
            coefficient magnitude of its line.
    """
    tri = Tridiagonal.from_triples(sub, diag, sup)
    n = tri.n
    if n < 1:
        raise ValidationError("Cannot factor an empty line")

    magnitude = np.abs(tri.diag).max(axis=0)
    if n > 1:
        magnitude = np.maximum(magnitude, np.abs(tri.sub[1:]).max(axis=0))
        magnitude = np.maximum(magnitude, np.abs(tri.sup[:-1]).max(axis=0))
    floor = PIVOT_FLOOR * magnitude

    lower = np.zeros_like(tri.diag)
    pivots = np.empty_like(tri.diag)
    pivots[0] = tri.diag[0]
    _check_pivot(pivots[0], floor, coords)
    for k in range(1, n):
        lower[k] = tri.sub[k] / pivots[k - 1]
        pivots[k] = tri.diag[k] - lower[k] * tri.sup[k - 1]
        _check_pivot(pivots[k], floor, coords)

    return TriFactor(lower=lower, pivots=pivots, upper=tri.sup, floor=floor)


def _check_pivot(pivot: FloatArray, floor: FloatArray, coords: ArrayLike | None) -> None:
    bad = np.flatnonzero(~(np.abs(pivot) > floor))
    if bad.size == 0:
        return
    line = int(bad[0])
    position = None
    if coords is not None:
        position = float(np.atleast_1d(np.asarray(coords, dtype=np.float64))[line])
    where = f" at coordinate {position:.6g}" if position is not None else ""
    raise SingularLineError(
        f"Singular tridiagonal line {line}{where}: pivot {float(pivot[line]):.3e}",
        line=line,
        pivot=float(pivot[line]),
        position=position,
    )


def tri_solve(f: TriFactor, rhs: ArrayLike) -> FloatArray:
    """Solve the factored lines for ``rhs`` of shape ``(n,)`` or ``(n, K)``."""
    r = np.asarray(rhs, dtype=np.float64)
    squeeze = r.ndim == 1
    b = _as_lines(r)
    if b.shape[0] != f.n:
        raise ValidationError(f"Right-hand side has length {b.shape[0]}, expected {f.n}")
    if f.lines not in (1, b.shape[1]):
        raise ValidationError(
            f"Right-hand side has {b.shape[1]} columns for {f.lines} factored lines"
        )

    y = np.empty(np.broadcast_shapes(b.shape, f.pivots.shape))
    y[0] = b[0]
    for k in range(1, f.n):
        y[k] = b[k] - f.lower[k] * y[k - 1]

    x = y
    x[-1] = y[-1] / f.pivots[-1]
    for k in range(f.n - 2, -1, -1):
        x[k] = (y[k] - f.upper[k] * x[k + 1]) / f.pivots[k]

    return x[:, 0] if squeeze and x.shape[1] == 1 else x


def tri_apply(sub: ArrayLike, diag: ArrayLike, sup: ArrayLike, x: ArrayLike) -> FloatArray:
    """Tridiagonal matrix-vector product, ignoring the outside couplings."""
    xv = np.asarray(x, dtype=np.float64)
    s, d, u = (np.asarray(a, dtype=np.float64) for a in (sub, diag, sup))
    if xv.ndim == 2 and d.ndim == 1:
        s, d, u = s[:, None], d[:, None], u[:, None]
    if d.shape[0] != xv.shape[0]:
        raise ValidationError(f"Vector has length {xv.shape[0]}, expected {d.shape[0]}")
    out = d * xv
    out[1:] += s[1:] * xv[:-1]
    out[:-1] += u[:-1] * xv[1:]
    return out


@dataclass(frozen=True)
class BorderedFactor:
    """Factor of ``T + e_0 v_low^T + e_{n-1} v_high^T`` per line.

    The rank-two border is removed with the Woodbury identity: ``basis``
    holds ``T^{-1} [e_0, e_{n-1}]`` and ``capacitance_inv`` the inverse
    of the 2x2 capacitance matrix of each line.
    """

    base: TriFactor
    v_low: FloatArray
    v_high: FloatArray
    basis: FloatArray
    capacitance_inv: FloatArray

    @property
    def n(self) -> int:
        return self.base.n


def bordered_factor(
    sub: ArrayLike,
    diag: ArrayLike,
    sup: ArrayLike,
    v_low: ArrayLike,
    v_high: ArrayLike,
    coords: ArrayLike | None = None,
) -> BorderedFactor:
    """Factor lines whose first and last rows carry extra dense entries."""
    base = tri_factor(sub, diag, sup, coords=coords)
    n, lines = base.n, base.lines
    vl = np.broadcast_to(_as_lines(v_low), (n, lines)).copy()
    vh = np.broadcast_to(_as_lines(v_high), (n, lines)).copy()

    unit = np.zeros((n, 2 * lines))
    unit[0, :lines] = 1.0
    unit[-1, lines:] = 1.0
    if lines == 1:
        w = tri_solve(base, unit)
    else:
        w = np.concatenate(
            [tri_solve(base, unit[:, :lines]), tri_solve(base, unit[:, lines:])], axis=1
        )
    w0, w1 = w[:, :lines], w[:, lines:]

    cap = np.empty((lines, 2, 2))
    cap[:, 0, 0] = 1.0 + np.sum(vl * w0, axis=0)
    cap[:, 0, 1] = np.sum(vl * w1, axis=0)
    cap[:, 1, 0] = np.sum(vh * w0, axis=0)
    cap[:, 1, 1] = 1.0 + np.sum(vh * w1, axis=0)
    det = cap[:, 0, 0] * cap[:, 1, 1] - cap[:, 0, 1] * cap[:, 1, 0]
    bad = np.flatnonzero(~(np.abs(det) > PIVOT_FLOOR))
    if bad.size:
        line = int(bad[0])
        raise SingularLineError(
            f"Singular boundary closure on line {line}", line=line, pivot=float(det[line])
        )

    return BorderedFactor(
        base=base,
        v_low=vl,
        v_high=vh,
        basis=np.stack([w0, w1]),
        capacitance_inv=np.linalg.inv(cap),
    )


def bordered_solve(f: BorderedFactor, rhs: ArrayLike) -> FloatArray:
    """Solve the bordered lines for ``rhs`` of shape ``(n,)`` or ``(n, K)``."""
    r = np.asarray(rhs, dtype=np.float64)
    squeeze = r.ndim == 1
    y = tri_solve(f.base, _as_lines(r))
    t0 = np.sum(f.v_low * y, axis=0)
    t1 = np.sum(f.v_high * y, axis=0)
    ci = f.capacitance_inv
    s0 = ci[:, 0, 0] * t0 + ci[:, 0, 1] * t1
    s1 = ci[:, 1, 0] * t0 + ci[:, 1, 1] * t1
    x = y - f.basis[0] * s0 - f.basis[1] * s1
    return x[:, 0] if squeeze and x.shape[1] == 1 else x


def dense_tridiagonal(sub: ArrayLike, diag: ArrayLike, sup: ArrayLike) -> FloatArray:
    """Dense matrix of one tridiagonal line, for test oracles on small systems."""
    d = np.asarray(diag, dtype=np.float64)
    n = d.shape[0]
    if d.ndim != 1 or n > DENSE_ORACLE_MAX:
        raise ValidationError(f"Dense oracle is limited to single lines with n <= {DENSE_ORACLE_MAX}")
    s, u = np.asarray(sub, dtype=np.float64), np.asarray(sup, dtype=np.float64)
    return np.diag(d) + np.diag(s[1:], -1) + np.diag(u[:-1], 1)


def dense_solve(sub: ArrayLike, diag: ArrayLike, sup: ArrayLike, rhs: ArrayLike) -> FloatArray:
    """Dense LAPACK solve of one tridiagonal line, for test oracles."""
    return np.linalg.solve(dense_tridiagonal(sub, diag, sup), np.asarray(rhs, dtype=np.float64))
