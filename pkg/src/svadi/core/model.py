"""Stochastic-volatility model class and the transformed pricing PDE.

The asset follows geometric Brownian motion with a stochastic volatility
``sigma`` that mean-reverts with drift ``kappa_tilde * sigma**alpha *
(theta_tilde - sigma)`` and diffuses with ``v * sigma**beta``. After the
change of variables ``x = ln(S/E)``, ``y = sigma/v``, ``tau = T - t`` and
``u = exp(r*tau) * V / E`` the pricing equation becomes a constant-in-time
convection-diffusion equation in ``(x, y)``::

    u_tau = c_xx u_xx + c_xy u_xy + c_yy u_yy + c_x u_x + c_y u_y

with the coefficient functions exposed by :class:`TransformedCoefficients`.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.interpolate import BSpline

from ..exception import ValidationError


if TYPE_CHECKING:
    from .grid import Grid


logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


class ModelVariant(Enum):
    """Named members of the model class, keyed by ``(alpha, beta)``."""

    SQR = (0.0, 0.5)
    VAR = (0.0, 1.0)
    THREE_HALVES = (0.0, 1.5)
    SQRN = (1.0, 0.5)
    VARN = (1.0, 1.0)
    THREE_HALVES_N = (1.0, 1.5)

    @property
    def alpha(self) -> float:
        return self.value[0]

    @property
    def beta(self) -> float:
        return self.value[1]


# Heston is the square-root member.
HESTON = ModelVariant.SQR


@dataclass(frozen=True)
class ModelParams:
    """Constants of one stochastic-volatility model.

    ``kappa_tilde`` and ``theta_tilde`` are the real-world mean-reversion
    speed and level; the market price of volatility risk is ``lambda0 *
    sigma``, which folds into the risk-neutral :attr:`kappa` and
    :attr:`theta`. ``mu_bar`` is carried for reporting only.
    """

    r: float = 0.05
    v: float = 0.1
    kappa_tilde: float = 2.0
    theta_tilde: float = 0.1
    lambda0: float = 0.0
    rho: float = -0.5
    alpha: float = 0.0
    beta: float = 0.5
    E: float = 100.0
    T: float = 0.5
    mu_bar: float | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        checks = (
            ("r", self.r >= 0),
            ("v", self.v >= 0),
            ("kappa_tilde", self.kappa_tilde >= 0),
            ("theta_tilde", self.theta_tilde >= 0),
            ("E", self.E > 0),
            ("T", self.T > 0),
            ("rho", -1.0 <= self.rho <= 1.0),
        )
        for name, ok in checks:
            if not ok:
                raise ValidationError(
                    f"Invalid model parameter '{name}': {getattr(self, name)!r}"
                )
        if self.kappa_tilde + self.lambda0 == 0:
            raise ValidationError(
                "Invalid model parameter 'lambda0': kappa_tilde + lambda0 must be nonzero"
            )

    @property
    def kappa(self) -> float:
        """Risk-neutral mean-reversion speed."""
        return self.kappa_tilde + self.lambda0

    @property
    def theta(self) -> float:
        """Risk-neutral long-run level, so that ``kappa * theta == kappa_tilde * theta_tilde``."""
        return self.kappa_tilde * self.theta_tilde / self.kappa

    @property
    def variant(self) -> ModelVariant | None:
        for member in ModelVariant:
            if (self.alpha, self.beta) == member.value:
                return member
        return None

    @property
    def is_heston(self) -> bool:
        return self.variant is HESTON

    @classmethod
    def for_variant(cls, variant: ModelVariant, **kwargs: float) -> ModelParams:
        """Build parameters for a named model, other fields from ``kwargs``."""
        return cls(alpha=variant.alpha, beta=variant.beta, **kwargs)


@dataclass(frozen=True)
class CoefficientSample:
    """Coefficients and the y-derivatives of ``c_yy`` and ``c_y`` at sample points."""

    y: FloatArray
    c_xx: FloatArray
    c_yy: FloatArray
    c_xy: FloatArray
    c_x: FloatArray
    c_y: FloatArray
    c_yy_1: FloatArray
    c_yy_2: FloatArray
    c_y_1: FloatArray
    c_y_2: FloatArray


def _as_positive_y(y: ArrayLike) -> FloatArray:
    arr = np.asarray(y, dtype=np.float64)
    if np.any(arr <= 0):
        raise ValidationError(
            "Coefficients are degenerate for y <= 0; truncate the domain at L2 > 0"
        )
    return arr


@dataclass(frozen=True)
class TransformedCoefficients:
    """The five coefficient functions of the transformed PDE.

    All evaluators accept scalars or arrays of ``y`` and reject ``y <= 0``.
    ``scale`` multiplies every coefficient; ``scaled(0.0)`` gives the
    null operator used for identity checks.
    """

    params: ModelParams
    scale: float = 1.0

    def scaled(self, factor: float) -> TransformedCoefficients:
        return replace(self, scale=self.scale * factor)

    def _vy(self, y: ArrayLike) -> FloatArray:
        return self.params.v * _as_positive_y(y)

    def c_xx(self, y: ArrayLike) -> FloatArray:
        return self.scale * self._vy(y) / 2.0

    def c_yy(self, y: ArrayLike) -> FloatArray:
        return self.scale * self._vy(y) ** (2.0 * self.params.beta) / 2.0

    def c_xy(self, y: ArrayLike) -> FloatArray:
        return self.scale * self.params.rho * self._vy(y) ** (self.params.beta + 0.5)

    def c_x(self, y: ArrayLike) -> FloatArray:
        return self.scale * (self.params.r - self._vy(y) / 2.0)

    def c_y(self, y: ArrayLike) -> FloatArray:
        p = self.params
        vy = self._vy(y)
        if p.v == 0:
            # the drift in y is kappa*(theta - v*y)/v; with v = 0 the y-axis collapses
            raise ValidationError("Coefficient c_y is undefined for vol-of-vol v = 0")
        return self.scale * p.kappa * vy**p.alpha * (p.theta - vy) / p.v

    def c_yy_1(self, y: ArrayLike) -> FloatArray:
        """First y-derivative of ``c_yy``."""
        p = self.params
        return self.scale * p.beta * p.v * self._vy(y) ** (2.0 * p.beta - 1.0)

    def c_yy_2(self, y: ArrayLike) -> FloatArray:
        """Second y-derivative of ``c_yy``."""
        p = self.params
        return (
            self.scale
            * p.beta
            * (2.0 * p.beta - 1.0)
            * p.v**2
            * self._vy(y) ** (2.0 * p.beta - 2.0)
        )

    def c_y_1(self, y: ArrayLike) -> FloatArray:
        """First y-derivative of ``c_y``."""
        p = self.params
        vy = self._vy(y)
        k, a = p.kappa, p.alpha
        return self.scale * (k * a * p.theta * vy ** (a - 1.0) - k * (a + 1.0) * vy**a)

    def c_y_2(self, y: ArrayLike) -> FloatArray:
        """Second y-derivative of ``c_y``."""
        p = self.params
        vy = self._vy(y)
        k, a = p.kappa, p.alpha
        return self.scale * (
            k * a * (a - 1.0) * p.theta * p.v * vy ** (a - 2.0)
            - k * (a + 1.0) * a * p.v * vy ** (a - 1.0)
        )

    def sample(self, y: ArrayLike) -> CoefficientSample:
        arr = _as_positive_y(y)
        return CoefficientSample(
            y=arr,
            c_xx=self.c_xx(arr),
            c_yy=self.c_yy(arr),
            c_xy=self.c_xy(arr),
            c_x=self.c_x(arr),
            c_y=self.c_y(arr),
            c_yy_1=self.c_yy_1(arr),
            c_yy_2=self.c_yy_2(arr),
            c_y_1=self.c_y_1(arr),
            c_y_2=self.c_y_2(arr),
        )


def transformed_coefficients(p: ModelParams) -> TransformedCoefficients:
    """Return the coefficient functions of the transformed PDE for ``p``."""
    return TransformedCoefficients(p)


def diffusion_matrix(coeffs: TransformedCoefficients, y: ArrayLike) -> FloatArray:
    """Return the 2x2 diffusion matrices ``[[c_xx, c_xy/2], [c_xy/2, c_yy]]``.

    The result has shape ``(len(y), 2, 2)``.
    """
    arr = np.atleast_1d(_as_positive_y(y))
    half = coeffs.c_xy(arr) / 2.0
    out = np.empty((arr.size, 2, 2))
    out[:, 0, 0] = coeffs.c_xx(arr)
    out[:, 0, 1] = half
    out[:, 1, 0] = half
    out[:, 1, 1] = coeffs.c_yy(arr)
    return out


def initial_condition(x: ArrayLike) -> FloatArray:
    """Transformed put payoff ``max(1 - exp(x), 0)``."""
    return np.maximum(1.0 - np.exp(np.asarray(x, dtype=np.float64)), 0.0)


_CUBIC_BSPLINE = BSpline.basis_element(np.arange(-2.0, 3.0), extrapolate=False)

# Support of the smoothing kernel in units of the mesh spacing.
SMOOTHING_HALF_WIDTH = 3


def smoothing_kernel(t: ArrayLike) -> FloatArray:
    """Fourth-order smoothing kernel on ``[-3, 3]``.

    Its Fourier transform is ``sinc(w/2)**4 * (1 + 2/3 sin(w/2)**2)``, so
    it integrates to one and its first three moments vanish. The kernel
    is negative for ``|t| > 2``.
    """
    s = np.asarray(t, dtype=np.float64)

    def cubic(z: FloatArray) -> FloatArray:
        return np.nan_to_num(_CUBIC_BSPLINE(z), nan=0.0)

    return 4.0 / 3.0 * cubic(s) - (cubic(s - 1.0) + cubic(s + 1.0)) / 6.0


def kernel_average(fn: Callable[[float], float], x: float, dx: float, kinks: Sequence[float] = ()) -> float:
    """``int K(t) fn(x - t dx) dt`` over the kernel support.

    ``kinks`` are points where ``fn`` is not smooth; they are passed to the
    quadrature as breakpoints.
    """
    if dx <= 0:
        raise ValidationError(f"Smoothing needs dx > 0, got {dx}")
    w = float(SMOOTHING_HALF_WIDTH)
    breaks = [float(k) for k in range(-SMOOTHING_HALF_WIDTH + 1, SMOOTHING_HALF_WIDTH)]
    breaks += [(x - k) / dx for k in kinks if -w < (x - k) / dx < w]

    def integrand(t: float) -> float:
        return float(smoothing_kernel(t)) * fn(x - t * dx)

    value, _ = quad(integrand, -w, w, points=sorted(set(breaks)), epsabs=1e-14, epsrel=1e-12, limit=200)
    return float(value)


def smoothed_initial_condition(x: ArrayLike, dx: float) -> FloatArray:
    """Payoff with the strike kink smoothed at mesh scale ``dx``.

    Nodes within three cells of the strike get the kernel average of the
    payoff; the others keep the exact payoff. The smoothed data dip slightly
    below zero just out of the money.
    """
    arr = np.asarray(x, dtype=np.float64)
    out = initial_condition(arr)
    near = np.abs(arr) < SMOOTHING_HALF_WIDTH * dx
    flat = out.reshape(-1)
    for k in np.flatnonzero(near.reshape(-1)):
        flat[k] = kernel_average(_payoff_scalar, float(arr.reshape(-1)[k]), dx, kinks=(0.0,))
    return out


def _payoff_scalar(z: float) -> float:
    return max(1.0 - math.exp(z), 0.0)


def dirichlet_x(side: Literal["low", "high"], tau: float, p: ModelParams, L1: float) -> float:
    """Dirichlet value on an x-wall at time-to-maturity ``tau``."""
    if side == "high":
        return 0.0
    if side == "low":
        return 1.0 - math.exp(p.r * tau + L1)
    raise ValidationError(f"Unknown wall side '{side}'")


def dirichlet_flux(side: Literal["low", "high"], tau: float, p: ModelParams, L1: float) -> float:
    """``u_tau`` on an x-wall, which equals the x-operator applied to the wall data."""
    if side == "high":
        return 0.0
    if side == "low":
        return -p.r * math.exp(p.r * tau + L1)
    raise ValidationError(f"Unknown wall side '{side}'")


def dirichlet_walls(tau: float, p: ModelParams, grid: Grid) -> tuple[float, float]:
    """Both x-wall values for ``grid`` at ``tau``."""
    return dirichlet_x("low", tau, p, grid.L1), dirichlet_x("high", tau, p, grid.L1)


def no_arbitrage_bounds(x: ArrayLike, tau: float, p: ModelParams) -> tuple[FloatArray, FloatArray]:
    """Lower and upper bound of the transformed put at ``x``.

    ``E exp(-r tau) - S <= V <= E exp(-r tau)`` and ``V >= 0`` become
    ``max(1 - exp(x + r tau), 0) <= u <= 1``. The lower bound equals the
    low x-wall data at ``x = L1``.
    """
    arr = np.asarray(x, dtype=np.float64)
    lower = np.maximum(1.0 - np.exp(arr + p.r * tau), 0.0)
    return lower, np.ones_like(lower)


def project_to_bounds(u: FloatArray, grid: Grid, p: ModelParams, tau: float) -> FloatArray:
    """Clip a field at ``tau`` into the no-arbitrage range, column by column in x.

    The exact solution lies in the range, so clipping never moves a value
    further from it.
    """
    lower, upper = no_arbitrage_bounds(grid.x, tau, p)
    return np.clip(np.asarray(u, dtype=np.float64), lower[:, np.newaxis], upper[:, np.newaxis])


@dataclass(frozen=True)
class PriceSurface:
    """Untransformed option values ``V[i, j]`` at ``(S[i], sigma[j])``."""

    S: FloatArray
    sigma: FloatArray
    V: FloatArray
    t: float


def inverse_transform(u: FloatArray, grid: Grid, p: ModelParams, tau: float) -> PriceSurface:
    """Map a transformed field back to option prices ``V = E exp(-r tau) u``."""
    return PriceSurface(
        S=p.E * np.exp(grid.x),
        sigma=p.v * grid.y,
        V=p.E * math.exp(-p.r * tau) * np.asarray(u, dtype=np.float64),
        t=p.T - tau,
    )


def price_at(
    u: FloatArray, grid: Grid, p: ModelParams, tau: float, S: float, sigma: float
) -> tuple[float, float, float]:
    """Option value at the mesh node nearest to ``(S, sigma)``.

    Returns:
        Tuple ``(S_node, sigma_node, V)``; the node coordinates are the
        snapped ones, so callers can evaluate other pricers at the same point.
    """
    if S <= 0 or p.v <= 0:
        raise ValidationError("price_at requires S > 0 and v > 0")
    i, j = grid.node_of(math.log(S / p.E), sigma / p.v)
    value = p.E * math.exp(-p.r * tau) * float(u[i, j])
    return p.E * math.exp(float(grid.x[i])), p.v * float(grid.y[j]), value
