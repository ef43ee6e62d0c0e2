"""Convergence, stability and cross-validation studies.

Errors are measured by injecting coarse nodes into a fine reference
solution on nested meshes, so no interpolation enters the comparison.
Independent runs of a study go through a thread pool capped by
``SVADI_THREADS``; results are collected in submission order.
"""

from __future__ import annotations

import cmath
import logging
import math
import warnings
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import IntegrationWarning, quad
from scipy.stats import norm

from ..exception import InstabilityError, QuadratureError, SingularLineError, ValidationError
from ..models.response_models import (
    ErrorRow,
    ExperimentReport,
    GammaOrderRow,
    GammaOrderTable,
    HestonComparison,
    StabilityCell,
    StabilityGrid,
    TemporalReport,
)
from ..utils.environment import get_thread_count
from .grid import (
    DEFAULT_DOMAIN,
    Domain,
    Grid,
    build_grid,
    build_nested_grids,
    build_time_grid,
    time_grid_with_steps,
)
from .model import ModelParams, price_at
from .timestepper import (
    HVConfig,
    Scheme,
    SolverResult,
    SolverState,
    initial_field,
    run,
    with_scheme,
)


logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
T = TypeVar("T")
R = TypeVar("R")

OSCILLATION_TOL = 1e-6
GROWTH_LIMIT = 10.0
QUAD_TOL = 1e-8
_NESTING_TOL = 1e-9


def _map_runs(fn: Callable[[T], R], items: Sequence[T], workers: int | None) -> list[R]:
    count = workers or get_thread_count()
    if count <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(count, len(items))) as pool:
        return list(pool.map(fn, items))


def error_norms(u: FloatArray, reference: FloatArray, stride: int, grid: Grid) -> tuple[float, float]:
    """Discrete l2 and max errors of ``u`` over the inner nodes of ``grid``.

    ``reference`` lives on a mesh ``stride`` times finer.
    """
    injected = reference[::stride, ::stride]
    if injected.shape != u.shape:
        raise ValidationError(
            f"Reference of shape {reference.shape} does not nest field {u.shape} at stride {stride}"
        )
    diff = (u - injected)[1:-1, 1:-1]
    eps2 = math.sqrt(float(np.sum(diff * diff)) * grid.dx * grid.dy)
    return eps2, float(np.max(np.abs(diff)))


def l2_norm(u: FloatArray, grid: Grid) -> float:
    inner = u[1:-1, 1:-1]
    return math.sqrt(float(np.sum(inner * inner)) * grid.dx * grid.dy)


def fit_slope(h: Iterable[float], eps: Iterable[float | None]) -> float | None:
    """Least-squares slope ``m`` of ``ln eps = ln C + m ln h``.

    Rows with missing or nonpositive errors are skipped; fewer than two
    usable rows give ``None``.
    """
    pairs = [(a, e) for a, e in zip(h, eps, strict=True) if e is not None and e > 0]
    if len(pairs) < 2:
        return None
    xs = np.log([a for a, _ in pairs])
    ys = np.log([e for _, e in pairs])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def pair_orders(h: Sequence[float], eps: Sequence[float | None]) -> list[float | None]:
    """Observed order between each row and the previous (coarser) one."""
    orders: list[float | None] = [None]
    for k in range(1, len(eps)):
        a, b = eps[k - 1], eps[k]
        if a is None or b is None or a <= 0 or b <= 0:
            orders.append(None)
        else:
            orders.append(math.log(a / b) / math.log(h[k - 1] / h[k]))
    return orders


def _nested_levels(h_list: Sequence[float], h_ref: float, domain: Domain) -> tuple[list[Grid], list[int]]:
    """Nested meshes from the coarsest ``h`` down to ``h_ref``; returns level of each ``h``."""
    h_max = max(h_list)
    ratio = math.log2(h_max / h_ref)
    levels = round(ratio)
    if abs(ratio - levels) > _NESTING_TOL or levels < 1:
        raise ValidationError(f"h_ref={h_ref} is not h_max={h_max} halved a whole number of times")
    index = []
    for h in h_list:
        k = math.log2(h_max / h)
        if abs(k - round(k)) > _NESTING_TOL:
            raise ValidationError(f"h={h} is not nested with h_max={h_max}")
        index.append(round(k))
    grids = build_nested_grids(*domain, h_max, levels + 1)
    return grids, index


def _solve(p: ModelParams, grid: Grid, gamma: float, hv: HVConfig) -> SolverResult:
    return run(p, grid, build_time_grid(p.T, gamma, grid.h), hv)


def convergence_study(
    p: ModelParams,
    scheme: Scheme,
    gamma: float,
    h_list: Sequence[float],
    h_ref: float,
    domain: Domain = DEFAULT_DOMAIN,
    hv: HVConfig | None = None,
    workers: int | None = None,
) -> ExperimentReport:
    """Measure spatial errors against one fine reference solution.

    A run that turns unstable is reported as a flagged row and left out
    of the fit.
    """
    if not h_list:
        raise ValidationError("h_list must not be empty")
    hs = sorted(h_list, reverse=True)
    if h_ref > hs[-1] / 2:
        raise ValidationError(f"h_ref={h_ref} must not exceed half the finest h={hs[-1]}")
    config = with_scheme(hv or HVConfig(), scheme)
    grids, index = _nested_levels(hs, h_ref, domain)
    ref_grid = grids[-1]
    reference = _solve(p, ref_grid, gamma, config).u

    def measure(k: int) -> ErrorRow:
        grid = grids[k]
        try:
            u = _solve(p, grid, gamma, config).u
        except (InstabilityError, SingularLineError) as e:
            logger.warning("Run at h=%g flagged unstable: %s", grid.h, e)
            return ErrorRow(h=grid.h, dx=grid.dx, dy=grid.dy, unstable=True)
        stride = 2 ** (len(grids) - 1 - k)
        eps2, epsinf = error_norms(u, reference, stride, grid)
        logger.info("h=%g eps_l2=%.3e eps_linf=%.3e", grid.h, eps2, epsinf)
        return ErrorRow(h=grid.h, dx=grid.dx, dy=grid.dy, eps_l2=eps2, eps_linf=epsinf)

    rows = _map_runs(measure, index, workers)
    h_values = [r.h for r in rows]
    o2 = pair_orders(h_values, [r.eps_l2 for r in rows])
    oinf = pair_orders(h_values, [r.eps_linf for r in rows])
    rows = [r.model_copy(update={"order_l2": a, "order_linf": b}) for r, a, b in zip(rows, o2, oinf, strict=True)]

    return ExperimentReport(
        scheme=scheme.value,
        rho=p.rho,
        gamma=gamma,
        rows=rows,
        slope_l2=fit_slope(h_values, [r.eps_l2 for r in rows]),
        slope_linf=fit_slope(h_values, [r.eps_linf for r in rows]),
        reference={"h": ref_grid.h, "M": ref_grid.M, "N": ref_grid.N},
    )


def extremum_counts(u: FloatArray, tol: float = OSCILLATION_TOL) -> NDArray[np.int_]:
    """Number of local extrema along each inner x-line, walls included.

    Differences smaller than ``tol`` are treated as flat, so an extremum
    counts only when the x-differences change sign with both sides above
    the tolerance.
    """
    d = np.diff(np.asarray(u, dtype=np.float64)[:, 1:-1], axis=0)
    sign = np.where(np.abs(d) > tol, np.sign(d), 0.0)
    last = np.where(sign != 0, np.arange(sign.shape[0])[:, np.newaxis], 0)
    np.maximum.accumulate(last, axis=0, out=last)
    filled = np.take_along_axis(sign, last, axis=0)
    return np.sum(filled[1:] * filled[:-1] < 0, axis=0)


def has_oscillation(
    u: FloatArray, reference: FloatArray | None = None, tol: float = OSCILLATION_TOL
) -> bool:
    """True if some x-line has a local extremum that ``reference`` lacks.

    The put is monotone in x, so any extremum of the solution along an
    x-line is spurious unless the initial data already had it (the
    smoothed payoff has one just out of the money). Without a reference
    every extremum counts.
    """
    counts = extremum_counts(u, tol)
    baseline = 0 if reference is None else extremum_counts(reference, tol)
    return bool(np.any(counts > baseline))


class RunMonitor:
    """Per-step observer that aborts runaway runs and counts oscillating steps.

    A step whose field exceeds ``growth_limit`` in max norm raises
    :class:`InstabilityError` before the values overflow.
    """

    def __init__(
        self, initial: FloatArray, growth_limit: float = GROWTH_LIMIT, tol: float = OSCILLATION_TOL
    ) -> None:
        self.initial = initial
        self.limit = growth_limit * max(1.0, float(np.max(np.abs(initial))))
        self.tol = tol
        self.oscillating_steps = 0

    def __call__(self, state: SolverState) -> None:
        peak = float(np.max(np.abs(state.u)))
        if peak > self.limit:
            i, j = (int(k) for k in np.unravel_index(np.argmax(np.abs(state.u)), state.u.shape))
            raise InstabilityError(
                f"Field grew to {peak:.3e} at node ({i}, {j}), step {state.n}",
                stage="step",
                node=(i, j),
                time_index=state.n,
            )
        if has_oscillation(state.u, self.initial, self.tol):
            self.oscillating_steps += 1


def stability_sweep(
    p: ModelParams,
    scheme: Scheme,
    gamma_list: Sequence[float],
    h_list: Sequence[float],
    domain: Domain = DEFAULT_DOMAIN,
    hv: HVConfig | None = None,
    workers: int | None = None,
) -> StabilityGrid:
    """Relative l2 errors over every ``(gamma, h)`` pair.

    The reference is computed once at half the finest spacing with the
    smallest mesh ratio. Every run is watched step by step by a
    :class:`RunMonitor`; blow-up, non-finite stages and oscillations that
    survive to maturity are recorded as flags, never raised.
    """
    if not h_list or not gamma_list:
        raise ValidationError("Stability sweep needs nonempty gamma_list and h_list")
    if any(not 0 < g <= 1 for g in gamma_list):
        raise ValidationError("gamma_list entries must lie in (0, 1]")
    hs = sorted(h_list, reverse=True)
    config = with_scheme(hv or HVConfig(), scheme)
    grids, index = _nested_levels(hs, hs[-1] / 2, domain)
    reference = _solve(p, grids[-1], min(gamma_list), config).u
    ref_norm = l2_norm(reference[:: 2 ** (len(grids) - 1), :: 2 ** (len(grids) - 1)], grids[0])

    jobs = [(g, k) for g in gamma_list for k in index]

    def measure(job: tuple[float, int]) -> StabilityCell:
        gamma, k = job
        grid = grids[k]
        monitor = RunMonitor(initial_field(grid, p, smooth=config.smooth_payoff))
        try:
            u = run(p, grid, build_time_grid(p.T, gamma, grid.h), config, observer=monitor).u
        except (InstabilityError, SingularLineError) as e:
            logger.warning("Run at gamma=%g h=%g flagged unstable: %s", gamma, grid.h, e)
            return StabilityCell(gamma=gamma, h=grid.h, unstable=True)
        stride = 2 ** (len(grids) - 1 - k)
        eps2, _ = error_norms(u, reference, stride, grid)
        norm_here = l2_norm(reference[::stride, ::stride], grid) or ref_norm
        oscillation = has_oscillation(u, monitor.initial)
        if oscillation:
            logger.warning("Run at gamma=%g h=%g shows spurious oscillation", gamma, grid.h)
        return StabilityCell(
            gamma=gamma,
            h=grid.h,
            rel_eps_l2=eps2 / norm_here,
            oscillation=oscillation,
            oscillating_steps=monitor.oscillating_steps,
        )

    cells = _map_runs(measure, jobs, workers)
    return StabilityGrid(
        scheme=scheme.value,
        rho=p.rho,
        gammas=list(gamma_list),
        hs=[grids[k].h for k in index],
        cells=cells,
    )


def gamma_order_table(
    p: ModelParams,
    gamma_list: Sequence[float],
    h_list: Sequence[float],
    h_ref: float,
    schemes: Sequence[Scheme] = (Scheme.HIGH_ORDER, Scheme.SECOND_ORDER),
    domain: Domain = DEFAULT_DOMAIN,
    hv: HVConfig | None = None,
    workers: int | None = None,
) -> GammaOrderTable:
    """Fitted spatial orders per scheme for each mesh ratio."""
    rows = []
    for scheme in schemes:
        for gamma in gamma_list:
            report = convergence_study(p, scheme, gamma, h_list, h_ref, domain, hv, workers)
            rows.append(
                GammaOrderRow(
                    scheme=scheme.value,
                    gamma=gamma,
                    order_l2=report.slope_l2,
                    order_linf=report.slope_linf,
                )
            )
    return GammaOrderTable(rho=p.rho, rows=rows)


def temporal_order_study(
    p: ModelParams,
    scheme: Scheme,
    h: float,
    steps_list: Sequence[int],
    reference_steps: int | None = None,
    domain: Domain = DEFAULT_DOMAIN,
    hv: HVConfig | None = None,
    workers: int | None = None,
) -> TemporalReport:
    """Max-norm errors on a fixed mesh against a finer-step reference."""
    if not steps_list or min(steps_list) < 1:
        raise ValidationError("steps_list needs positive step counts")
    grid = build_grid(*domain, h)
    config = with_scheme(hv or HVConfig(), scheme)
    ref_steps = reference_steps or 4 * max(steps_list)
    reference = run(p, grid, time_grid_with_steps(p.T, ref_steps, h), config).u

    def measure(steps: int) -> float:
        u = run(p, grid, time_grid_with_steps(p.T, steps, h), config).u
        return float(np.max(np.abs((u - reference)[1:-1, 1:-1])))

    ordered = sorted(steps_list)
    errors = _map_runs(measure, ordered, workers)
    dtaus = [p.T / s for s in ordered]
    return TemporalReport(
        scheme=scheme.value,
        h=h,
        dtaus=dtaus,
        errors=errors,
        slope=fit_slope(dtaus, errors),
    )


def _black_scholes_put(S: float, E: float, r: float, tau: float, variance: float) -> float:
    discounted = E * math.exp(-r * tau)
    if variance <= 0:
        return max(discounted - S, 0.0)
    sd = math.sqrt(variance)
    d1 = (math.log(S / E) + r * tau + variance / 2) / sd
    d2 = d1 - sd
    return float(discounted * norm.cdf(-d2) - S * norm.cdf(-d1))


def _heston_cf(z: complex, p: ModelParams, log_s: float, v0: float, tau: float) -> complex:
    """Characteristic function of ``ln S_tau``, in the form without branch jumps."""
    xi = p.v
    iz = 1j * z
    b = p.kappa - p.rho * xi * iz
    d = cmath.sqrt(b * b + xi * xi * (z * z + iz))
    g = (b - d) / (b + d)
    e = cmath.exp(-d * tau)
    C = p.r * iz * tau + p.kappa * p.theta / xi**2 * (
        (b - d) * tau - 2.0 * cmath.log((1.0 - g * e) / (1.0 - g))
    )
    D = (b - d) / xi**2 * (1.0 - e) / (1.0 - g * e)
    return cmath.exp(C + D * v0 + iz * log_s)


def _integrate(name: str, fn: Callable[[float], float]) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, err = quad(fn, 0.0, np.inf, epsabs=QUAD_TOL, limit=500)
        except IntegrationWarning as e:
            raise QuadratureError(f"Integral {name} did not converge: {e}", integral=name) from e
    if not math.isfinite(value):
        raise QuadratureError(f"Integral {name} is not finite", integral=name, estimate=err)
    return float(value)


def heston_fourier_price(
    p: ModelParams, S: float, sigma: float, tau: float | None = None
) -> float:
    """Semi-analytic European put under the Heston member of the model class.

    ``sigma`` plays the role of the Heston variance. The call comes from
    the two-probability Fourier representation and the put from parity;
    with ``v = 0`` the variance is deterministic and the Black-Scholes
    formula with the integrated variance is used instead.

    Raises:
        ValidationError: The parameters are not the Heston member.
        QuadratureError: An integral failed to converge.
    """
    if not p.is_heston:
        raise ValidationError(
            f"Fourier pricing needs alpha=0, beta=0.5, got alpha={p.alpha}, beta={p.beta}"
        )
    if S <= 0 or sigma < 0:
        raise ValidationError("Fourier pricing needs S > 0 and sigma >= 0")
    t = p.T if tau is None else tau
    E = p.E

    if p.v == 0:
        k = p.kappa
        if k == 0:
            variance = sigma * t
        else:
            variance = p.theta * t + (sigma - p.theta) * (1.0 - math.exp(-k * t)) / k
        return _black_scholes_put(S, E, p.r, t, variance)

    log_s, log_e = math.log(S), math.log(E)
    forward = S * math.exp(p.r * t)

    def p1(z: float) -> float:
        z = max(z, 1e-12)
        val = cmath.exp(-1j * z * log_e) * _heston_cf(z - 1j, p, log_s, sigma, t) / (1j * z * forward)
        return val.real

    def p2(z: float) -> float:
        z = max(z, 1e-12)
        val = cmath.exp(-1j * z * log_e) * _heston_cf(z, p, log_s, sigma, t) / (1j * z)
        return val.real

    P1 = 0.5 + _integrate("P1", p1) / math.pi
    P2 = 0.5 + _integrate("P2", p2) / math.pi
    call = S * P1 - E * math.exp(-p.r * t) * P2
    return call - S + E * math.exp(-p.r * t)


def heston_check(
    p: ModelParams,
    h: float,
    S: float | None = None,
    sigma: float | None = None,
    gamma: float = 0.5,
    domain: Domain = DEFAULT_DOMAIN,
    hv: HVConfig | None = None,
) -> HestonComparison:
    """Compare the compact-scheme price with the Fourier price at one node.

    The requested point snaps to the nearest mesh node and both pricers
    are evaluated there.
    """
    grid = build_grid(*domain, h)
    result = run(p, grid, build_time_grid(p.T, gamma, h), with_scheme(hv or HVConfig(), Scheme.HIGH_ORDER))
    S_node, sigma_node, pde = price_at(
        result.u, grid, p, p.T, p.E if S is None else S, p.theta_tilde if sigma is None else sigma
    )
    fourier = heston_fourier_price(p, S_node, sigma_node)
    rel = abs(pde - fourier) / abs(fourier) if fourier else abs(pde)
    logger.info("Heston check at S=%g sigma=%g: pde=%.8f fourier=%.8f", S_node, sigma_node, pde, fourier)
    return HestonComparison(
        S=S_node, sigma=sigma_node, pde_price=pde, fourier_price=fourier, rel_error=rel
    )
