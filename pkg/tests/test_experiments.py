"""Tests for the convergence, stability and oracle studies."""

import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.stats import norm

from svadi.core.experiments import (
    RunMonitor,
    convergence_study,
    error_norms,
    extremum_counts,
    fit_slope,
    gamma_order_table,
    has_oscillation,
    heston_check,
    heston_fourier_price,
    pair_orders,
    stability_sweep,
    temporal_order_study,
)
from svadi.core.grid import Domain, build_grid, build_nested_grids, time_grid_with_steps
from svadi.core.model import ModelParams, ModelVariant
from svadi.core.timestepper import Scheme, initial_field, run
from svadi.exception import InstabilityError, ValidationError
from svadi.models.response_models import DEFAULT_H_LIST, STABILITY_GAMMAS


SMALL = Domain(-3.2, 3.2, 0.2, 5.0)


def _bs_put(S, E, r, tau, variance):
    sd = math.sqrt(variance)
    d1 = (math.log(S / E) + r * tau + variance / 2) / sd
    d2 = d1 - sd
    return E * math.exp(-r * tau) * norm.cdf(-d2) - S * norm.cdf(-d1)


class TestNorms:
    """Tests for error norms and order fits."""

    def test_self_comparison_is_zero(self):
        """Test that a solution compared to itself has zero error."""
        coarse, fine = build_nested_grids(*SMALL, 0.8, 2)
        u = np.random.default_rng(0).normal(size=fine.shape)
        assert error_norms(u[::2, ::2], u, 2, coarse) == (0.0, 0.0)

    def test_known_error(self):
        """Test both norms for a constant offset on the inner nodes."""
        grid = build_grid(*SMALL, 0.8)
        ref = np.zeros(grid.shape)
        u = np.full(grid.shape, 0.5)
        eps2, epsinf = error_norms(u, ref, 1, grid)
        inner = (grid.M - 2) * (grid.N - 2)
        assert epsinf == 0.5
        assert eps2 == pytest.approx(0.5 * math.sqrt(inner * grid.dx * grid.dy))

    def test_stride_mismatch(self):
        """Test that a reference that does not nest is rejected."""
        grid = build_grid(*SMALL, 0.8)
        with pytest.raises(ValidationError):
            error_norms(np.zeros(grid.shape), np.zeros((20, 20)), 2, grid)

    def test_fit_slope_recovers_power(self):
        """Test the least-squares slope of eps = C h^4."""
        h = [0.4, 0.2, 0.1, 0.05]
        assert fit_slope(h, [3.0 * x**4 for x in h]) == pytest.approx(4.0)

    def test_fit_slope_invariant_under_scaling(self):
        """Test that rescaling all errors leaves the slope unchanged."""
        h = [0.4, 0.2, 0.1]
        eps = [0.02, 0.004, 0.0011]
        assert fit_slope(h, [1e3 * e for e in eps]) == pytest.approx(fit_slope(h, eps))

    def test_fit_slope_skips_missing_rows(self):
        """Test that flagged rows are left out and one row gives no slope."""
        assert fit_slope([0.4, 0.2, 0.1], [None, 1e-2, 1e-3]) == pytest.approx(math.log2(10))
        assert fit_slope([0.4], [1e-2]) is None

    def test_pair_orders(self):
        """Test per-pair orders between consecutive rows."""
        orders = pair_orders([0.4, 0.2, 0.1], [1.6e-3, 1e-4, None])
        assert orders[0] is None
        assert orders[1] == pytest.approx(4.0)
        assert orders[2] is None

    def test_monotone_lines_have_no_extrema(self):
        """Test that a field decreasing in x has no local extremum."""
        u = np.tile(np.linspace(1.0, 0.0, 7)[:, np.newaxis], (1, 7))
        np.testing.assert_array_equal(extremum_counts(u), 0)
        assert not has_oscillation(u)

    def test_new_extremum_is_flagged(self):
        """Test that a bump on one x-line is an oscillation."""
        u = np.tile(np.linspace(1.0, 0.0, 7)[:, np.newaxis], (1, 7))
        u[3, 3] += 0.5
        np.testing.assert_array_equal(extremum_counts(u), [0, 0, 2, 0, 0])
        assert has_oscillation(u)

    def test_extremum_in_reference_is_not_new(self):
        """Test that extrema already present in the reference are not flagged."""
        reference = np.zeros((7, 7))
        reference[4, :] = -1e-3
        u = reference * 0.5
        assert not has_oscillation(u, reference)
        assert has_oscillation(u)

    def test_wiggles_below_tolerance_are_flat(self):
        """Test that differences under the tolerance do not count."""
        u = np.zeros((7, 7))
        u[2::2, :] = 1e-9
        assert not has_oscillation(u)
        assert has_oscillation(u, tol=1e-12)


class TestConvergenceStudy:
    """Tests for convergence_study on small meshes."""

    def test_report_structure(self):
        """Test rows sorted by decreasing h with errors and pair orders."""
        report = convergence_study(ModelParams(), Scheme.HIGH_ORDER, 0.5, [0.4, 0.8], 0.2, SMALL, workers=1)
        assert [row.h for row in report.rows] == [0.8, 0.4]
        assert report.rows[0].order_linf is None
        assert all(row.eps_l2 > 0 and row.eps_linf > 0 for row in report.rows)
        assert report.rows[1].eps_linf < report.rows[0].eps_linf
        assert report.slope_linf is not None
        assert report.reference["h"] == pytest.approx(0.2)
        assert report.scheme == "ho"

    def test_worker_count_does_not_change_results(self):
        """Test that threaded and serial studies agree bitwise."""
        p = ModelParams(rho=0.0)
        serial = convergence_study(p, Scheme.SECOND_ORDER, 0.5, [0.8, 0.4], 0.2, SMALL, workers=1)
        threaded = convergence_study(p, Scheme.SECOND_ORDER, 0.5, [0.8, 0.4], 0.2, SMALL, workers=2)
        assert serial.rows == threaded.rows

    def test_reference_must_be_finer(self):
        """Test that h_ref above half the finest h is rejected."""
        with pytest.raises(ValidationError):
            convergence_study(ModelParams(), Scheme.HIGH_ORDER, 0.5, [0.8, 0.4], 0.4, SMALL)

    def test_spacings_must_nest(self):
        """Test that spacings that are not halvings are rejected."""
        with pytest.raises(ValidationError):
            convergence_study(ModelParams(), Scheme.HIGH_ORDER, 0.5, [0.8, 0.3], 0.1, SMALL)

    def test_empty_gamma_list_gives_empty_table(self):
        """Test gamma_order_table with no mesh ratios."""
        table = gamma_order_table(ModelParams(), [], [0.8, 0.4], 0.2, domain=SMALL)
        assert table.rows == []


class TestStabilitySweep:
    """Tests for stability_sweep on small meshes."""

    def test_every_cell_is_data(self):
        """Test that each cell is either a finite error or a flag."""
        sweep = stability_sweep(ModelParams(), Scheme.HIGH_ORDER, [0.5, 1.0], [0.8, 0.4], SMALL, workers=1)
        assert len(sweep.cells) == 4
        assert sweep.hs == [0.8, 0.4]
        for cell in sweep.cells:
            assert cell.unstable or (cell.rel_eps_l2 is not None and math.isfinite(cell.rel_eps_l2))
        assert sweep.cell(1.0, 0.4).gamma == 1.0
        assert all(0 <= cell.oscillating_steps for cell in sweep.cells)

    def test_gamma_range(self):
        """Test that mesh ratios outside (0, 1] are rejected."""
        with pytest.raises(ValidationError):
            stability_sweep(ModelParams(), Scheme.HIGH_ORDER, [1.5], [0.8], SMALL)


class TestRunMonitor:
    """Tests for the per-step observer used by the stability sweep."""

    def test_growth_raises(self):
        """Test that a field beyond the growth limit stops the run."""
        monitor = RunMonitor(np.ones((7, 7)))
        with pytest.raises(InstabilityError) as exc_info:
            monitor(SimpleNamespace(u=np.full((7, 7), 11.0), n=3))
        assert exc_info.value.stage == "step"
        assert exc_info.value.time_index == 3

    def test_counts_oscillating_steps(self):
        """Test that only steps with a new extremum are counted."""
        smooth = np.tile(np.linspace(1.0, 0.0, 7)[:, np.newaxis], (1, 7))
        bumped = smooth.copy()
        bumped[3, 2] += 0.5
        monitor = RunMonitor(smooth)
        for n, u in enumerate((smooth, bumped, smooth, bumped), start=1):
            monitor(SimpleNamespace(u=u, n=n))
        assert monitor.oscillating_steps == 2

    def test_watches_a_run(self):
        """Test the monitor as the observer of a coarse run."""
        p = ModelParams()
        grid = build_grid(*SMALL, 0.4)
        monitor = RunMonitor(initial_field(grid, p))
        result = run(p, grid, time_grid_with_steps(p.T, 6, grid.h), observer=monitor)
        assert 0 <= monitor.oscillating_steps <= result.stats.steps

class TestTemporalOrder:
    """Tests for temporal_order_study."""

    def test_errors_shrink_with_dtau(self):
        """Test that halving the step reduces the error."""
        report = temporal_order_study(
            ModelParams(), Scheme.HIGH_ORDER, 0.4, [4, 8], reference_steps=32, domain=SMALL, workers=1
        )
        assert report.dtaus == [0.125, 0.0625]
        assert report.errors[1] < report.errors[0]
        assert report.slope is not None and report.slope > 0

    def test_second_order_on_coarse_mesh(self):
        """Test the temporal slope where the steps are not stiff."""
        report = temporal_order_study(
            ModelParams(), Scheme.HIGH_ORDER, 0.4, [8, 16, 32], reference_steps=256, domain=SMALL, workers=1
        )
        assert report.slope >= 1.8


class TestHestonFourier:
    """Tests for the semi-analytic Heston oracle."""

    def test_zero_vol_of_vol_is_black_scholes(self):
        """Test that v = 0 reduces to the constant-variance closed form."""
        p = ModelParams(v=0.0)
        price = heston_fourier_price(p, 100.0, 0.1)
        assert price == pytest.approx(_bs_put(100.0, 100.0, 0.05, 0.5, 0.05), abs=1e-6)

    def test_deterministic_variance_path(self):
        """Test that v = 0 integrates the mean-reverting variance."""
        p = ModelParams(v=0.0)
        sigma = 0.3
        variance = 0.1 * 0.5 + (sigma - 0.1) * (1 - math.exp(-2.0 * 0.5)) / 2.0
        assert heston_fourier_price(p, 95.0, sigma) == pytest.approx(_bs_put(95.0, 100.0, 0.05, 0.5, variance), abs=1e-6)

    def test_small_vol_of_vol_is_continuous(self):
        """Test that the Fourier integral approaches the v = 0 price."""
        near = heston_fourier_price(ModelParams(v=0.01), 100.0, 0.1)
        limit = heston_fourier_price(ModelParams(v=0.0), 100.0, 0.1)
        assert near == pytest.approx(limit, abs=2e-2)

    def test_deep_in_the_money(self):
        """Test that the put tends to E exp(-rT) - S for small S."""
        p = ModelParams()
        price = heston_fourier_price(p, 20.0, 0.1)
        assert price == pytest.approx(p.E * math.exp(-p.r * p.T) - 20.0, abs=1e-4)

    def test_no_arbitrage_bounds(self):
        """Test the ATM price against the put bounds."""
        p = ModelParams()
        price = heston_fourier_price(p, 100.0, 0.1)
        discounted = p.E * math.exp(-p.r * p.T)
        assert max(discounted - 100.0, 0.0) < price < discounted

    def test_rejects_other_models(self):
        """Test that only the square-root member is priced."""
        with pytest.raises(ValidationError):
            heston_fourier_price(ModelParams.for_variant(ModelVariant.VAR), 100.0, 0.1)


REDUCED = Domain(-2.4, 2.4, 1.0, 3.4)


class TestReducedAcceptance:
    """Acceptance checks scaled down to run in seconds.

    A larger vol-of-vol and a variance range away from zero keep the
    solution resolved on coarse meshes.
    """

    def test_compact_scheme_beats_second_order(self):
        """Test the compact pair order and its error against the central-difference scheme."""
        p = ModelParams(v=0.4, T=0.25)
        compact = convergence_study(p, Scheme.HIGH_ORDER, 0.5, [0.2, 0.1], 0.05, REDUCED, workers=1)
        central = convergence_study(p, Scheme.SECOND_ORDER, 0.5, [0.2, 0.1], 0.05, REDUCED, workers=1)
        assert compact.rows[1].order_linf >= 2.8
        assert compact.rows[1].eps_linf < central.rows[1].eps_linf

    def test_heston_price_on_coarse_mesh(self):
        """Test the at-the-money PDE price against the Fourier price at h = 0.1."""
        comparison = heston_check(ModelParams(), 0.1, 100.0, 0.1)
        assert comparison.rel_error < 1e-2


@pytest.mark.slow
class TestAcceptance:
    """Full-scale studies on the default domain; minutes each."""

    def test_compact_scheme_is_fourth_order(self):
        """Test fitted orders of the compact scheme at gamma = 0.5."""
        report = convergence_study(ModelParams(), Scheme.HIGH_ORDER, 0.5, DEFAULT_H_LIST, 0.0125)
        assert 3.4 <= report.slope_linf <= 4.4
        assert 3.4 <= report.slope_l2 <= 4.4

    def test_second_order_scheme(self):
        """Test fitted orders of the central-difference scheme."""
        report = convergence_study(ModelParams(), Scheme.SECOND_ORDER, 0.5, DEFAULT_H_LIST, 0.0125)
        assert 1.7 <= report.slope_linf <= 2.3
        assert 2.0 <= report.slope_l2 <= 2.9

    def test_orders_do_not_depend_on_gamma(self):
        """Test that fitted orders vary by less than 0.2 across mesh ratios."""
        table = gamma_order_table(
            ModelParams(), [0.2, 0.4, 0.6, 0.8, 1.0], DEFAULT_H_LIST, 0.0125, schemes=(Scheme.HIGH_ORDER,)
        )
        for values in ([r.order_l2 for r in table.rows], [r.order_linf for r in table.rows]):
            assert max(values) - min(values) < 0.2

    @pytest.mark.parametrize("rho", [0.0, -0.5])
    def test_stable_for_every_mesh_ratio(self, rho):
        """Test the stability sweep over gamma = 0.2, ..., 1.0."""
        sweep = stability_sweep(ModelParams(rho=rho), Scheme.HIGH_ORDER, STABILITY_GAMMAS, [0.2, 0.1, 0.05])
        assert not any(cell.flagged for cell in sweep.cells)
        fine = [c.rel_eps_l2 for c in sweep.cells if c.h <= 0.1]
        assert max(fine) <= 5e-3
        assert sweep.max_rel_eps_l2 <= 2e-2

    def test_heston_cross_validation(self):
        """Test the PDE price against the Fourier price at the money."""
        comparison = heston_check(ModelParams(), 0.025, 100.0, 0.1)
        assert comparison.rel_error < 1e-3

    def test_second_order_in_time(self):
        """Test the temporal slope at h = 0.05."""
        report = temporal_order_study(ModelParams(), Scheme.HIGH_ORDER, 0.05, [25, 50, 100], reference_steps=800)
        assert report.slope >= 1.8
