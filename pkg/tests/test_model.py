"""Tests for the model class and the transformed PDE."""

import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad

from svadi.core.grid import build_grid
from svadi.core.model import (
    HESTON,
    ModelParams,
    ModelVariant,
    diffusion_matrix,
    dirichlet_walls,
    dirichlet_x,
    initial_condition,
    inverse_transform,
    kernel_average,
    no_arbitrage_bounds,
    price_at,
    project_to_bounds,
    smoothed_initial_condition,
    smoothing_kernel,
    transformed_coefficients,
)
from svadi.exception import ValidationError


class TestModelParams:
    """Tests for ModelParams validation and derived values."""

    def test_defaults_are_heston(self):
        """Test that the default parameter set is the square-root model."""
        p = ModelParams()
        assert p.variant is HESTON
        assert p.is_heston
        assert (p.r, p.v, p.kappa, p.theta, p.rho, p.E, p.T) == (0.05, 0.1, 2.0, 0.1, -0.5, 100.0, 0.5)

    def test_risk_premium_folds_into_drift(self):
        """Test that lambda0 shifts kappa and rescales theta."""
        p = ModelParams(lambda0=0.5)
        assert p.kappa == pytest.approx(2.5)
        assert p.theta == pytest.approx(0.08)
        assert p.kappa * p.theta == pytest.approx(p.kappa_tilde * p.theta_tilde)

    @pytest.mark.parametrize("field,value", [("rho", 1.5), ("v", -0.1), ("E", 0.0), ("T", -1.0)])
    def test_out_of_range(self, field, value):
        """Test that out-of-range parameters name the field."""
        with pytest.raises(ValidationError, match=field):
            ModelParams(**{field: value})

    def test_degenerate_mean_reversion(self):
        """Test that kappa_tilde + lambda0 = 0 is rejected."""
        with pytest.raises(ValidationError):
            ModelParams(kappa_tilde=1.0, lambda0=-1.0)

    def test_for_variant(self):
        """Test building parameters for a named model."""
        p = ModelParams.for_variant(ModelVariant.THREE_HALVES_N, rho=0.0)
        assert (p.alpha, p.beta) == (1.0, 1.5)
        assert p.variant is ModelVariant.THREE_HALVES_N
        assert not p.is_heston

    def test_unnamed_exponents(self):
        """Test that exponents outside the named set have no variant."""
        assert ModelParams(alpha=0.5).variant is None

    def test_replace_revalidates(self):
        """Test that dataclasses.replace runs the same checks as the constructor."""
        p = replace(ModelParams(), rho=0.0)
        assert p.rho == 0.0
        with pytest.raises(ValidationError, match="rho"):
            replace(p, rho=2.0)


class TestTransformedCoefficients:
    """Tests for the coefficient functions of the transformed PDE."""

    def test_values_at_reference_point(self):
        """Test coefficients at y = 1 for the default parameters."""
        c = transformed_coefficients(ModelParams())
        assert c.c_xx(1.0) == pytest.approx(0.05)
        assert c.c_yy(1.0) == pytest.approx(0.05)
        assert c.c_xy(1.0) == pytest.approx(-0.05)
        assert c.c_x(1.0) == pytest.approx(0.0)
        assert c.c_y(1.0) == pytest.approx(0.0)

    def test_rejects_nonpositive_y(self):
        """Test that y <= 0 is rejected."""
        c = transformed_coefficients(ModelParams())
        with pytest.raises(ValidationError):
            c.c_xx(np.array([0.5, 0.0]))

    def test_c_y_undefined_without_vol_of_vol(self):
        """Test that v = 0 has no y-drift."""
        c = transformed_coefficients(ModelParams(v=0.0))
        with pytest.raises(ValidationError):
            c.c_y(1.0)

    @pytest.mark.parametrize("variant", list(ModelVariant))
    def test_derivatives_match_finite_differences(self, variant):
        """Test the analytic y-derivatives of c_yy and c_y."""
        c = transformed_coefficients(ModelParams.for_variant(variant, v=0.4, rho=0.3))
        y = np.linspace(0.5, 2.0, 7)
        eps = 1e-5
        for f, f1, f2 in ((c.c_yy, c.c_yy_1, c.c_yy_2), (c.c_y, c.c_y_1, c.c_y_2)):
            np.testing.assert_allclose(f1(y), (f(y + eps) - f(y - eps)) / (2 * eps), rtol=1e-6, atol=1e-9)
            np.testing.assert_allclose(f2(y), (f1(y + eps) - f1(y - eps)) / (2 * eps), rtol=1e-6, atol=1e-9)

    def test_scaled_zero_is_null(self):
        """Test that scaled(0) zeroes every coefficient."""
        c = transformed_coefficients(ModelParams()).scaled(0.0)
        s = c.sample(np.array([0.5, 1.0, 2.0]))
        for name in ("c_xx", "c_yy", "c_xy", "c_x", "c_y", "c_yy_1", "c_y_2"):
            assert not np.any(getattr(s, name))

    def test_diffusion_matrix_is_symmetric_psd(self):
        """Test the 2x2 diffusion matrices for |rho| <= 1."""
        c = transformed_coefficients(ModelParams(rho=-0.9))
        mats = diffusion_matrix(c, np.linspace(0.1, 5.0, 9))
        assert mats.shape == (9, 2, 2)
        np.testing.assert_allclose(mats, np.transpose(mats, (0, 2, 1)))
        assert np.all(np.linalg.eigvalsh(mats) >= -1e-14)


class TestBoundaryData:
    """Tests for the payoff and the x-wall data."""

    def test_initial_condition(self):
        """Test the transformed put payoff."""
        np.testing.assert_allclose(
            initial_condition([math.log(0.5), 0.0, 1.0]), [0.5, 0.0, 0.0], atol=1e-15
        )

    def test_dirichlet_walls(self):
        """Test both x-wall values."""
        p = ModelParams()
        assert dirichlet_x("low", 0.0, p, -5.0) == pytest.approx(1.0 - math.exp(-5.0))
        assert dirichlet_x("low", 0.5, p, -5.0) == pytest.approx(1.0 - math.exp(0.025 - 5.0))
        assert dirichlet_x("high", 0.5, p, -5.0) == 0.0
        with pytest.raises(ValidationError):
            dirichlet_x("middle", 0.0, p, -5.0)  # type: ignore[arg-type]

    def test_walls_match_payoff_at_maturity(self):
        """Test that the low wall equals the payoff at tau = 0."""
        p = ModelParams()
        grid = build_grid(-5.0, 5.0, 0.1, 5.0, 0.2)
        low, high = dirichlet_walls(0.0, p, grid)
        assert low == pytest.approx(float(initial_condition(grid.L1)))
        assert high == 0.0


class TestInverseTransform:
    """Tests for mapping solutions back to option prices."""

    def test_surface_coordinates(self):
        """Test S = E exp(x), sigma = v y and the discounting."""
        p = ModelParams()
        grid = build_grid(-5.0, 5.0, 0.1, 5.0, 0.5)
        surface = inverse_transform(np.ones(grid.shape), grid, p, p.T)
        np.testing.assert_allclose(surface.S, p.E * np.exp(grid.x))
        np.testing.assert_allclose(surface.sigma, p.v * grid.y)
        np.testing.assert_allclose(surface.V, p.E * math.exp(-p.r * p.T))
        assert surface.t == 0.0

    def test_price_at_snaps_to_node(self):
        """Test that price_at reports the snapped node coordinates."""
        p = ModelParams()
        grid = build_grid(-5.0, 5.0, 0.1, 5.0, 0.5)
        u = np.zeros(grid.shape)
        i, j = grid.node_of(0.0, 1.0)
        u[i, j] = 0.08
        S, sigma, V = price_at(u, grid, p, p.T, 100.0, 0.1)
        assert S == pytest.approx(p.E * math.exp(grid.x[i]))
        assert sigma == pytest.approx(p.v * grid.y[j])
        assert V == pytest.approx(p.E * math.exp(-p.r * p.T) * 0.08)


def _gaussian(z):
    return np.exp(-((z - 0.1) ** 2) / 0.5)


class TestSmoothing:
    """Tests for the smoothed payoff near the strike."""

    @pytest.mark.parametrize("k,want", [(0, 1.0), (1, 0.0), (2, 0.0), (3, 0.0), (4, -0.7)])
    def test_kernel_moments(self, k, want):
        """Test that the kernel has unit mass, vanishing moments one to three and fourth moment -7/10."""
        value, _ = quad(
            lambda t: t**k * float(smoothing_kernel(t)),
            -3.0,
            3.0,
            points=[-2.0, -1.0, 0.0, 1.0, 2.0],
            epsabs=1e-14,
        )
        assert value == pytest.approx(want, abs=1e-12)

    def test_kernel_shape(self):
        """Test symmetry, support on [-3, 3] and the negative outer lobes."""
        t = np.linspace(-4.0, 4.0, 161)
        K = smoothing_kernel(t)
        np.testing.assert_allclose(K, K[::-1], atol=1e-12)
        assert np.all(K[np.abs(t) >= 3.0] == 0.0)
        assert float(smoothing_kernel(2.5)) < 0.0
        assert float(smoothing_kernel(0.0)) == pytest.approx(5.0 / 6.0)

    def test_kernel_average_reproduces_cubics(self):
        """Test that cubic polynomials are left unchanged by the average."""
        value = kernel_average(lambda z: z**3 - 2.0 * z + 1.0, 0.3, 0.1)
        assert value == pytest.approx(0.3**3 - 0.6 + 1.0, abs=1e-12)

    def test_kernel_average_rejects_bad_spacing(self):
        """Test that dx <= 0 is refused."""
        with pytest.raises(ValidationError):
            kernel_average(math.exp, 0.0, 0.0)

    def test_exact_away_from_strike(self):
        """Test that only nodes within three cells of the strike change."""
        x = np.linspace(-1.0, 1.0, 41)
        dx = 0.05
        smoothed = smoothed_initial_condition(x, dx)
        exact = initial_condition(x)
        far = np.abs(x) > 0.2
        np.testing.assert_array_equal(smoothed[far], exact[far])
        assert np.max(np.abs(smoothed - exact)) < dx / 4
        assert smoothed[20] > 0.0

    def test_dip_out_of_the_money(self):
        """Test the small negative value where only the outer lobe sees the payoff."""
        dx = 0.1
        value = float(smoothed_initial_condition(np.array([2.5 * dx]), dx)[0])
        assert -1e-2 * dx < value < 0.0

    @pytest.mark.parametrize("offset", [1.0 / 3.0, 2.0 / 3.0])
    def test_lattice_sums_are_fourth_order(self, offset):
        """Test weighted lattice sums of the smoothed payoff wherever the strike falls in a cell."""
        exact, _ = quad(lambda z: (1.0 - math.exp(z)) * float(_gaussian(z)), -8.0, 0.0, epsabs=1e-14, epsrel=1e-13)
        smoothed, raw = [], []
        for h in (0.1, 0.05):
            n = round(8.0 / h)
            x = (np.arange(-n, n + 1) + offset) * h
            w = _gaussian(x)
            smoothed.append(abs(h * np.sum(smoothed_initial_condition(x, h) * w) - exact))
            raw.append(abs(h * np.sum(initial_condition(x) * w) - exact))
        assert math.log2(smoothed[0] / smoothed[1]) > 3.3
        # nodal sampling of the kink is only second order
        assert raw[1] > 10 * smoothed[1]


class TestNoArbitrageBounds:
    """Tests for the put bounds in transformed variables."""

    def test_bound_values(self):
        """Test max(1 - exp(x + r tau), 0) and the unit upper bound."""
        p = ModelParams()
        lower, upper = no_arbitrage_bounds([-1.0, 0.0, 1.0], 0.5, p)
        np.testing.assert_allclose(lower, [1.0 - math.exp(-0.975), 0.0, 0.0])
        np.testing.assert_array_equal(upper, 1.0)

    def test_lower_bound_is_low_wall(self):
        """Test that the lower bound at L1 equals the low x-wall data."""
        p = ModelParams()
        lower, _ = no_arbitrage_bounds([-5.0], 0.3, p)
        assert lower[0] == pytest.approx(dirichlet_x("low", 0.3, p, -5.0))

    def test_projection_clips_only_violations(self):
        """Test that values inside the bounds are untouched."""
        p = ModelParams()
        grid = build_grid(-5.0, 5.0, 0.1, 5.0, 0.5)
        lower, _ = no_arbitrage_bounds(grid.x, p.T, p)
        u = np.repeat(lower[:, np.newaxis], grid.N, axis=1) + 1e-3
        u[-2, 3] = -1e-4
        u[1, 4] = 1.5
        got = project_to_bounds(u, grid, p, p.T)
        assert got[-2, 3] == 0.0
        assert got[1, 4] == 1.0
        keep = np.ones(grid.shape, dtype=bool)
        keep[-2, 3] = keep[1, 4] = False
        np.testing.assert_array_equal(got[keep], u[keep])
