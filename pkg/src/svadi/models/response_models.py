"""Pydantic models for configuration and structured results.

``RunConfig`` is the JSON config schema of the command line; the other
models describe experiment results and command responses.
"""

from typing import TYPE_CHECKING, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


if TYPE_CHECKING:
    from ..core.model import ModelParams
    from ..core.timestepper import HVConfig


STABILITY_GAMMAS = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
DEFAULT_H_LIST = [0.4, 0.2, 0.1, 0.05, 0.025]


class RunConfig(BaseModel):
    """Run configuration; defaults are the reference parameter set."""

    model_config = ConfigDict(extra="forbid")

    strike: float = Field(100.0, gt=0, description="Strike E")
    maturity: float = Field(0.5, gt=0, description="Maturity T")
    rate: float = Field(0.05, ge=0, description="Riskless rate r")
    vol_of_vol: float = Field(0.1, ge=0, description="Volatility of volatility v")
    kappa: float = Field(2.0, ge=0, description="Real-world mean-reversion speed")
    theta: float = Field(0.1, ge=0, description="Real-world long-run level")
    rho: float = Field(-0.5, ge=-1, le=1, description="Correlation")
    gamma: float = Field(0.5, gt=0, description="Parabolic mesh ratio dtau/h^2")
    alpha: float = Field(0.0, description="Drift exponent")
    beta: float = Field(0.5, description="Diffusion exponent")
    lambda0: float = Field(0.0, description="Market price of volatility risk slope")
    mu_bar: float | None = Field(None, description="Real-world drift, informational")
    phi: float = Field(0.5, gt=0, le=1, description="Implicit weight of the HV scheme")
    psi: float = Field(0.5, ge=0, description="Correction weight of the HV scheme")
    L1: float = Field(-5.0, description="Lower x-bound")
    K1: float = Field(5.0, description="Upper x-bound")
    L2: float = Field(0.1, gt=0, description="Lower y-bound")
    K2: float = Field(5.0, description="Upper y-bound")
    h: float = Field(0.1, gt=0, description="Mesh spacing for pricing")
    h_list: list[float] = Field(
        default_factory=lambda: list(DEFAULT_H_LIST),
        description="Nested spacings for convergence and stability studies",
    )
    h_ref: float | None = Field(
        None, gt=0, description="Reference spacing; defaults to half the finest h"
    )
    gamma_list: list[float] = Field(
        default_factory=lambda: list(STABILITY_GAMMAS),
        description="Mesh ratios of the stability sweep",
    )
    rho_list: list[float] | None = Field(
        None, description="Correlations to study; defaults to [rho]"
    )
    scheme: Literal["ho", "second"] = Field("ho", description="Spatial scheme")
    smooth_payoff: bool = Field(True, description="Smooth the payoff near the strike at mesh scale")
    out: str = Field("results", description="Output directory")

    @field_validator("h_list")
    @classmethod
    def _check_h_list(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("h_list must not be empty")
        if any(h <= 0 for h in value):
            raise ValueError("h_list entries must be positive")
        return value

    @field_validator("gamma_list")
    @classmethod
    def _check_gamma_list(cls, value: list[float]) -> list[float]:
        if any(not 0 < g <= 1 for g in value):
            raise ValueError("gamma_list entries must lie in (0, 1]")
        return value

    @field_validator("rho_list")
    @classmethod
    def _check_rho_list(cls, value: list[float] | None) -> list[float] | None:
        if value is not None:
            if not value:
                raise ValueError("rho_list must not be empty")
            if any(not -1 <= r <= 1 for r in value):
                raise ValueError("rho_list entries must lie in [-1, 1]")
        return value

    @model_validator(mode="after")
    def _check_domain(self) -> "RunConfig":
        if not self.L1 < self.K1:
            raise ValueError("L1 must be below K1")
        if not self.L2 < self.K2:
            raise ValueError("L2 must be below K2")
        if self.kappa + self.lambda0 == 0:
            raise ValueError("kappa + lambda0 must be nonzero")
        if self.h_ref is not None and self.h_ref > min(self.h_list) / 2:
            raise ValueError("h_ref must not exceed half the finest h in h_list")
        return self

    @property
    def rhos(self) -> list[float]:
        return list(self.rho_list) if self.rho_list is not None else [self.rho]

    @property
    def reference_h(self) -> float:
        return self.h_ref if self.h_ref is not None else min(self.h_list) / 2

    @property
    def domain(self) -> tuple[float, float, float, float]:
        return self.L1, self.K1, self.L2, self.K2

    def to_model_params(self, rho: float | None = None) -> "ModelParams":
        """Core model parameters, optionally with another correlation."""
        from ..core.model import ModelParams

        return ModelParams(
            r=self.rate,
            v=self.vol_of_vol,
            kappa_tilde=self.kappa,
            theta_tilde=self.theta,
            lambda0=self.lambda0,
            rho=self.rho if rho is None else rho,
            alpha=self.alpha,
            beta=self.beta,
            E=self.strike,
            T=self.maturity,
            mu_bar=self.mu_bar,
        )

    def hv_config(self) -> "HVConfig":
        from ..core.timestepper import HVConfig, Scheme

        return HVConfig(
            phi=self.phi,
            psi=self.psi,
            scheme=Scheme(self.scheme),
            smooth_payoff=self.smooth_payoff,
        )


class GridInfo(BaseModel):
    """Mesh and time partition of one run."""

    L1: float
    K1: float
    L2: float
    K2: float
    M: int
    N: int
    dx: float
    dy: float
    P: int
    dtau: float
    gamma: float


class RunMetadata(BaseModel):
    """Echo of a pricing run written next to its output."""

    config: RunConfig
    grid: GridInfo
    factorization_passes: int = Field(description="Factorization passes of the run")
    steps: int = Field(description="Time steps taken")
    wall_time: float = Field(description="Seconds spent in the solver")
    version: str = Field(description="Package version")


class ErrorRow(BaseModel):
    """Errors of one mesh against the reference solution."""

    h: float = Field(description="Nominal spacing")
    dx: float
    dy: float
    eps_l2: float | None = Field(None, description="Discrete l2 error over inner nodes")
    eps_linf: float | None = Field(None, description="Max error over inner nodes")
    order_l2: float | None = Field(None, description="Order against the previous row")
    order_linf: float | None = Field(None, description="Order against the previous row")
    unstable: bool = Field(False, description="Run failed with non-finite values")


class ExperimentReport(BaseModel):
    """Convergence study of one scheme at one correlation and mesh ratio."""

    scheme: str
    rho: float
    gamma: float
    rows: list[ErrorRow] = Field(default_factory=list)
    slope_l2: float | None = Field(None, description="Least-squares slope of ln eps_l2 on ln h")
    slope_linf: float | None = Field(None, description="Least-squares slope of ln eps_linf on ln h")
    reference: dict[str, Any] = Field(default_factory=dict, description="Reference mesh")


class StabilityCell(BaseModel):
    gamma: float
    h: float
    rel_eps_l2: float | None = Field(None, description="Relative l2 error, None if unstable")
    unstable: bool = False
    oscillation: bool = Field(False, description="Final field has a new local extremum in x")
    oscillating_steps: int = Field(0, description="Steps whose field had a new local extremum in x")

    @property
    def flagged(self) -> bool:
        return self.unstable or self.oscillation


class StabilityGrid(BaseModel):
    """Relative errors over mesh ratio and spacing."""

    scheme: str
    rho: float
    gammas: list[float]
    hs: list[float]
    cells: list[StabilityCell] = Field(default_factory=list)

    @property
    def max_rel_eps_l2(self) -> float | None:
        values = [c.rel_eps_l2 for c in self.cells if c.rel_eps_l2 is not None]
        return max(values) if values else None

    def cell(self, gamma: float, h: float) -> StabilityCell:
        for c in self.cells:
            if c.gamma == gamma and c.h == h:
                return c
        raise KeyError((gamma, h))


class GammaOrderRow(BaseModel):
    scheme: str
    gamma: float
    order_l2: float | None
    order_linf: float | None


class GammaOrderTable(BaseModel):
    """Fitted spatial orders per scheme and mesh ratio."""

    rho: float
    rows: list[GammaOrderRow] = Field(default_factory=list)


class TemporalReport(BaseModel):
    """Errors against a finer-step reference on a fixed mesh."""

    scheme: str
    h: float
    dtaus: list[float]
    errors: list[float]
    slope: float | None


class HestonComparison(BaseModel):
    """PDE price against the Fourier price at one snapped node."""

    S: float
    sigma: float
    pde_price: float
    fourier_price: float
    rel_error: float


class OperationResult(BaseModel):
    """Standard operation result for successful operations."""

    status: str = Field(description="Status (always 'success')")
    message: str = Field(description="Human-readable success message")
    details: dict[str, Any] | None = Field(
        None, description="Additional operation details"
    )


class OperationError(BaseModel):
    """Standard error response for failed operations."""

    status: str = Field("error", description="Status (always 'error')")
    error_type: str = Field(description="Type of error")
    message: str = Field(description="Error message")
    suggestion: str | None = Field(None, description="Suggestion for resolving the error")
    recoverable: bool = Field(True, description="Whether the error is recoverable")
    exit_code: int = Field(1, description="Process exit code for this error")
    details: dict[str, Any] | None = Field(None, description="Additional error details")
