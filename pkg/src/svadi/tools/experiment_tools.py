"""The ``converge`` and ``stability`` commands."""

import logging
from collections.abc import Sequence
from typing import Any

from ..core.experiments import convergence_study, stability_sweep
from ..core.grid import Domain
from ..core.timestepper import Scheme
from ..exception import ExceptionTool
from ..models.response_models import ExperimentReport, OperationResult, StabilityGrid
from ..utils.output_utils import write_csv
from ..validation.config_validators import validate_config_file, validate_output_dir
from .common import output_dir, resolve_config


logger = logging.getLogger(__name__)

ERRORS_HEADER = ("scheme", "rho", "gamma", "h", "eps_l2", "eps_linf", "order_pair")
ORDERS_HEADER = ("scheme", "rho", "gamma", "slope_l2", "slope_linf")
STABILITY_HEADER = ("gamma", "h", "rel_eps_l2", "unstable_flag")


def error_rows(report: ExperimentReport) -> list[tuple[Any, ...]]:
    """CSV rows of one convergence study; the pair order is the max-norm one."""
    return [
        (report.scheme, report.rho, report.gamma, row.h, row.eps_l2, row.eps_linf, row.order_linf)
        for row in report.rows
    ]


def stability_rows(grid: StabilityGrid) -> list[tuple[Any, ...]]:
    return [(c.gamma, c.h, c.rel_eps_l2, c.flagged) for c in grid.cells]


@validate_config_file("config_path")
@validate_output_dir("out")
@ExceptionTool.wrap_tool_call("converge")
async def converge(
    config_path: str | None = None,
    out: str | None = None,
    scheme: str | None = None,
    rho: Sequence[float] | None = None,
    gamma: Sequence[float] | None = None,
    h: Sequence[float] | None = None,
) -> dict[str, Any]:
    """Run a convergence study per correlation and mesh ratio.

    Writes ``errors.csv`` with one row per mesh and ``orders.csv`` with
    the fitted slopes.
    """
    config = resolve_config(
        config_path,
        scheme,
        rho_list=list(rho) if rho is not None else None,
        h_list=list(h) if h is not None else None,
    )
    target = output_dir(config, out)
    gammas = list(gamma) if gamma is not None else [config.gamma]
    which = Scheme(config.scheme)
    hv = config.hv_config()

    reports = []
    for r in config.rhos:
        p = config.to_model_params(rho=r)
        for g in gammas:
            logger.info("Convergence study scheme=%s rho=%g gamma=%g", which.value, r, g)
            reports.append(
                convergence_study(
                    p, which, g, config.h_list, config.reference_h, Domain(*config.domain), hv
                )
            )

    write_csv(
        target / "errors.csv",
        ERRORS_HEADER,
        [row for report in reports for row in error_rows(report)],
    )
    write_csv(
        target / "orders.csv",
        ORDERS_HEADER,
        [(rp.scheme, rp.rho, rp.gamma, rp.slope_l2, rp.slope_linf) for rp in reports],
    )

    return OperationResult(
        status="success",
        message=f"Ran {len(reports)} convergence stud{'y' if len(reports) == 1 else 'ies'}; wrote {target}",
        details={
            "out": str(target),
            "files": ["errors.csv", "orders.csv"],
            "slopes": [
                {"rho": rp.rho, "gamma": rp.gamma, "l2": rp.slope_l2, "linf": rp.slope_linf}
                for rp in reports
            ],
        },
    ).model_dump()


@validate_config_file("config_path")
@validate_output_dir("out")
@ExceptionTool.wrap_tool_call("stability")
async def stability(
    config_path: str | None = None,
    out: str | None = None,
    scheme: str | None = None,
    rho: Sequence[float] | None = None,
    gamma: Sequence[float] | None = None,
    h: Sequence[float] | None = None,
) -> dict[str, Any]:
    """Sweep mesh ratio and spacing; write ``stability.csv``.

    With several correlations each gets its own ``stability_rho=<rho>.csv``.
    """
    config = resolve_config(
        config_path,
        scheme,
        rho_list=list(rho) if rho is not None else None,
        gamma_list=list(gamma) if gamma is not None else None,
        h_list=list(h) if h is not None else None,
    )
    target = output_dir(config, out)
    which = Scheme(config.scheme)
    hv = config.hv_config()
    rhos = config.rhos

    files = []
    flagged = 0
    worst = None
    for r in rhos:
        p = config.to_model_params(rho=r)
        logger.info("Stability sweep scheme=%s rho=%g", which.value, r)
        sweep = stability_sweep(p, which, config.gamma_list, config.h_list, Domain(*config.domain), hv)
        name = "stability.csv" if len(rhos) == 1 else f"stability_rho={r!r}.csv"
        write_csv(target / name, STABILITY_HEADER, stability_rows(sweep))
        files.append(name)
        flagged += sum(c.flagged for c in sweep.cells)
        if sweep.max_rel_eps_l2 is not None:
            worst = max(worst or 0.0, sweep.max_rel_eps_l2)

    if flagged:
        logger.warning("%d stability cell(s) flagged", flagged)
    return OperationResult(
        status="success",
        message=f"Stability sweep over {len(rhos)} correlation(s); wrote {target}",
        details={
            "out": str(target),
            "files": files,
            "flagged": flagged,
            "max_rel_eps_l2": worst,
        },
    ).model_dump()

