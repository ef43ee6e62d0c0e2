"""The ``price`` command.

Writes the untransformed price surface, the transformed solution and a
metadata echo of the run.
"""

import logging
from collections.abc import Sequence
from typing import Any

import numpy as np

from .. import __version__
from ..core.grid import build_grid, build_time_grid
from ..core.timestepper import run
from ..exception import ExceptionTool
from ..models.response_models import GridInfo, OperationResult, RunMetadata
from ..utils.output_utils import write_csv, write_json
from ..validation.config_validators import validate_config_file, validate_output_dir
from .common import output_dir, resolve_config, single


logger = logging.getLogger(__name__)

SURFACE_HEADER = ("S", "sigma", "V")
SOLUTION_HEADER = ("x", "y", "u")


@validate_config_file("config_path")
@validate_output_dir("out")
@ExceptionTool.wrap_tool_call("price")
async def price(
    config_path: str | None = None,
    out: str | None = None,
    scheme: str | None = None,
    rho: Sequence[float] | None = None,
    gamma: Sequence[float] | None = None,
    h: Sequence[float] | None = None,
) -> dict[str, Any]:
    """Price a European put on one mesh and write ``surface.csv``, ``u.csv``
    and ``metadata.json``."""
    config = resolve_config(
        config_path,
        scheme,
        rho=single("rho", rho),
        gamma=single("gamma", gamma),
        h=single("h", h),
    )
    target = output_dir(config, out)
    p = config.to_model_params()
    grid = build_grid(*config.domain, config.h)
    tgrid = build_time_grid(p.T, config.gamma, grid.h)

    result = run(p, grid, tgrid, config.hv_config())
    surface = result.surface()

    S = np.repeat(surface.S, grid.N)
    sigma = np.tile(surface.sigma, grid.M)
    write_csv(
        target / "surface.csv",
        SURFACE_HEADER,
        zip(S.tolist(), sigma.tolist(), surface.V.ravel().tolist(), strict=True),
    )
    x = np.repeat(grid.x, grid.N)
    y = np.tile(grid.y, grid.M)
    write_csv(
        target / "u.csv",
        SOLUTION_HEADER,
        zip(x.tolist(), y.tolist(), result.u.ravel().tolist(), strict=True),
    )

    metadata = RunMetadata(
        config=config,
        grid=GridInfo(
            L1=grid.L1,
            K1=grid.K1,
            L2=grid.L2,
            K2=grid.K2,
            M=grid.M,
            N=grid.N,
            dx=grid.dx,
            dy=grid.dy,
            P=tgrid.P,
            dtau=tgrid.dtau,
            gamma=tgrid.gamma,
        ),
        factorization_passes=result.stats.factorization_passes,
        steps=result.stats.steps,
        wall_time=result.stats.wall_time,
        version=__version__,
    )
    write_json(target / "metadata.json", metadata)

    return OperationResult(
        status="success",
        message=f"Priced on a {grid.M}x{grid.N} mesh in {tgrid.steps} steps; wrote {target}",
        details={
            "out": str(target),
            "files": ["surface.csv", "u.csv", "metadata.json"],
            "factorization_passes": result.stats.factorization_passes,
        },
    ).model_dump()
