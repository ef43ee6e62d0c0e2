"""Models package for configuration and structured results."""

from .response_models import (
    DEFAULT_H_LIST,
    STABILITY_GAMMAS,
    ErrorRow,
    ExperimentReport,
    GammaOrderRow,
    GammaOrderTable,
    GridInfo,
    HestonComparison,
    OperationError,
    OperationResult,
    RunConfig,
    RunMetadata,
    StabilityCell,
    StabilityGrid,
    TemporalReport,
)


__all__ = [
    "DEFAULT_H_LIST",
    "STABILITY_GAMMAS",
    "RunConfig",
    "GridInfo",
    "RunMetadata",
    "ErrorRow",
    "ExperimentReport",
    "StabilityCell",
    "StabilityGrid",
    "GammaOrderRow",
    "GammaOrderTable",
    "TemporalReport",
    "HestonComparison",
    "OperationResult",
    "OperationError",
]
