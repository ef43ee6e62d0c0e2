"""Config resolution shared by the command functions."""

from collections.abc import Sequence
from pathlib import Path
from typing import Any

from ..exception import ConfigurationError
from ..models.response_models import RunConfig
from ..utils.output_utils import ensure_directory
from ..validation.config_validators import load_run_config


def single(name: str, values: Sequence[float] | None) -> float | None:
    """The one value of a list flag, for commands that take a scalar."""
    if values is None:
        return None
    if len(values) != 1:
        raise ConfigurationError(f"--{name} takes a single value for this command, got {list(values)}")
    return values[0]


def resolve_config(config_path: str | None, scheme: str | None, **overrides: Any) -> RunConfig:
    return load_run_config(config_path, scheme=scheme, **overrides)


def output_dir(config: RunConfig, out: str | None) -> Path:
    return ensure_directory(out if out is not None else config.out)
