"""Environment-variable configuration.

This module reads the ``SVADI_*`` variables that tune a run without
touching the config file.
"""

import logging
import os

from ..exception import ConfigurationError


THREADS_VAR = "SVADI_THREADS"
LOG_LEVEL_VAR = "SVADI_LOG_LEVEL"


def get_thread_count() -> int:
    """Get the worker cap for parallel experiment runs.

    Returns:
        The positive integer in ``SVADI_THREADS``, or the CPU count when
        the variable is unset.

    Raises:
        ConfigurationError: The variable is set but not a positive integer.
    """
    raw = os.environ.get(THREADS_VAR, "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigurationError(f"{THREADS_VAR} must be a positive integer, got '{raw}'") from e
    if value < 1:
        raise ConfigurationError(f"{THREADS_VAR} must be a positive integer, got '{raw}'")
    return value


def get_log_level(default: int = logging.WARNING) -> int:
    """Get the logging level named by ``SVADI_LOG_LEVEL``.

    Raises:
        ConfigurationError: The variable names no logging level.
    """
    raw = os.environ.get(LOG_LEVEL_VAR, "").strip()
    if not raw:
        return default
    level = logging.getLevelName(raw.upper())
    if not isinstance(level, int):
        raise ConfigurationError(f"{LOG_LEVEL_VAR} is not a logging level: '{raw}'")
    return level
