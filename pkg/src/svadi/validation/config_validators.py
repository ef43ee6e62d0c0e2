"""Config and output-path validation for the command functions.

The decorators work for both sync and async functions and return the
standard error dictionary instead of calling the wrapped function when a
check fails.
"""

import functools
import inspect
import json
import logging
import os
from collections.abc import Callable
from pathlib import Path
from typing import Any, TypeVar, cast

from pydantic import ValidationError as PydanticValidationError

from ..exception import ConfigurationError, ExceptionTool, FileOperationError
from ..models.response_models import RunConfig


logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])


def load_run_config(path: str | Path | None, **overrides: Any) -> RunConfig:
    """Read a JSON config file into a :class:`RunConfig`.

    Args:
        path: Config file, or ``None`` for the defaults.
        **overrides: Values replacing file entries; ``None`` values are ignored.

    Raises:
        ConfigurationError: The file is unreadable, not JSON, or fails
            validation. The message names the offending fields.
    """
    data: dict[str, Any] = {}
    if path is not None:
        target = Path(path)
        try:
            raw = target.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"Cannot read config '{target}': {e}") from e
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Config '{target}' is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"Config '{target}' must hold a JSON object")

    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        config = RunConfig.model_validate(data)
    except PydanticValidationError as e:
        fields = ", ".join(
            ".".join(str(part) for part in err["loc"]) or "config" for err in e.errors()
        )
        raise ConfigurationError(f"Invalid config field(s) {fields}: {e}") from e
    logger.debug("Loaded config from %s", path or "defaults")
    return config


def validate_config_file(param_name: str) -> Callable[[F], F]:
    """Decorator checking that the config path, when given, is a readable file."""

    def check(value: Any) -> dict[str, Any] | None:
        if value is None:
            return None
        path = Path(value)
        if not path.is_file():
            return ExceptionTool.handle_error(
                ConfigurationError(f"Config file '{path}' does not exist")
            )
        if not os.access(path, os.R_OK):
            return ExceptionTool.handle_error(
                ConfigurationError(f"Config file '{path}' is not readable")
            )
        return None

    return _guard(param_name, check)


def validate_output_dir(param_name: str) -> Callable[[F], F]:
    """Decorator checking that the output directory exists or can be created."""

    def check(value: Any) -> dict[str, Any] | None:
        if value is None:
            return None
        ok, message = _check_dir_writeable(value)
        if not ok:
            return ExceptionTool.handle_error(FileOperationError(message))
        return None

    return _guard(param_name, check)


def _guard(param_name: str, check: Callable[[Any], dict[str, Any] | None]) -> Callable[[F], F]:
    def decorator(func: F) -> F:
        if inspect.iscoroutinefunction(func):

            @functools.wraps(func)
            async def async_wrapper(*args: Any, **kwargs: Any) -> Any:
                value = _get_argument_value(func, param_name, args, kwargs)
                if error := check(value):
                    return error
                return await func(*args, **kwargs)

            return cast(F, async_wrapper)

        @functools.wraps(func)
        def sync_wrapper(*args: Any, **kwargs: Any) -> Any:
            value = _get_argument_value(func, param_name, args, kwargs)
            if error := check(value):
                return error
            return func(*args, **kwargs)

        return cast(F, sync_wrapper)

    return decorator


def _check_dir_writeable(path_value: str | Path) -> tuple[bool, str]:
    """Check that a directory is writeable or that its nearest existing parent is."""
    path = Path(path_value).resolve()
    if path.exists():
        if not path.is_dir():
            return False, f"Output path '{path}' is not a directory."
        if not os.access(path, os.W_OK):
            return False, f"Output directory '{path}' is not writeable."
        return True, ""

    parent = path.parent
    while not parent.exists():
        parent = parent.parent
    if not os.access(parent, os.W_OK):
        return False, f"Cannot create '{path}': '{parent}' is not writeable."
    return True, ""


def _get_argument_value(func: Callable, name: str, args: tuple, kwargs: dict) -> Any | None:
    """Extracts an argument's value from args, kwargs or the default."""
    if name in kwargs:
        return kwargs[name]

    sig = inspect.signature(func)
    params = list(sig.parameters)
    if name not in params:
        return None
    index = params.index(name)
    if index < len(args):
        return args[index]
    default = sig.parameters[name].default
    return None if default is inspect.Parameter.empty else default
