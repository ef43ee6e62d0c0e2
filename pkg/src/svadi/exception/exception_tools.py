"""Exception handling utilities for the svadi commands.

This module provides tools for consistent exception handling across all
command functions, including the exit-code mapping, error response
builders and the decorator that wraps every command.
"""

import inspect
import logging
from collections.abc import Callable
from functools import wraps
from typing import Any

from ..models.response_models import OperationError
from .exception_core import (
    ConfigurationError,
    FileOperationError,
    InstabilityError,
    QuadratureError,
    SingularLineError,
    SolverError,
    ValidationError,
)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INSTABILITY = 3


class ExceptionTool:
    """Utility class for centralized exception handling."""

    # Order matters: subclasses must come before their bases.
    EXCEPTION_MAPPING: dict[type[Exception], dict[str, Any]] = {
        InstabilityError: {
            "error_type": "instability",
            "recoverable": True,
            "exit_code": EXIT_INSTABILITY,
        },
        SingularLineError: {
            "error_type": "singular_line",
            "recoverable": True,
            "exit_code": EXIT_INSTABILITY,
        },
        QuadratureError: {
            "error_type": "quadrature",
            "recoverable": True,
            "exit_code": EXIT_INSTABILITY,
        },
        SolverError: {
            "error_type": "solver",
            "recoverable": True,
            "exit_code": EXIT_INSTABILITY,
        },
        ValidationError: {
            "error_type": "validation",
            "recoverable": False,
            "exit_code": EXIT_CONFIG,
        },
        ConfigurationError: {
            "error_type": "configuration",
            "recoverable": False,
            "exit_code": EXIT_CONFIG,
        },
        FileOperationError: {
            "error_type": "file_operation",
            "recoverable": True,
            "exit_code": EXIT_FAILURE,
        },
        ValueError: {
            "error_type": "validation",
            "recoverable": False,
            "exit_code": EXIT_CONFIG,
        },
        FileNotFoundError: {
            "error_type": "file_not_found",
            "recoverable": False,
            "exit_code": EXIT_CONFIG,
        },
        PermissionError: {
            "error_type": "permission_denied",
            "recoverable": False,
            "exit_code": EXIT_FAILURE,
        },
        OSError: {
            "error_type": "file_operation",
            "recoverable": True,
            "exit_code": EXIT_FAILURE,
        },
    }

    @staticmethod
    def get_error_info(exception: Exception) -> dict[str, Any]:
        """Get error information for an exception.

        Args:
            exception: The exception to analyze.

        Returns:
            Dictionary with error_type, recoverable, exit_code and message.
        """
        exc_type = type(exception)

        for exc_class, info in ExceptionTool.EXCEPTION_MAPPING.items():
            if issubclass(exc_type, exc_class):
                return {
                    "error_type": info["error_type"],
                    "recoverable": info["recoverable"],
                    "exit_code": info["exit_code"],
                    "message": str(exception),
                }

        return {
            "error_type": "unknown",
            "recoverable": True,
            "exit_code": EXIT_FAILURE,
            "message": str(exception),
        }

    @staticmethod
    def to_operation_error(
        exception: Exception,
        suggestion: str | None = None,
        details: dict[str, Any] | None = None,
    ) -> OperationError:
        """Convert an exception to an OperationError response.

        Args:
            exception: The exception to convert.
            suggestion: Optional suggestion for the user.
            details: Optional additional details. Defaults to the
                exception's own details for solver errors.

        Returns:
            OperationError model instance.
        """
        error_info = ExceptionTool.get_error_info(exception)
        if details is None and isinstance(exception, SolverError):
            details = {k: v for k, v in exception.details.items() if v is not None}

        return OperationError(
            status="error",
            error_type=error_info["error_type"],
            message=error_info["message"],
            suggestion=suggestion
            or ExceptionTool._get_suggestion(error_info["error_type"]),
            recoverable=error_info["recoverable"],
            exit_code=error_info["exit_code"],
            details=details,
        )

    @staticmethod
    def handle_error(
        exception: Exception,
        command: str | None = None,
        operation: str | None = None,
    ) -> dict[str, Any]:
        """Handle an exception and return a standardized error response.

        Args:
            exception: The exception that occurred.
            command: Optional name of the CLI command that failed.
            operation: Optional description of the operation.

        Returns:
            Dictionary representation of the error response.
        """
        error_info = ExceptionTool.get_error_info(exception)

        context = []
        if command:
            context.append(f"Command: {command}")
        if operation:
            context.append(f"Operation: {operation}")

        message = error_info["message"]
        if context:
            message = f"{message} ({', '.join(context)})"

        logger.error(message)

        return {
            "status": "error",
            "error_type": error_info["error_type"],
            "message": message,
            "suggestion": ExceptionTool._get_suggestion(error_info["error_type"]),
            "recoverable": error_info["recoverable"],
            "exit_code": error_info["exit_code"],
        }

    @staticmethod
    def _get_suggestion(error_type: str) -> str | None:
        """Get a helpful suggestion based on error type."""
        suggestions = {
            "instability": "Reduce the parabolic mesh ratio or refine the mesh.",
            "singular_line": "Refine the mesh; the cell Reynolds number is too large.",
            "quadrature": "Check the Heston parameters; the integrand decays too slowly.",
            "solver": "Inspect the model parameters and the mesh.",
            "validation": "Review the input parameters and ensure they meet the requirements.",
            "configuration": "Check the config file and the SVADI_* environment variables.",
            "file_operation": "Verify the output directory exists and is writeable.",
            "file_not_found": "Check that the config path is correct and the file exists.",
            "permission_denied": "Ensure you have permission to write the output directory.",
        }
        return suggestions.get(error_type)

    @staticmethod
    def wrap_tool_call(command: str | None = None) -> Callable:
        """Decorator to wrap command functions with consistent error handling.

        Works for plain and ``async`` functions; any exception is turned
        into the dictionary produced by :meth:`handle_error`.

        Args:
            command: Name of the command, reported in error messages.

        Returns:
            Decorated function.
        """

        def decorator(func: Callable) -> Callable:
            name = command or func.__name__

            if inspect.iscoroutinefunction(func):

                @wraps(func)
                async def async_wrapper(*args: Any, **kwargs: Any) -> Any:
                    try:
                        return await func(*args, **kwargs)
                    except Exception as e:
                        return ExceptionTool.handle_error(e, command=name)

                return async_wrapper

            @wraps(func)
            def wrapper(*args: Any, **kwargs: Any) -> Any:
                try:
                    return func(*args, **kwargs)
                except Exception as e:
                    return ExceptionTool.handle_error(e, command=name)

            return wrapper

        return decorator
