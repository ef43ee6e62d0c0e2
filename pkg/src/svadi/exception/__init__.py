"""Exception handling module for svadi.

This module provides centralized exception management for the package,
including custom exceptions and utilities for error handling.
"""

from .exception_core import (
    ConfigurationError,
    FileOperationError,
    InstabilityError,
    QuadratureError,
    SingularLineError,
    SolverError,
    ValidationError,
)
from .exception_tools import (
    EXIT_CONFIG,
    EXIT_FAILURE,
    EXIT_INSTABILITY,
    EXIT_OK,
    ExceptionTool,
)


__all__ = [
    "ConfigurationError",
    "FileOperationError",
    "InstabilityError",
    "QuadratureError",
    "SingularLineError",
    "SolverError",
    "ValidationError",
    "ExceptionTool",
    "EXIT_OK",
    "EXIT_FAILURE",
    "EXIT_CONFIG",
    "EXIT_INSTABILITY",
]
