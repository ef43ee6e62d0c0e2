"""Core exceptions for the svadi solver.

This module defines all custom exceptions used throughout the package
so that numerical failures, bad inputs and configuration problems can be
told apart by the command layer and mapped to exit codes.
"""

from typing import Any


class ValidationError(ValueError):
    """Raised when input validation fails.

    This exception should be used for model parameters, grid bounds or
    spacing values that do not meet the documented preconditions.
    """

    pass


class ConfigurationError(Exception):
    """Raised when there is a configuration error in the application.

    This includes unreadable or malformed config files and invalid
    environment variables such as ``SVADI_THREADS``.
    """

    pass


class FileOperationError(IOError):
    """Raised when there is an error performing file operations.

    This includes errors related to creating the output directory or
    writing result files.
    """

    pass


class SolverError(Exception):
    """Base class for numerical failures inside the solver."""

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.details: dict[str, Any] = details


class SingularLineError(SolverError):
    """Raised when a tridiagonal line matrix has a pivot below the floor.

    Usually a mesh or parameter pathology, for instance a very large cell
    Reynolds number on a coarse mesh.
    """

    def __init__(
        self,
        message: str,
        line: int,
        pivot: float,
        position: float | None = None,
    ) -> None:
        super().__init__(message, line=line, pivot=pivot, position=position)
        self.line = line
        self.pivot = pivot
        self.position = position


class InstabilityError(SolverError):
    """Raised when a time-stepping stage produces non-finite values."""

    def __init__(
        self,
        message: str,
        stage: str,
        node: tuple[int, int] | None = None,
        time_index: int | None = None,
    ) -> None:
        super().__init__(message, stage=stage, node=node, time_index=time_index)
        self.stage = stage
        self.node = node
        self.time_index = time_index


class QuadratureError(SolverError):
    """Raised when the semi-analytic integrals fail to converge."""

    def __init__(self, message: str, integral: str, estimate: float | None = None):
        super().__init__(message, integral=integral, estimate=estimate)
        self.integral = integral
        self.estimate = estimate
