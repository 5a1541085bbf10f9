"""Custom exceptions for the framework."""

from typing import Any


class GeniferError(Exception):
    """Base exception for all framework errors."""

    code = "GENIFER_ERROR"

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class ConfigurationError(GeniferError):
    """Invalid experiment configuration or incompatible arguments."""

    code = "CONFIGURATION_ERROR"


class ShapeError(GeniferError, ValueError):
    """Tensor shape does not match the contract of an operation."""

    code = "SHAPE_ERROR"


class StateError(GeniferError):
    """Operation called on a model or run in the wrong state."""

    code = "STATE_ERROR"


class RangeError(GeniferError, IndexError):
    """Index, class id or task id outside the valid range."""

    code = "RANGE_ERROR"


class ContractError(GeniferError):
    """Precondition of a pure function violated (e.g. negative weight)."""

    code = "CONTRACT_ERROR"


class NumericError(GeniferError, ArithmeticError):
    """Non-finite values where finite values are required."""

    code = "NUMERIC_ERROR"


class CheckpointError(GeniferError):
    """Checkpoint file is missing, corrupt, or of an unknown format version."""

    code = "CHECKPOINT_ERROR"


class ReportIOError(GeniferError, OSError):
    """Report artifacts could not be written."""

    code = "REPORT_IO_ERROR"


INTERNAL_ERROR = "INTERNAL_ERROR"


def error_payload(error: GeniferError, **extra: Any) -> dict[str, Any]:
    """
    Create the error object printed by the command line.

    Args:
        error: The raised framework error
        **extra: Additional fields to include

    Returns:
        Dict with code, message, details and any extra fields
    """
    return {"code": error.code, "message": error.message, "details": error.details, **extra}
