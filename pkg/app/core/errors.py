"""
Error handling configuration

Custom exception classes and the handler that turns them into machine-readable
error records and process exit codes.
"""

import json
import sys
from typing import Any, Dict, List, Optional, TextIO

from app.core.logging import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class AppError(Exception):
    """Base exception class for application errors"""

    def __init__(
        self,
        message: str,
        exit_code: int = EXIT_NUMERICAL,
        code: str = "INTERNAL_ERROR",
        details: Optional[Dict[str, Any]] = None,
    ):
        self.message = message
        self.exit_code = exit_code
        self.code = code
        self.details = details or {}
        super().__init__(self.message)


class ConfigError(AppError):
    """Run document or override failed validation"""

    def __init__(self, message: str = "Invalid configuration", details: Optional[Dict] = None):
        super().__init__(
            message=message,
            exit_code=EXIT_CONFIG,
            code="CONFIG_ERROR",
            details=details,
        )

    @property
    def violations(self) -> List[Dict[str, Any]]:
        return list(self.details.get("violations", []))


class CapacityError(AppError):
    """Requested size exceeds a configured cap"""

    def __init__(self, message: str = "Capacity exceeded", details: Optional[Dict] = None):
        super().__init__(
            message=message,
            exit_code=EXIT_CONFIG,
            code="CAPACITY_EXCEEDED",
            details=details,
        )


class BasisIndexError(AppError, IndexError):
    """Mode or fragmentation index outside the basis"""

    def __init__(self, message: str = "Index out of range", details: Optional[Dict] = None):
        super().__init__(
            message=message,
            exit_code=EXIT_CONFIG,
            code="BASIS_INDEX",
            details=details,
        )


class NumericalError(AppError):
    """Non-finite values, norm underflow, failed eigensolves"""

    def __init__(
        self,
        message: str = "Numerical failure",
        details: Optional[Dict] = None,
        code: str = "NUMERICAL_ERROR",
    ):
        super().__init__(
            message=message,
            exit_code=EXIT_NUMERICAL,
            code=code,
            details=details,
        )


class ShapeError(NumericalError, ValueError):
    """Fields sampled on mismatched grids"""

    def __init__(self, message: str = "Shape mismatch", details: Optional[Dict] = None):
        super().__init__(message=message, details=details, code="SHAPE_MISMATCH")


class ResolutionError(NumericalError):
    """Grid too coarse or too narrow for the requested fields"""

    def __init__(self, message: str = "Insufficient grid resolution", details: Optional[Dict] = None):
        super().__init__(message=message, details=details, code="RESOLUTION_ERROR")


class ConvergenceError(NumericalError):
    """Iterative solver stopped before reaching its tolerance"""

    def __init__(
        self,
        message: str = "Solver did not converge",
        residual_history: Optional[List[float]] = None,
        details: Optional[Dict] = None,
    ):
        self.residual_history = list(residual_history or [])
        merged = dict(details or {})
        merged.setdefault("iterations", len(self.residual_history))
        if self.residual_history:
            merged.setdefault("last_residual", self.residual_history[-1])
        super().__init__(message=message, details=merged, code="CONVERGENCE_FAILED")


class DivergedStepError(NumericalError):
    """Time-derivative fixed point did not settle within the inner-iteration cap"""

    def __init__(self, message: str = "Time step diverged", details: Optional[Dict] = None):
        super().__init__(message=message, details=details, code="DIVERGED_STEP")


class OutputError(AppError):
    """Reading or writing run artifacts failed"""

    def __init__(self, message: str = "I/O failure", details: Optional[Dict] = None):
        super().__init__(
            message=message,
            exit_code=EXIT_IO,
            code="IO_ERROR",
            details=details,
        )


def error_record(exc: AppError) -> Dict[str, Any]:
    """Machine-readable error body"""
    return {
        "error": {
            "code": exc.code,
            "message": exc.message,
            "details": exc.details,
        }
    }


def handle_app_error(exc: AppError, stream: Optional[TextIO] = None) -> int:
    """Log an application error, emit its record and return the exit code"""
    logger.error(
        f"App error: {exc.message}",
        error_code=exc.code,
        exit_code=exc.exit_code,
        details=exc.details,
    )
    out = stream if stream is not None else sys.stderr
    out.write(json.dumps(error_record(exc), default=str) + "\n")
    return exc.exit_code


def handle_unexpected_error(exc: Exception, stream: Optional[TextIO] = None) -> int:
    """Handle unhandled exceptions"""
    logger.exception("Unhandled exception", error=str(exc))
    out = stream if stream is not None else sys.stderr
    record = {
        "error": {
            "code": "INTERNAL_ERROR",
            "message": "An unexpected error occurred",
            "details": {"error": str(exc)},
        }
    }
    out.write(json.dumps(record) + "\n")
    return EXIT_NUMERICAL
