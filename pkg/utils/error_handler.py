"""
Error handling utilities for the e-vector toolkit.

This module provides the exception hierarchy shared by every pipeline stage
and the decorators that turn those exceptions into process exit codes.
"""
import functools
import traceback
from enum import Enum
from typing import Any, Callable, Dict, Optional, TypeVar, Union

from pydantic import ValidationError

from utils.logger import setup_logger

# Setup logger
logger = setup_logger("error_handler")

# Type definitions
T = TypeVar('T')


class ExitCode(int, Enum):
    """Process exit codes of the command-line interface."""
    SUCCESS = 0
    USAGE_ERROR = 1
    MISSING_ARTIFACT = 2
    NUMERICAL_FAILURE = 3
    LEAKAGE_VIOLATION = 4


class ErrorCode(str, Enum):
    """Error codes for the e-vector toolkit."""
    # General errors
    UNKNOWN_ERROR = "UNKNOWN_ERROR"
    VALIDATION_ERROR = "VALIDATION_ERROR"
    CONFIGURATION_ERROR = "CONFIGURATION_ERROR"

    # Data errors
    AUDIO_FORMAT_ERROR = "AUDIO_FORMAT_ERROR"
    DIMENSION_MISMATCH = "DIMENSION_MISMATCH"
    INSUFFICIENT_DATA = "INSUFFICIENT_DATA"
    SYNTHESIS_ERROR = "SYNTHESIS_ERROR"

    # Pipeline errors
    MISSING_ARTIFACT = "MISSING_ARTIFACT"
    NUMERICAL_ERROR = "NUMERICAL_ERROR"
    LEAKAGE_ERROR = "LEAKAGE_ERROR"


class AppException(Exception):
    """Base exception class for the e-vector toolkit."""

    def __init__(
        self,
        message: str,
        error_code: ErrorCode = ErrorCode.UNKNOWN_ERROR,
        exit_code: ExitCode = ExitCode.USAGE_ERROR,
        details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        self.error_code = error_code
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class ValidationException(AppException):
    """Exception raised when an input violates an operation's precondition."""

    def __init__(
        self,
        message: str = "Validation error",
        error_code: ErrorCode = ErrorCode.VALIDATION_ERROR,
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(
            message=message,
            error_code=error_code,
            exit_code=ExitCode.USAGE_ERROR,
            details=details
        )


class ConfigurationException(ValidationException):
    """Exception raised when the pipeline configuration is invalid."""

    def __init__(self, message: str = "Configuration error", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, error_code=ErrorCode.CONFIGURATION_ERROR, details=details)


class AudioFormatException(ValidationException):
    """Exception raised when audio cannot be read, written or processed."""

    def __init__(self, message: str = "Audio format error", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, error_code=ErrorCode.AUDIO_FORMAT_ERROR, details=details)


class DimensionMismatchException(ValidationException):
    """Exception raised when vector or matrix dimensions disagree with a model."""

    def __init__(self, message: str = "Dimension mismatch", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, error_code=ErrorCode.DIMENSION_MISMATCH, details=details)


class InsufficientDataException(ValidationException):
    """Exception raised when there is not enough data to train or score."""

    def __init__(self, message: str = "Insufficient data", details: Optional[Dict[str, Any]] = None):
        super().__init__(message=message, error_code=ErrorCode.INSUFFICIENT_DATA, details=details)


class SynthesisException(AppException):
    """Exception raised when corpus synthesis cannot meet its contract."""

    def __init__(self, message: str = "Synthesis error", details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code=ErrorCode.SYNTHESIS_ERROR,
            exit_code=ExitCode.USAGE_ERROR,
            details=details
        )


class MissingArtifactException(AppException):
    """Exception raised when an upstream stage artifact is not present."""

    def __init__(
        self,
        stage: str,
        message: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        self.stage = stage
        super().__init__(
            message=message or f"Missing artifact from stage '{stage}'; run 'train {stage}' first",
            error_code=ErrorCode.MISSING_ARTIFACT,
            exit_code=ExitCode.MISSING_ARTIFACT,
            details={"stage": stage, **(details or {})}
        )


class NumericalException(AppException):
    """Exception raised when a numerical routine fails or diverges."""

    def __init__(self, message: str = "Numerical failure", details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code=ErrorCode.NUMERICAL_ERROR,
            exit_code=ExitCode.NUMERICAL_FAILURE,
            details=details
        )


class LeakageException(AppException):
    """Exception raised when held-out ground truth would reach a training step."""

    def __init__(self, message: str = "Leakage guard violation", details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            error_code=ErrorCode.LEAKAGE_ERROR,
            exit_code=ExitCode.LEAKAGE_VIOLATION,
            details=details
        )


def exit_code_for(exc: BaseException) -> ExitCode:
    """
    Map an exception to the command-line exit code.

    Args:
        exc: Exception raised by a command

    Returns:
        Exit code for the process
    """
    if isinstance(exc, AppException):
        return exc.exit_code
    if isinstance(exc, ValidationError):
        return ExitCode.USAGE_ERROR
    if isinstance(exc, (FloatingPointError, ArithmeticError)):
        return ExitCode.NUMERICAL_FAILURE
    return ExitCode.USAGE_ERROR


def handle_app_exception(exc: AppException) -> ExitCode:
    """Log an AppException and return its exit code."""
    logger.error(
        f"{exc.error_code.value}: {exc.message}",
        extra={"details": exc.details}
    )
    return exc.exit_code


def handle_command_exception(exc: Exception) -> ExitCode:
    """Log any exception escaping a command and return the exit code."""
    if isinstance(exc, AppException):
        return handle_app_exception(exc)
    logger.error(
        f"UnhandledException: {type(exc).__name__} - {str(exc)}",
        extra={"traceback": traceback.format_exc()}
    )
    return exit_code_for(exc)


def safe_execute(func: Callable[..., T], *args, **kwargs) -> Union[T, None]:
    """
    Execute a function safely and return None if an exception occurs.

    Args:
        func: Function to execute
        *args: Positional arguments to pass to the function
        **kwargs: Keyword arguments to pass to the function

    Returns:
        Function result or None if an exception occurs
    """
    try:
        return func(*args, **kwargs)
    except Exception as e:
        logger.error(
            f"Error executing {func.__name__}: {str(e)}",
            extra={"traceback": traceback.format_exc()}
        )
        return None


def as_exit_code(func: Callable[..., Any]) -> Callable[..., int]:
    """
    Decorator for CLI commands: returns 0 on success, the mapped exit code otherwise.

    Args:
        func: Command function

    Returns:
        Decorated function returning an integer exit code
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            func(*args, **kwargs)
        except Exception as e:
            return int(handle_command_exception(e))
        return int(ExitCode.SUCCESS)
    return wrapper
