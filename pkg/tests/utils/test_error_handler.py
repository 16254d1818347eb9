"""
Tests for the error handling utilities.
"""
import pytest
from pydantic import BaseModel, ValidationError

from utils.error_handler import (
    AppException,
    ConfigurationException,
    DimensionMismatchException,
    ErrorCode,
    ExitCode,
    LeakageException,
    MissingArtifactException,
    NumericalException,
    ValidationException,
    as_exit_code,
    exit_code_for,
    safe_execute,
)


class TestExceptions:
    """Tests for the exception hierarchy."""

    def test_app_exception(self):
        """Test AppException defaults."""
        # Create an exception
        exc = AppException("Test message")

        # Check properties
        assert exc.message == "Test message"
        assert exc.error_code == ErrorCode.UNKNOWN_ERROR
        assert exc.exit_code == ExitCode.USAGE_ERROR
        assert exc.details == {}
        assert str(exc) == "Test message"

    def test_validation_family_exits_with_usage_code(self):
        """Test that validation errors map to exit code 1."""
        for exc in (ValidationException("bad"), ConfigurationException("bad"),
                    DimensionMismatchException("bad")):
            assert exc.exit_code == ExitCode.USAGE_ERROR
            assert isinstance(exc, ValidationException)

        assert ConfigurationException().error_code == ErrorCode.CONFIGURATION_ERROR
        assert DimensionMismatchException().error_code == ErrorCode.DIMENSION_MISMATCH

    def test_missing_artifact_names_stage(self):
        """Test MissingArtifactException carries the missing stage."""
        exc = MissingArtifactException("tmatrix", details={"path": "models/tmatrix.model"})

        assert exc.stage == "tmatrix"
        assert exc.exit_code == ExitCode.MISSING_ARTIFACT
        assert "tmatrix" in exc.message
        assert exc.details == {"stage": "tmatrix", "path": "models/tmatrix.model"}

    def test_numerical_and_leakage_codes(self):
        """Test the numerical and leakage exit codes."""
        assert NumericalException().exit_code == ExitCode.NUMERICAL_FAILURE
        assert LeakageException().exit_code == ExitCode.LEAKAGE_VIOLATION
        assert int(ExitCode.NUMERICAL_FAILURE) == 3
        assert int(ExitCode.LEAKAGE_VIOLATION) == 4


class TestExitCodeMapping:
    """Tests for exit code mapping."""

    def test_exit_code_for_app_exception(self):
        assert exit_code_for(MissingArtifactException("ubm")) == ExitCode.MISSING_ARTIFACT

    def test_exit_code_for_pydantic_error(self):
        """Test that pydantic validation errors are usage errors."""
        class Model(BaseModel):
            x: int

        with pytest.raises(ValidationError) as info:
            Model(x="not a number")
        assert exit_code_for(info.value) == ExitCode.USAGE_ERROR

    def test_exit_code_for_arithmetic_error(self):
        assert exit_code_for(FloatingPointError("overflow")) == ExitCode.NUMERICAL_FAILURE
        assert exit_code_for(RuntimeError("other")) == ExitCode.USAGE_ERROR


class TestDecorators:
    """Tests for the error handling decorators."""

    def test_as_exit_code_success(self):
        """Test as_exit_code returns 0 when the command succeeds."""
        @as_exit_code
        def command():
            return "ignored"

        assert command() == 0

    def test_as_exit_code_failures(self):
        """Test as_exit_code maps raised exceptions."""
        @as_exit_code
        def missing():
            raise MissingArtifactException("lda")

        @as_exit_code
        def leaking():
            raise LeakageException("test labels reached a fit")

        assert missing() == 2
        assert leaking() == 4

    def test_safe_execute(self):
        """Test safe_execute swallows exceptions."""
        def ok(x):
            return x * 2

        def fail():
            raise ValueError("boom")

        assert safe_execute(ok, 3) == 6
        assert safe_execute(fail) is None
