"""
Tests for the logging utilities.
"""
import logging

from config.settings import get_settings
from utils.logger import (
    DEFAULT_FORMAT,
    PIPELINE_LOGGERS,
    StageLogger,
    default_log_level,
    set_pipeline_level,
    setup_logger,
)


class ListHandler(logging.Handler):
    """Handler collecting records in memory."""

    def __init__(self):
        super().__init__()
        self.records = []

    def emit(self, record):
        self.records.append(record)


class TestLogger:
    """Tests for the logger."""

    def setup_method(self):
        """Set up test."""
        # Reset loggers created by earlier tests
        for name in list(logging.root.manager.loggerDict.keys()):
            if name.startswith("test_"):
                logger = logging.getLogger(name)
                logger.handlers = []
                logger.setLevel(logging.NOTSET)

    def test_setup_logger_default(self):
        """Test setup_logger with default settings."""
        # Create logger
        logger = setup_logger("test_default")

        # Check logger
        assert logger.name == "test_default"
        assert logger.level == default_log_level()
        assert len(logger.handlers) == 2  # Console and file handler
        assert "test_default" in PIPELINE_LOGGERS

        file_handlers = [h for h in logger.handlers if hasattr(h, "baseFilename")]
        assert len(file_handlers) == 1
        assert file_handlers[0].baseFilename.endswith("test_default.log")
        for handler in logger.handlers:
            assert handler.formatter._fmt == DEFAULT_FORMAT

    def test_setup_logger_no_file(self):
        """Test setup_logger with no file logging."""
        logger = setup_logger("test_no_file", log_to_file=False)

        # Only console handler
        assert len(logger.handlers) == 1
        assert not hasattr(logger.handlers[0], "baseFilename")

    def test_setup_logger_existing(self):
        """Test setup_logger does not duplicate handlers."""
        logger1 = setup_logger("test_existing", log_to_file=False)
        logger2 = setup_logger("test_existing", log_to_file=False)

        assert logger1 is logger2
        assert len(logger1.handlers) == 1

    def test_set_pipeline_level(self):
        """Test set_pipeline_level retunes every pipeline logger."""
        logger = setup_logger("test_pipeline_level", log_to_file=False)
        assert logger.level == default_log_level()

        set_pipeline_level(logging.DEBUG)
        try:
            assert logger.level == logging.DEBUG
        finally:
            set_pipeline_level(default_log_level())

    def test_level_and_directory_from_settings(self, monkeypatch, tmp_path):
        """Test LOG_LEVEL and LOG_DIR reach new loggers."""
        monkeypatch.setenv("LOG_LEVEL", "warning")
        monkeypatch.setenv("LOG_DIR", str(tmp_path / "logs"))
        get_settings.cache_clear()
        try:
            logger = setup_logger("test_from_settings")

            assert logger.level == logging.WARNING
            file_handler = [h for h in logger.handlers if hasattr(h, "baseFilename")][0]
            assert file_handler.baseFilename == str(tmp_path / "logs" / "test_from_settings.log")
        finally:
            get_settings.cache_clear()


class TestStageLogger:
    """Tests for the stage logger."""

    def test_stage_events(self):
        """Test stage events carry structured context."""
        stage_logger = StageLogger("ubm", log_level=logging.DEBUG)
        handler = ListHandler()
        stage_logger.logger.addHandler(handler)
        previous = stage_logger.logger.level
        stage_logger.logger.setLevel(logging.DEBUG)
        try:
            stage_logger.iteration(3, -12.5)
            stage_logger.artifact_written("models/ubm.model")
            stage_logger.stage_finished(1.25)
        finally:
            stage_logger.logger.removeHandler(handler)
            stage_logger.logger.setLevel(previous)

        events = [r.event for r in handler.records]
        assert events == ["iteration", "artifact_written", "stage_finished"]

        iteration = handler.records[0]
        assert iteration.levelname == "DEBUG"
        assert iteration.iteration == 3
        assert iteration.objective == -12.5
        assert "[ubm]" in iteration.getMessage()

        assert handler.records[2].seconds == 1.25
