"""
Logging utility for the e-vector toolkit.

This module provides standardized logging configuration across the pipeline.
"""
import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

from config.settings import get_settings

# Configure default logging format
DEFAULT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Loggers created through setup_logger, so the CLI can retune them together
PIPELINE_LOGGERS = set()


def default_log_level() -> int:
    """Level named by the LOG_LEVEL setting."""
    return logging.getLevelName(get_settings().log_level)


def setup_logger(name: str,
                 log_level: Optional[int] = None,
                 log_format: Optional[str] = None,
                 log_to_file: bool = True,
                 log_to_console: bool = True) -> logging.Logger:
    """
    Set up a logger with standardized configuration.

    Args:
        name: Logger name
        log_level: Logging level (default: LOG_LEVEL setting)
        log_format: Log message format
        log_to_file: Whether to log to file
        log_to_console: Whether to log to console

    Returns:
        Configured logger
    """
    # Get or create logger
    logger = logging.getLogger(name)
    PIPELINE_LOGGERS.add(name)

    # Only configure if it hasn't been configured yet
    if not logger.handlers:
        level = log_level or default_log_level()
        logger.setLevel(level)

        formatter = logging.Formatter(log_format or DEFAULT_FORMAT)

        if log_to_console:
            console_handler = logging.StreamHandler()
            console_handler.setFormatter(formatter)
            logger.addHandler(console_handler)

        if log_to_file:
            log_dir = get_settings().log_dir
            os.makedirs(log_dir, exist_ok=True)

            log_file = os.path.join(log_dir, f"{name}.log")
            file_handler = RotatingFileHandler(
                log_file,
                maxBytes=10 * 1024 * 1024,  # 10 MB
                backupCount=5
            )
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

    return logger


def set_pipeline_level(level: int) -> None:
    """Set the level of every logger created through setup_logger."""
    for name in PIPELINE_LOGGERS:
        logging.getLogger(name).setLevel(level)


class StageLogger:
    """
    Logger for training stages.
    Provides convenient methods for logging stage events with structured context.
    """

    def __init__(self, stage: str, log_level=None):
        """Initialize the stage logger"""
        self.stage = stage
        self.logger = setup_logger('stages', log_level=log_level)

    def info(self, message, **kwargs):
        """Log an info message with optional extra context"""
        self.logger.info(message, extra=kwargs if kwargs else None)

    def warning(self, message, **kwargs):
        """Log a warning message with optional extra context"""
        self.logger.warning(message, extra=kwargs if kwargs else None)

    def debug(self, message, **kwargs):
        """Log a debug message with optional extra context"""
        self.logger.debug(message, extra=kwargs if kwargs else None)

    def iteration(self, index: int, objective: float):
        """Log one training iteration"""
        self.debug(
            f"[{self.stage}] iteration={index} objective={objective:.6f}",
            stage=self.stage,
            iteration=index,
            objective=objective,
            event="iteration"
        )

    def artifact_written(self, path: str):
        """Log a persisted artifact"""
        self.info(
            f"[{self.stage}] wrote {path}",
            stage=self.stage,
            path=path,
            event="artifact_written"
        )

    def stage_finished(self, seconds: float):
        """Log stage completion"""
        self.info(
            f"[{self.stage}] finished in {seconds:.2f}s",
            stage=self.stage,
            seconds=seconds,
            event="stage_finished"
        )
