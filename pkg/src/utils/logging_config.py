"""
Logging configuration
"""
import logging
import sys
from typing import Optional

from src.core.config import settings


def setup_logging(level: Optional[str] = None):
    """Setup application logging.

    Console output goes to stderr; stdout is reserved for JSON documents.
    """

    # Create formatter
    formatter = logging.Formatter(settings.LOG_FORMAT)

    # Setup root logger
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, (level or settings.LOG_LEVEL).upper()))

    # Remove existing handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    # Add console handler
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    # Add file handler
    if settings.LOG_FILE:
        file_handler = logging.FileHandler(settings.LOG_FILE)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)
