"""
Project logger with coloured console output and rotating file handlers.

Features:
    - Color-coded console output (DEBUG, INFO, WARNING, ERROR, CRITICAL)
    - Rotating file handler (default: 10 MB per file, 10 backup files)
    - Plain text output to log files (no ANSI color codes)
    - Keyword context rendered as ``key=value`` pairs after the message
    - Logger caching per name

Usage:
    from backend.src.utils.logger import Logger
    logger = Logger(__name__)
    logger.info("solve finished", hours=48, objective=23.0)
"""

from __future__ import annotations

import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Any, ClassVar


class ColoredFormatter(logging.Formatter):
    """Formatter with ANSI colors for console output."""

    COLORS: ClassVar[dict[str, str]] = {
        "DEBUG": "\033[36m",  # Cyan
        "INFO": "\033[32m",  # Green
        "WARNING": "\033[33m",  # Yellow
        "ERROR": "\033[31m",  # Red
        "CRITICAL": "\033[35m",  # Magenta
    }
    RESET: str = "\033[0m"

    def format(self, record: logging.LogRecord) -> str:
        # Work on a copy so the file handler never sees colour codes.
        record = logging.makeLogRecord(record.__dict__)
        levelname: str = record.levelname
        if levelname in self.COLORS:
            record.levelname = f"{self.COLORS[levelname]}{levelname}{self.RESET}"
        return super().format(record)


def _render_context(context: dict[str, Any]) -> str:
    parts: list[str] = []
    for key, value in context.items():
        if isinstance(value, float):
            parts.append(f"{key}={value:.6g}")
        else:
            parts.append(f"{key}={value}")
    return " ".join(parts)


class Logger:
    """Wrapper around logging.Logger with rotating file + coloured console."""

    _loggers: ClassVar[dict[str, logging.Logger]] = {}

    def __init__(
        self,
        name: str | None = None,
        log_dir: str | None = None,
        level: str | None = None,
        max_bytes: int = 10 * 1024 * 1024,
        backup_count: int = 10,
    ) -> None:
        self.name: str = name or "storage_plan"
        self.log_dir: str | None = log_dir
        self.level: str | None = level
        self.max_bytes: int = max_bytes
        self.backup_count: int = backup_count

        cached: logging.Logger | None = Logger._loggers.get(self.name)
        if cached is not None and cached.handlers:
            self.logger: logging.Logger = cached
        else:
            self.logger = self._setup_logger()
            Logger._loggers[self.name] = self.logger

    def _setup_logger(self) -> logging.Logger:
        """Create and configure a new :class:`logging.Logger`."""
        # Imported lazily: config imports nothing from here, but tests patch it.
        from backend.src.config import get_app_config

        cfg = get_app_config()
        log_dir: str = self.log_dir or cfg.log_dir
        level_name: str = (self.level or cfg.log_level).upper()

        logger: logging.Logger = logging.getLogger(self.name)
        logger.setLevel(getattr(logging, level_name, logging.INFO))
        logger.propagate = False

        if logger.handlers:
            logger.handlers.clear()

        fmt: str = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
        datefmt: str = "%Y-%m-%d %H:%M:%S"

        if cfg.log_to_file:
            os.makedirs(log_dir, exist_ok=True)
            file_handler: RotatingFileHandler = RotatingFileHandler(
                os.path.join(log_dir, "storage_plan.log"),
                maxBytes=self.max_bytes,
                backupCount=self.backup_count,
                encoding="utf-8",
            )
            file_handler.setFormatter(logging.Formatter(fmt, datefmt=datefmt))
            logger.addHandler(file_handler)

        console_handler: logging.StreamHandler = logging.StreamHandler()  # type: ignore[type-arg]
        console_handler.setFormatter(ColoredFormatter(fmt, datefmt=datefmt))
        logger.addHandler(console_handler)

        return logger

    def _emit(self, level: int, message: str, context: dict[str, Any], **kwargs: Any) -> None:
        if not self.logger.isEnabledFor(level):
            return
        if context:
            message = f"{message} | {_render_context(context)}"
        self.logger.log(level, message, **kwargs)

    # Convenience methods ---------------------------------------------------

    def info(self, message: str, **context: Any) -> None:
        self._emit(logging.INFO, message, context)

    def error(self, message: str, exc_info: bool = False, **context: Any) -> None:
        self._emit(logging.ERROR, message, context, exc_info=exc_info)

    def warning(self, message: str, **context: Any) -> None:
        self._emit(logging.WARNING, message, context)

    def debug(self, message: str, **context: Any) -> None:
        self._emit(logging.DEBUG, message, context)

    def critical(self, message: str, **context: Any) -> None:
        self._emit(logging.CRITICAL, message, context)
