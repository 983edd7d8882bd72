"""
Logging configuration for the AMP power-allocation toolkit.
Provides structured logging with rotation, multiple handlers, and formatting.
"""
import json
import logging
import sys
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from typing import Optional

from app.core.config import settings

_STANDARD_RECORD_KEYS = {
    "name", "msg", "args", "created", "filename", "funcName",
    "levelname", "lineno", "module", "msecs", "message", "pathname",
    "process", "processName", "relativeCreated", "thread", "threadName",
    "exc_info", "exc_text", "stack_info", "levelno", "taskName",
}

_LINE_FORMAT = (
    "%(levelname)-8s | "
    "%(asctime)s | "
    "%(name)s:%(funcName)s:%(lineno)d | "
    "%(message)s"
)
_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class JSONFormatter(logging.Formatter):
    """
    JSON formatter for structured logging.
    Outputs one JSON object per record for easy parsing of long sweeps.
    """

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON."""
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        # Fields passed through `extra=`
        for key, value in record.__dict__.items():
            if key not in _STANDARD_RECORD_KEYS:
                log_data[key] = value

        return json.dumps(log_data, default=str)


class ColoredFormatter(logging.Formatter):
    """
    Colored formatter for console output.
    Makes logs easier to read in terminal.
    """

    COLORS = {
        "DEBUG": "\033[36m",  # Cyan
        "INFO": "\033[32m",  # Green
        "WARNING": "\033[33m",  # Yellow
        "ERROR": "\033[31m",  # Red
        "CRITICAL": "\033[35m",  # Magenta
    }
    RESET = "\033[0m"
    BOLD = "\033[1m"

    def format(self, record: logging.LogRecord) -> str:
        """Format log record with colors."""
        levelname = record.levelname
        if levelname in self.COLORS:
            record.levelname = f"{self.COLORS[levelname]}{self.BOLD}{levelname}{self.RESET}"
        try:
            return super().format(record)
        finally:
            record.levelname = levelname


def setup_logging(
        log_level: Optional[str] = None,
        log_file: Optional[bool] = None,
        json_logs: Optional[bool] = None,
        colored_console: Optional[bool] = None
) -> None:
    """
    Configure logging for the command-line tools.

    Console output goes to stderr so that result data written to stdout
    is never interleaved with log lines.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Enable rotating file logs under settings.log_dir
        json_logs: Use JSON format for file logs
        colored_console: Use colored output for console
    """
    level_name = (log_level or settings.log_level).upper()
    level = getattr(logging, level_name)
    log_file = settings.log_file if log_file is None else log_file
    json_logs = settings.json_logs if json_logs is None else json_logs
    colored_console = settings.is_development if colored_console is None else colored_console

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()

    # ========================================================================
    # Console Handler
    # ========================================================================
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    if colored_console and sys.stderr.isatty():
        console_formatter: logging.Formatter = ColoredFormatter(_LINE_FORMAT, datefmt=_DATE_FORMAT)
    else:
        console_formatter = logging.Formatter(_LINE_FORMAT, datefmt=_DATE_FORMAT)
    console_handler.setFormatter(console_formatter)
    root_logger.addHandler(console_handler)

    # ========================================================================
    # File Handlers
    # ========================================================================
    if log_file:
        log_dir = settings.log_path
        if json_logs:
            file_handler = RotatingFileHandler(
                filename=log_dir / "amp.json",
                maxBytes=10 * 1024 * 1024,  # 10MB
                backupCount=10,
                encoding="utf-8",
            )
            file_handler.setFormatter(JSONFormatter())
        else:
            file_handler = RotatingFileHandler(
                filename=log_dir / "amp.log",
                maxBytes=10 * 1024 * 1024,  # 10MB
                backupCount=10,
                encoding="utf-8",
            )
            file_handler.setFormatter(logging.Formatter(_LINE_FORMAT, datefmt=_DATE_FORMAT))
        file_handler.setLevel(logging.DEBUG)
        root_logger.addHandler(file_handler)

        error_handler = RotatingFileHandler(
            filename=log_dir / "error.log",
            maxBytes=10 * 1024 * 1024,  # 10MB
            backupCount=10,
            encoding="utf-8",
        )
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(
            logging.Formatter(_LINE_FORMAT + "\n%(pathname)s", datefmt=_DATE_FORMAT)
        )
        root_logger.addHandler(error_handler)

    # ========================================================================
    # Third-Party Loggers
    # ========================================================================
    logging.getLogger("joblib").setLevel(logging.WARNING)

    if settings.is_development:
        logging.getLogger("app").setLevel(logging.DEBUG)

    root_logger.debug("Logging initialized - Level: %s", level_name)
    root_logger.debug("Environment: %s", settings.environment)


def log_exception(logger: logging.Logger, exc: Exception, context: Optional[dict] = None) -> None:
    """
    Log an exception with context.

    Args:
        logger: Logger instance
        exc: Exception to log
        context: Additional context data
    """
    extra = {"context": context or {}}
    logger.error(
        "Exception occurred: %s: %s",
        type(exc).__name__,
        exc,
        extra=extra,
        exc_info=logger.isEnabledFor(logging.DEBUG),
    )
