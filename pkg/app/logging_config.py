"""
Logging configuration for annulus-nls

Every record carries the command and run id of the run that emitted it, so the
interleaved output of a threaded batch can be split per member. The run id is
a digest of the run configuration: rerunning a configuration reuses its id.
"""
import hashlib
import logging
import sys
from contextlib import contextmanager
from contextvars import ContextVar
from logging.handlers import RotatingFileHandler
from typing import Dict, Iterator, Optional

from pythonjsonlogger import jsonlogger

_NO_RUN = {"run_id": "-", "run_command": "-"}
_run_context: ContextVar[Dict[str, str]] = ContextVar("annulus_nls_run", default=_NO_RUN)


class RunContextFilter(logging.Filter):
    """Stamp run_id and run_command of the active run on each record."""

    def filter(self, record: logging.LogRecord) -> bool:
        context = _run_context.get()
        record.run_id = context["run_id"]
        record.run_command = context["run_command"]
        return True


def run_id_for(fingerprint: str) -> str:
    return hashlib.sha256(fingerprint.encode("utf-8")).hexdigest()[:12]


@contextmanager
def run_context(command: str, fingerprint: str) -> Iterator[str]:
    """
    Bind a run to the records logged inside the block.

    Args:
        command: Command name of the run
        fingerprint: Serialized run configuration the id is derived from

    Yields:
        The run id
    """
    run_id = run_id_for(fingerprint)
    token = _run_context.set({"run_id": run_id, "run_command": command})
    try:
        yield run_id
    finally:
        _run_context.reset(token)


def setup_logging(
    level: str = "INFO",
    format_type: str = "text",
    log_file: Optional[str] = None
) -> None:
    """
    Setup structured logging for the toolkit.

    Log records go to stderr so stdout stays reserved for command results.
    Python warnings (numpy overflow, scipy integration warnings) are routed
    into the same handlers.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        format_type: Log format type ('json' or 'text')
        log_file: Optional log file path
    """
    logger = logging.getLogger()
    logger.setLevel(getattr(logging, level.upper()))

    # Remove existing handlers, closing the ones set up here before
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        if any(isinstance(item, RunContextFilter) for item in handler.filters):
            handler.close()

    if format_type == "json":
        formatter = jsonlogger.JsonFormatter(
            "%(asctime)s %(name)s %(levelname)s %(run_command)s %(run_id)s %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        )
    else:
        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - [%(run_command)s %(run_id)s] %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        )
    context_filter = RunContextFilter()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.addFilter(context_filter)
    logger.addHandler(console_handler)

    if log_file:
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=10*1024*1024,  # 10MB per file
            backupCount=5
        )
        file_handler.setFormatter(formatter)
        file_handler.addFilter(context_filter)
        logger.addHandler(file_handler)

    logging.captureWarnings(True)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    logger.debug("Logging configured", extra={
        "level": level,
        "format": format_type,
        "log_file": log_file
    })
