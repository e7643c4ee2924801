"""
Batch runs: a JSON array of run configurations executed on a thread pool.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Union

from pydantic import ValidationError

from app.config import settings
from app.exceptions import ParameterError
from app.schemas import RunConfig

from .run_workflow import EXIT_OK, EXIT_PARAMETER_ERROR, RunOutcome, RunWorkflow

logger = logging.getLogger(__name__)


def load_batch(path: Union[str, Path]) -> List[dict]:
    try:
        with open(path, encoding="utf-8") as stream:
            members = json.load(stream)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read batch file {path}: {exc}") from exc
    if not isinstance(members, list) or not all(isinstance(item, dict) for item in members):
        raise ParameterError(f"{path}: a batch file holds a JSON array of objects")
    return members


def _run_member(index: int, member: dict) -> int:
    try:
        config = RunConfig.model_validate(member)
    except (ValidationError, ParameterError) as exc:
        logger.error("Invalid batch member", extra={"index": index, "error": str(exc)})
        return EXIT_PARAMETER_ERROR
    outcome: RunOutcome = RunWorkflow(config).run()
    return outcome.exit_code


def run_batch(path: Union[str, Path], threads: Optional[int] = None) -> int:
    """
    Run every member of a batch file; the result is the largest member exit code.

    Members are independent, so each gets its own workflow and output files.
    The pool size is capped by ANNULUS_NLS_THREADS.
    """
    members = load_batch(path)
    if not members:
        logger.warning("Empty batch", extra={"path": str(path)})
        return EXIT_OK
    workers = max(1, min(threads or settings.threads, len(members)))
    logger.info("Starting batch", extra={
        "path": str(path), "members": len(members), "threads": workers
    })
    with ThreadPoolExecutor(max_workers=workers) as pool:
        codes = list(pool.map(_run_member, range(len(members)), members))
    logger.info("Batch finished", extra={"path": str(path), "exit_codes": codes})
    return max(codes)
