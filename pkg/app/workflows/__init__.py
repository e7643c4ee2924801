"""Workflows package."""

from .batch import run_batch
from .run_workflow import RunOutcome, RunWorkflow

__all__ = [
    "RunOutcome",
    "RunWorkflow",
    "run_batch",
]
