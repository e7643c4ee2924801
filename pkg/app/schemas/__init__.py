"""
Pydantic schemas for run configuration and report documents
"""
from .report import (
    AsymptoticsResult,
    CurveResult,
    EigenResult,
    EvolveResult,
    ProfileSummary,
    Provenance,
    ReportDocument,
    SolutionEntry,
)
from .run_config import Command, RunConfig

__all__ = [
    "AsymptoticsResult",
    "Command",
    "CurveResult",
    "EigenResult",
    "EvolveResult",
    "ProfileSummary",
    "Provenance",
    "ReportDocument",
    "RunConfig",
    "SolutionEntry",
]
