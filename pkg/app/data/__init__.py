"""
Data layer package for annulus-nls
"""
from .models import (
    ANNULUS_INNER,
    ANNULUS_OUTER,
    CurvePoint,
    Energetics,
    EvolutionTrace,
    ExistenceReport,
    ExponentFit,
    ExperimentSpec,
    FieldState,
    MassCurve,
    Mesh,
    PerturbationMode,
    ProblemSpec,
    Profile,
    Regime,
    RescaledProfile,
    RescaleReport,
    RootBracket,
    ShotResult,
    SlopeCheck,
    SolitonRef,
    SolutionRoot,
    Stability,
    StabilityResult,
    Verdict,
)

__all__ = [
    "ANNULUS_INNER",
    "ANNULUS_OUTER",
    "CurvePoint",
    "Energetics",
    "EvolutionTrace",
    "ExistenceReport",
    "ExponentFit",
    "ExperimentSpec",
    "FieldState",
    "MassCurve",
    "Mesh",
    "PerturbationMode",
    "ProblemSpec",
    "Profile",
    "Regime",
    "RescaledProfile",
    "RescaleReport",
    "RootBracket",
    "ShotResult",
    "SlopeCheck",
    "SolitonRef",
    "SolutionRoot",
    "Stability",
    "StabilityResult",
    "Verdict",
]
