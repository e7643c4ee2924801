"""
Services package for annulus-nls
"""
from .asymptotics_service import AsymptoticsService
from .dynamics_service import DynamicsService
from .ground_state_service import GroundStateService
from .mass_curve_service import MassCurveService

__all__ = [
    "AsymptoticsService",
    "DynamicsService",
    "GroundStateService",
    "MassCurveService",
]
