"""
Bracketed scalar root finding.
"""
import logging
from typing import Callable

from scipy.optimize import brentq

from app.data.models import RootBracket

logger = logging.getLogger(__name__)


def find_root(f: Callable[[float], float], bracket: RootBracket, tol: float) -> float:
    """
    Locate a root of f inside a validated sign-change bracket.

    Brent's method (bisection safeguarding secant/inverse-quadratic steps) is
    deterministic and never leaves [lo, hi]; the returned point lies within tol
    of a sign change.
    """
    root, result = brentq(
        f, bracket.lo, bracket.hi, xtol=tol, maxiter=500, full_output=True
    )
    logger.debug("Root located", extra={
        "root": root, "iterations": result.iterations, "lo": bracket.lo, "hi": bracket.hi
    })
    return min(max(root, bracket.lo), bracket.hi)
