"""
Power-law fits in log-log space.
"""
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from app.exceptions import ParameterError


@dataclass(frozen=True)
class PowerLawFit:
    """y ~ prefactor * x^exponent; residual is the RMS of the log residuals."""
    exponent: float
    prefactor: float
    residual: float


def fit_powerlaw(points: Iterable[Tuple[float, float]]) -> PowerLawFit:
    """Unweighted least squares on (ln x, ln y)."""
    data = np.asarray(list(points), dtype=float)
    if data.ndim != 2 or data.shape[0] < 3 or data.shape[1] != 2:
        raise ParameterError("power-law fit needs at least 3 (x, y) pairs")
    x, y = data[:, 0], data[:, 1]
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ParameterError("power-law fit needs positive x and y")
    if np.unique(x).size != x.size:
        raise ParameterError("power-law fit needs distinct x values")

    log_x, log_y = np.log(x), np.log(y)
    design = np.column_stack([log_x, np.ones_like(log_x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, log_y, rcond=None)
    residuals = log_y - (slope * log_x + intercept)
    return PowerLawFit(
        exponent=float(slope),
        prefactor=float(np.exp(intercept)),
        residual=float(np.sqrt(np.mean(residuals ** 2))),
    )
