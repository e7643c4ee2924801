"""
Weighted radial quadrature on the annulus mesh.
"""
import math

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline
from scipy.special import gamma

from app.data.models import Mesh
from app.exceptions import ParameterError


def sphere_area(dim: int) -> float:
    """Surface measure of the unit (N-1)-sphere, 2 pi^(N/2) / Gamma(N/2)."""
    return 2.0 * math.pi ** (dim / 2.0) / float(gamma(dim / 2.0))


def quad_weighted(values, mesh: Mesh, weight_exponent: int = 0) -> float:
    """
    Composite Simpson approximation of the integral of f(r) r^k over [1, 2].

    Simpson needs an even number of intervals; on meshes with an odd count the
    integrand is resampled by a not-a-knot cubic spline onto a uniform mesh with
    one more node, which keeps the rule exact for cubics.
    """
    f = np.asarray(values)
    if f.shape != mesh.nodes.shape:
        raise ParameterError(f"values have shape {f.shape}, mesh has {mesh.nodes.shape}")
    if weight_exponent < 0 or int(weight_exponent) != weight_exponent:
        raise ParameterError(
            f"weight exponent must be a non-negative integer, got {weight_exponent}"
        )

    r = mesh.nodes
    integrand = f * r ** int(weight_exponent)
    if (mesh.size - 1) % 2 == 0:
        return float(simpson(integrand, x=r))

    refined = np.linspace(r[0], r[-1], mesh.size + 1)
    return float(simpson(CubicSpline(r, integrand)(refined), x=refined))
