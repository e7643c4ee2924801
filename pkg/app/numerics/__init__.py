"""
Deterministic numerical kernels shared by the solver services
"""
from .fitting import PowerLawFit, fit_powerlaw
from .integrator import RadialTrajectory, integrate_radial_ivp
from .linalg import solve_tridiagonal
from .operators import RadialOperator, radial_operator
from .quadrature import quad_weighted, sphere_area
from .roots import find_root

__all__ = [
    "PowerLawFit",
    "RadialOperator",
    "RadialTrajectory",
    "find_root",
    "fit_powerlaw",
    "integrate_radial_ivp",
    "quad_weighted",
    "radial_operator",
    "solve_tridiagonal",
    "sphere_area",
]
