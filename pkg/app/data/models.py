"""
Domain data types for annulus-nls.

Arrays are numpy float64 (complex128 for fields). Types holding arrays use
eq=False so comparisons are explicit (np.array_equal) rather than elementwise.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np

from app.exceptions import ParameterError

ANNULUS_INNER = 1.0
ANNULUS_OUTER = 2.0
MIN_MESH_NODES = 16


@dataclass(frozen=True, eq=False)
class Mesh:
    """Ordered radii covering [1, 2]."""
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < MIN_MESH_NODES:
            raise ParameterError(f"mesh needs at least {MIN_MESH_NODES} nodes, got {nodes.size}")
        if nodes[0] != ANNULUS_INNER or nodes[-1] != ANNULUS_OUTER:
            raise ParameterError("mesh must start at r = 1 and end at r = 2")
        if np.any(np.diff(nodes) <= 0.0):
            raise ParameterError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, n: int) -> "Mesh":
        nodes = np.linspace(ANNULUS_INNER, ANNULUS_OUTER, int(n))
        return cls(nodes)

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def uniform_step(self) -> Optional[float]:
        steps = np.diff(self.nodes)
        if np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            return (ANNULUS_OUTER - ANNULUS_INNER) / (self.size - 1)
        return None

    def same_as(self, other: "Mesh") -> bool:
        return self is other or np.array_equal(self.nodes, other.nodes)


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ParameterError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")
        if not self.f_lo * self.f_hi < 0.0:
            raise ParameterError(
                f"bracket [{self.lo}, {self.hi}] has no sign change "
                f"(f_lo={self.f_lo}, f_hi={self.f_hi})"
            )

    @classmethod
    def around(cls, f: Callable[[float], float], lo: float, hi: float) -> "RootBracket":
        return cls(lo, hi, f(lo), f(hi))


@dataclass(frozen=True)
class ProblemSpec:
    """(N, p, lambda) for -Delta u + lambda u = u^(p-1) on the annulus 1 < |x| < 2.

    Only N and p are validated here; lambda > -lambda_1(N) needs the eigenvalue
    and is checked by GroundStateService.check_spec.
    """
    dim: int
    p: float
    lam: float

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ParameterError(f"dimension N must be an integer >= 2, got {self.dim}")
        if not self.p > 2.0:
            raise ParameterError(f"exponent p must exceed 2, got {self.p}")
        if self.dim >= 3 and not self.p < self.critical_exponent:
            raise ParameterError(
                f"p = {self.p} is not Sobolev-subcritical for N = {self.dim} "
                f"(needs p < {self.critical_exponent})"
            )
        if not np.isfinite(self.lam):
            raise ParameterError("lambda must be finite")

    @property
    def critical_exponent(self) -> float:
        if self.dim <= 2:
            return float("inf")
        return 2.0 * self.dim / (self.dim - 2)

    def with_lambda(self, lam: float) -> "ProblemSpec":
        return replace(self, lam=float(lam))


@dataclass(eq=False)
class Profile:
    """A converged radial ground state u_lambda sampled on a mesh."""
    spec: ProblemSpec
    mesh: Mesh
    u: np.ndarray
    s_slope: float
    u_max: float
    r_bar: float
    residual_inf: float

    @property
    def lam(self) -> float:
        return self.spec.lam


@dataclass(frozen=True)
class Energetics:
    """Discrete integrals of a profile; all carry the sphere factor C."""
    gradient: float
    mass: float
    potential: float  # integral of u^p
    energy: float
    action: float
    nehari_defect: float


@dataclass(eq=False)
class ShotResult:
    """Outcome of one shot from r = 1 with u(1) = 0, u'(1) = s."""
    slope: float
    first_zero: Optional[float]
    end_value: Optional[float]
    r: np.ndarray
    u: np.ndarray
    overflowed: bool = False

    @property
    def miss(self) -> float:
        """Signed shooting defect: first_zero - 2 when a zero exists, else u(2) >= 0."""
        if self.first_zero is not None:
            return self.first_zero - ANNULUS_OUTER
        if self.overflowed:
            return float("inf")
        return float(self.end_value)


class Regime(str, Enum):
    ALL_MASSES = "AllMasses"
    CRITICAL_BOUNDED = "CriticalBounded"
    SUPERCRITICAL_FOLD = "SupercriticalFold"


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class CurvePoint:
    lam: float
    mass: float
    mass_slope: float
    u_max: float
    r_bar: float
    s_slope: float


@dataclass(eq=False)
class MassCurve:
    dim: int
    p: float
    points: List[CurvePoint]
    lambda_min: float
    lambda_max: float
    gaps: List[float] = field(default_factory=list)
    profiles: List[Profile] = field(default_factory=list, repr=False)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([point.lam for point in self.points])

    @property
    def masses(self) -> np.ndarray:
        return np.array([point.mass for point in self.points])

    @property
    def slopes(self) -> np.ndarray:
        return np.array([point.mass_slope for point in self.points])


@dataclass(frozen=True)
class SlopeCheck:
    linearized: float
    finite_difference: float
    step: float
    relative_gap: float
    consistent: bool


@dataclass(frozen=True)
class ExponentFit:
    """Log-log fit of the mass against lambda (or lambda + lambda_1 near the bifurcation)."""
    exponent: float
    prefactor: float
    residual: float
    expected_exponent: float
    abscissae: Tuple[float, ...]
    masses: Tuple[float, ...]
    monotone: bool


@dataclass(eq=False)
class SolutionRoot:
    """A normalized solution: d(lambda) = c with its stability tag."""
    lam: float
    mass: float
    mass_slope: float
    stability: Stability
    profile: Optional[Profile] = field(default=None, repr=False)


@dataclass(eq=False)
class ExistenceReport:
    regime: Regime
    eta: Optional[float]
    eta_low: Optional[float] = None
    eta_high: Optional[float] = None
    lambda_hat: Optional[float] = None
    tail_limit: Optional[float] = None
    lambda_window: Tuple[float, float] = (float("nan"), float("nan"))
    solutions: List[SolutionRoot] = field(default_factory=list)


@dataclass(frozen=True)
class SolitonRef:
    """Closed-form decaying solution of -W'' + W = W^(p-1) on the line."""
    p: float

    def __post_init__(self):
        if not self.p > 2.0:
            raise ParameterError(f"soliton needs p > 2, got {self.p}")

    @property
    def amplitude(self) -> float:
        return (self.p / 2.0) ** (1.0 / (self.p - 2.0))

    def __call__(self, r):
        # sech(x) = 2 e^{-|x|} / (1 + e^{-2|x|}), overflow-free for large |x|
        x = 0.5 * (self.p - 2.0) * np.abs(np.asarray(r, dtype=float))
        decay = np.exp(-x)
        sech = 2.0 * decay / (1.0 + decay * decay)
        return self.amplitude * sech ** (2.0 / (self.p - 2.0))


@dataclass(eq=False)
class RescaledProfile:
    """omega(rho) = lambda^(1/(2-p)) u(rho / sqrt(lambda) + r_bar)."""
    lam: float
    rho: np.ndarray
    omega: np.ndarray
    peak: float
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, rho):
        return self.evaluate(rho)


@dataclass(eq=False)
class RescaleReport:
    dim: int
    p: float
    lambdas: List[float]
    sup_errors: List[float]
    amplitude_ratios: List[float]
    r_bars: List[float]
    moment_errors: List[List[float]]
    fitted_mass_exponent: float
    predicted_mass_exponent: float
    masses: List[float] = field(default_factory=list)
    predicted_masses: List[float] = field(default_factory=list)
    amplitude_bound_holds: bool = True
    r_bar_decreasing: bool = True
    sup_error_decreasing: bool = True


class PerturbationMode(str, Enum):
    PEAK_BUMP = "peak-bump"
    RANDOM_SMOOTH = "random-smooth"
    MASS_PRESERVING_RESCALE = "mass-preserving-rescale"


class Verdict(str, Enum):
    STABLE_CONSISTENT = "stable-consistent"
    INSTABILITY_DETECTED = "instability-detected"
    INCONCLUSIVE = "inconclusive"


@dataclass(eq=False)
class FieldState:
    t: float
    mesh: Mesh
    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=complex)
        if phi.shape != self.mesh.nodes.shape:
            raise ParameterError("field values must match the mesh")
        if phi[0] != 0 or phi[-1] != 0:
            raise ParameterError("field must vanish at r = 1 and r = 2")
        if not np.all(np.isfinite(phi)):
            raise ParameterError("field values must be finite")
        self.phi = phi


@dataclass(frozen=True)
class ExperimentSpec:
    base: ProblemSpec
    epsilon: float
    mode: PerturbationMode
    t_final: float
    dt: float
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if not self.t_final >= 10.0 * self.dt:
            raise ParameterError("T_final must cover at least 10 time steps")
        if not 0.0 <= self.epsilon <= 0.1:
            raise ParameterError(f"epsilon must lie in [0, 0.1], got {self.epsilon}")
        object.__setattr__(self, "mode", PerturbationMode(self.mode))


@dataclass(eq=False)
class EvolutionTrace:
    times: List[float] = field(default_factory=list)
    mass_series: List[float] = field(default_factory=list)
    energy_series: List[float] = field(default_factory=list)
    orbital_distance_series: List[float] = field(default_factory=list)
    phase_series: List[float] = field(default_factory=list)
    dt: float = float("nan")
    blowup_time: Optional[float] = None
    completed: bool = False

    def append(self, t: float, mass: float, energy: float, distance: float, phase: float):
        self.times.append(t)
        self.mass_series.append(mass)
        self.energy_series.append(energy)
        self.orbital_distance_series.append(distance)
        self.phase_series.append(phase)


@dataclass(eq=False)
class StabilityResult:
    verdict: Verdict
    trace: EvolutionTrace
    initial_distance: float
    max_distance: float
    reference_norm: float
