"""
Pydantic schemas for the run report (report.json)
"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class Provenance(BaseModel):
    """Everything needed to reproduce a run; no timestamps or host details."""
    package: str = "annulus-nls"
    version: str
    config: Dict[str, Any] = Field(..., description="RunConfig echo, by alias")
    tolerances: Dict[str, float] = Field(..., description="Effective numerical settings")
    grid: Dict[str, Any] = Field(default_factory=dict, description="Mesh and sample sizes")


class EigenResult(BaseModel):
    dim: int
    lambda_1: float


class ProfileSummary(BaseModel):
    lam: float = Field(..., alias="lambda")
    u_max: float
    r_bar: float
    s_slope: float
    residual_inf: float
    nodes: int
    mass: float
    mass_slope: Optional[float] = None
    energy: Optional[float] = None
    action: Optional[float] = None
    nehari_defect: Optional[float] = None

    class Config:
        populate_by_name = True


class SolutionEntry(BaseModel):
    lam: float = Field(..., alias="lambda")
    mass: float
    mass_slope: float
    stability: str
    expected_orbit: str = Field(..., description="orbitally stable / unstable / undecided")

    class Config:
        populate_by_name = True


class CurveResult(BaseModel):
    regime: Optional[str] = None
    expected_regime: str
    eta: Optional[float] = None
    eta_low: Optional[float] = None
    eta_high: Optional[float] = None
    lambda_hat: Optional[float] = None
    tail_limit: Optional[float] = None
    lambda_window: List[float]
    points: int
    gaps: List[float] = Field(default_factory=list)
    solutions: List[SolutionEntry] = Field(default_factory=list)
    target_mass: Optional[float] = None


class AsymptoticsResult(BaseModel):
    lambdas: List[float]
    sup_errors: List[float]
    amplitude_ratios: List[float]
    r_bars: List[float]
    moment_errors: List[List[float]]
    fitted_mass_exponent: float
    predicted_mass_exponent: float
    masses: List[float]
    predicted_masses: List[float]
    amplitude_bound_holds: bool
    r_bar_decreasing: bool
    sup_error_decreasing: bool
    soliton_moments: List[float]


class EvolveResult(BaseModel):
    verdict: str
    initial_distance: float
    max_distance: float
    reference_norm: float
    dt: float
    samples: int
    completed: bool
    blowup_time: Optional[float] = None
    mass_drift: float
    energy_drift: float
    phase_rate: Optional[float] = None


class ReportDocument(BaseModel):
    """Self-describing result document of one run."""
    command: str
    exit_code: int = 0
    provenance: Provenance
    results: Dict[str, Any] = Field(default_factory=dict, description="Result blocks keyed by name")
    files: List[str] = Field(default_factory=list, description="Files written next to the report")
