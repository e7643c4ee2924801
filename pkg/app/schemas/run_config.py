"""
Pydantic schema for one toolkit run
"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field, model_validator

from app.config import settings
from app.data import PerturbationMode, ProblemSpec
from app.services.ground_state_service import GroundStateService


class Command(str, Enum):
    EIGEN = "eigen"
    GROUND = "ground"
    CURVE = "curve"
    SOLVE = "solve"
    ASYMPTOTICS = "asymptotics"
    EVOLVE = "evolve"


class RunConfig(BaseModel):
    """Parameters of a single command; echoed verbatim into the report provenance."""
    command: Command
    dim: int = Field(2, alias="N", ge=2, description="Space dimension N")
    p: Optional[float] = Field(None, description="Nonlinearity exponent, 2 < p < 2N/(N-2)")
    lam: Optional[float] = Field(None, alias="lambda", description="Frequency lambda")
    lambda_min: Optional[float] = Field(None, description="Lower end of a lambda range")
    lambda_max: Optional[float] = Field(None, description="Upper end of a lambda range")
    points: Optional[int] = Field(None, ge=3, description="Number of lambda samples")
    mass: Optional[float] = Field(None, gt=0.0, description="Target mass c for solve")
    eps: float = Field(1e-3, ge=0.0, le=0.1, description="Perturbation size for evolve")
    t_final: float = Field(settings.default_horizon, alias="T", gt=0.0, description="Time horizon")
    dt: Optional[float] = Field(None, gt=0.0, description="Time step; derived if absent")
    seed: int = Field(0, ge=0, description="Seed of the random-smooth perturbation")
    mode: PerturbationMode = Field(PerturbationMode.PEAK_BUMP, description="Perturbation mode")
    out: str = Field(settings.output_dir, description="Output directory")
    tol: Optional[float] = Field(None, gt=0.0, description="Relative mass tolerance for solve")
    nodes: Optional[int] = Field(None, ge=16, description="Uniform mesh override (node count)")
    svg: bool = Field(False, description="Also write SVG plots")

    class Config:
        populate_by_name = True
        extra = "forbid"
        use_enum_values = False

    @model_validator(mode="after")
    def check_command_parameters(self) -> "RunConfig":
        command = self.command
        if command is Command.EIGEN:
            return self
        if self.p is None:
            raise ValueError(f"{command.value} needs --p")

        if command in (Command.GROUND, Command.EVOLVE):
            if self.lam is None:
                raise ValueError(f"{command.value} needs --lambda")
            GroundStateService.check_spec(ProblemSpec(self.dim, self.p, self.lam))
        elif command is Command.CURVE:
            if self.lambda_min is None or self.lambda_max is None:
                raise ValueError("curve needs --lambda-min and --lambda-max")
        elif command is Command.SOLVE:
            if self.mass is None:
                raise ValueError("solve needs --mass")
        elif command is Command.ASYMPTOTICS:
            lo = 100.0 if self.lambda_min is None else self.lambda_min
            if lo <= 0.0:
                raise ValueError("asymptotics needs a positive --lambda-min")

        ProblemSpec(self.dim, self.p, 1.0 if self.lam is None else self.lam)
        if self.lambda_min is not None:
            GroundStateService.check_spec(ProblemSpec(self.dim, self.p, self.lambda_min))
        if (
            self.lambda_min is not None
            and self.lambda_max is not None
            and not self.lambda_min < self.lambda_max
        ):
            raise ValueError("--lambda-min must be below --lambda-max")
        curve_command = command in (Command.CURVE, Command.SOLVE)
        if self.points is not None and curve_command and self.points < 8:
            raise ValueError("a mass curve needs --points >= 8")
        return self
