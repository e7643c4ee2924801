from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Batch Configuration
    threads: int = 1  # ANNULUS_NLS_THREADS caps batch parallelism
    output_dir: str = "out"

    # Logging Configuration
    log_level: str = "INFO"
    log_format: str = "text"  # Options: text, json
    log_file: Optional[str] = None

    # Radial IVP Integrator (Dormand-Prince 5(4))
    ivp_tolerance: float = 1e-10
    event_tolerance: float = 1e-12  # zero-crossing location in r
    overflow_limit: float = 1e100
    min_step: float = 1e-14

    # Dirichlet Eigenvalue
    eigen_tolerance: float = 1e-10

    # Ground State Solver
    shooting_lambda_max: float = 1e3  # single shooting is ill-conditioned beyond this
    mesh_min_nodes: int = 400
    mesh_nodes_per_sqrt_lambda: int = 40
    mesh_max_nodes: int = 200_000
    newton_tolerance: float = 1e-10  # target, relative to max(1, u_max^(p-1))
    residual_acceptance: float = 1e-8
    newton_max_iterations: int = 60
    newton_max_halvings: int = 30

    # Continuation in lambda
    continuation_initial_fraction: float = 0.5  # step as a fraction of lambda + lambda_1
    continuation_max_fraction: float = 2.0
    continuation_min_step: float = 1e-10

    # Mass Curve
    bifurcation_offset: float = 1e-3  # closest approach to -lambda_1
    slope_check_rtol: float = 0.01
    marginal_slope: float = 1e-6  # relative to d
    root_merge_distance: float = 1e-6
    mass_tolerance: float = 1e-8
    classify_min_lambda: float = 1e3
    classify_max_lower_offset: float = 1.0  # curve must start within this of -lambda_1

    # Asymptotics
    window_half_width: float = 5.0
    window_samples: int = 2001
    moment_tail_tolerance: float = 1e-12

    # Dynamics (Crank-Nicolson)
    inner_tolerance: float = 1e-12
    inner_max_iterations: int = 60
    stable_factor: float = 10.0
    unstable_fraction: float = 0.1
    default_horizon: float = 50.0
    trace_samples: int = 1000
    blowup_factor: float = 1e6  # |phi| beyond this multiple of max|u| counts as blow-up

    class Config:
        env_file = ".env"
        env_prefix = "ANNULUS_NLS_"
        case_sensitive = False
        extra = "ignore"  # Ignore extra fields in .env that aren't defined in Settings

settings = Settings()
