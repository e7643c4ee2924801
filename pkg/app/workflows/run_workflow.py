"""
RunWorkflow: execute one RunConfig, write its files and report, map the outcome to an exit code.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from app import __version__
from app.config import settings
from app.data import ExperimentSpec, Mesh, ProblemSpec, Profile, SolutionRoot, Stability
from app.exceptions import InsufficientRangeError, ParameterError, SolverError
from app.logging_config import run_context
from app.schemas import (
    AsymptoticsResult,
    Command,
    CurveResult,
    EigenResult,
    EvolveResult,
    ProfileSummary,
    Provenance,
    ReportDocument,
    RunConfig,
    SolutionEntry,
)
from app.services import AsymptoticsService, DynamicsService, GroundStateService, MassCurveService
from app.utils import csv_io, plots

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NO_SOLUTION = 2
EXIT_SOLVER_ERROR = 3
EXIT_PARAMETER_ERROR = 4

DEFAULT_CURVE_POINTS = 32
DEFAULT_SOLVE_LAMBDA_MAX = 2000.0
DEFAULT_ASYMPTOTICS_LADDER = (100.0, 1600.0, 3)

_TOLERANCE_FIELDS = (
    "ivp_tolerance", "event_tolerance", "eigen_tolerance", "newton_tolerance",
    "residual_acceptance", "newton_max_iterations", "shooting_lambda_max",
    "mesh_min_nodes", "mesh_nodes_per_sqrt_lambda", "mesh_max_nodes",
    "continuation_initial_fraction", "bifurcation_offset", "slope_check_rtol",
    "marginal_slope", "root_merge_distance", "mass_tolerance", "window_half_width",
    "window_samples", "moment_tail_tolerance", "inner_tolerance", "stable_factor",
    "unstable_fraction", "trace_samples", "blowup_factor",
)

_EXPECTED_ORBIT = {
    Stability.STABLE: "orbitally stable",
    Stability.UNSTABLE: "orbitally unstable",
    Stability.MARGINAL: "undecided",
}


@dataclass
class RunOutcome:
    exit_code: int
    document: ReportDocument
    files: List[Path] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)


def _solution_entries(roots: List[SolutionRoot]) -> List[SolutionEntry]:
    return [
        SolutionEntry(
            lam=root.lam,
            mass=root.mass,
            mass_slope=root.mass_slope,
            stability=root.stability.value,
            expected_orbit=_EXPECTED_ORBIT[root.stability],
        )
        for root in roots
    ]


class RunWorkflow:
    """
    One command from configuration to files.

    Steps:
    1. Solve (eigen / ground / curve / solve / asymptotics / evolve)
    2. Write CSV data and optional SVG plots into config.out
    3. Write report.json with the provenance echo and the exit code
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.out_dir = Path(config.out)
        self.files: List[Path] = []
        self.grid: Dict[str, Any] = {}

    def _mesh(self) -> Optional[Mesh]:
        return Mesh.uniform(self.config.nodes) if self.config.nodes else None

    def _spec(self, lam: float) -> ProblemSpec:
        return ProblemSpec(self.config.dim, self.config.p, lam)

    def _write(self, name: str, text: str) -> None:
        self.files.append(csv_io.atomic_write_text(self.out_dir / name, text))

    def _plot(self, plotter, name: str, *args, **kwargs) -> None:
        if self.config.svg:
            self.files.append(plotter(*args, path=self.out_dir / name, **kwargs))

    def run(self) -> RunOutcome:
        fingerprint = self.config.model_dump_json(by_alias=True)
        with run_context(self.config.command.value, fingerprint):
            return self._execute()

    def _execute(self) -> RunOutcome:
        config = self.config
        logger.info("Starting run", extra={
            "command": config.command.value, "dim": config.dim, "p": config.p, "out": config.out
        })
        handlers = {
            Command.EIGEN: self._eigen,
            Command.GROUND: self._ground,
            Command.CURVE: self._curve,
            Command.SOLVE: self._solve,
            Command.ASYMPTOTICS: self._asymptotics,
            Command.EVOLVE: self._evolve,
        }
        try:
            exit_code, results, summary = handlers[config.command]()
        except ParameterError as exc:
            logger.error("Invalid parameters", extra={"error": str(exc)})
            exit_code, summary = EXIT_PARAMETER_ERROR, {"error": str(exc)}
            results = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        except SolverError as exc:
            logger.error("Solver failure", extra={"error": str(exc)}, exc_info=True)
            exit_code, summary = EXIT_SOLVER_ERROR, {"error": str(exc)}
            results = {"error": {"type": type(exc).__name__, "message": str(exc)}}

        document = ReportDocument(
            command=config.command.value,
            exit_code=exit_code,
            provenance=Provenance(
                version=__version__,
                config=config.model_dump(by_alias=True, mode="json"),
                tolerances={name: float(getattr(settings, name)) for name in _TOLERANCE_FIELDS},
                grid=self.grid,
            ),
            results=results,
            files=sorted(path.name for path in self.files),
        )
        report_path = self.out_dir / "report.json"
        csv_io.atomic_write_text(report_path, csv_io.generate_report_json(document.model_dump()))
        logger.info("Run finished", extra={
            "command": config.command.value, "exit_code": exit_code, "report": str(report_path)
        })
        return RunOutcome(
            exit_code=exit_code, document=document, files=self.files + [report_path],
            summary=summary,
        )

    def _eigen(self):
        lam1 = GroundStateService.first_dirichlet_eigenvalue(self.config.dim)
        result = EigenResult(dim=self.config.dim, lambda_1=lam1)
        return EXIT_OK, {"eigen": result.model_dump()}, {"lambda_1": lam1}

    def _profile_summary(self, profile: Profile) -> ProfileSummary:
        energetics = GroundStateService.profile_energetics(profile)
        return ProfileSummary(
            lam=profile.lam,
            u_max=profile.u_max,
            r_bar=profile.r_bar,
            s_slope=profile.s_slope,
            residual_inf=profile.residual_inf,
            nodes=profile.mesh.size,
            mass=MassCurveService.mass(profile),
            mass_slope=MassCurveService.mass_slope(profile),
            energy=energetics.energy,
            action=energetics.action,
            nehari_defect=energetics.nehari_defect,
        )

    def _ground(self):
        profile = GroundStateService.ground_state(self._spec(self.config.lam), mesh=self._mesh())
        self.grid["nodes"] = profile.mesh.size
        summary = self._profile_summary(profile)
        self._write("profile.csv", csv_io.generate_profile_csv(profile))
        if profile.lam > 0.0:
            self._plot(plots.plot_rescaled_profile, "profile.svg", profile,
                       AsymptoticsService.rescale(profile))
        return EXIT_OK, {"ground": summary.model_dump(by_alias=True)}, summary.model_dump()

    def _trace(self, lambda_lo: float, lambda_hi: float):
        points = self.config.points or DEFAULT_CURVE_POINTS
        curve = MassCurveService.trace_curve(
            self.config.dim, self.config.p, lambda_lo, lambda_hi, points, mesh=self._mesh()
        )
        self.grid.update({
            "points": points,
            "nodes": sorted({profile.mesh.size for profile in curve.profiles}),
        })
        try:
            report = MassCurveService.classify(curve)
        except InsufficientRangeError as exc:
            logger.info("Curve not classified", extra={"reason": str(exc)})
            report = None
        self._write("curve.csv", csv_io.generate_curve_csv(curve))
        return curve, report

    def _curve_result(self, curve, report, roots=None, target=None) -> CurveResult:
        return CurveResult(
            regime=None if report is None else report.regime.value,
            expected_regime=MassCurveService.expected_regime(curve.dim, curve.p).value,
            eta=None if report is None else report.eta,
            eta_low=None if report is None else report.eta_low,
            eta_high=None if report is None else report.eta_high,
            lambda_hat=None if report is None else report.lambda_hat,
            tail_limit=None if report is None else report.tail_limit,
            lambda_window=[curve.lambda_min, curve.lambda_max],
            points=len(curve.points),
            gaps=curve.gaps,
            solutions=_solution_entries(roots or []),
            target_mass=target,
        )

    def _curve(self):
        curve, report = self._trace(self.config.lambda_min, self.config.lambda_max)
        self._plot(plots.plot_mass_curve, "curve.svg", curve,
                   eta=None if report is None else report.eta)
        result = self._curve_result(curve, report)
        return EXIT_OK, {"curve": result.model_dump(by_alias=True)}, {
            "regime": result.regime, "eta": result.eta, "points": result.points
        }

    def _solve(self):
        config = self.config
        lam1 = GroundStateService.first_dirichlet_eigenvalue(config.dim)
        lambda_lo = config.lambda_min
        if lambda_lo is None:
            lambda_lo = -lam1 + settings.bifurcation_offset
        lambda_hi = config.lambda_max if config.lambda_max is not None else DEFAULT_SOLVE_LAMBDA_MAX
        curve, report = self._trace(lambda_lo, lambda_hi)
        roots = MassCurveService.solve_mass(curve, config.mass, report, tol=config.tol)
        self._plot(plots.plot_mass_curve, "curve.svg", curve, solutions=roots,
                   eta=None if report is None else report.eta)
        result = self._curve_result(curve, report, roots, config.mass)
        exit_code = EXIT_OK if roots else EXIT_NO_SOLUTION
        return exit_code, {"curve": result.model_dump(by_alias=True)}, {
            "solutions": [(root.lam, root.stability.value) for root in roots]
        }

    def _asymptotics(self):
        config = self.config
        lo_default, hi_default, n_default = DEFAULT_ASYMPTOTICS_LADDER
        lambdas = np.geomspace(
            config.lambda_min if config.lambda_min is not None else lo_default,
            config.lambda_max if config.lambda_max is not None else hi_default,
            config.points or n_default,
        )
        mesh = self._mesh()
        profile = GroundStateService.ground_state(self._spec(float(lambdas[0])), mesh=mesh)
        profiles = [profile]
        for lam in lambdas[1:]:
            profile = GroundStateService.continue_in_lambda(profile, float(lam), mesh=mesh)
            profiles.append(profile)
        self.grid["nodes"] = [item.mesh.size for item in profiles]

        report = AsymptoticsService.limit_diagnostics(profiles)
        result = AsymptoticsResult(
            lambdas=report.lambdas,
            sup_errors=report.sup_errors,
            amplitude_ratios=report.amplitude_ratios,
            r_bars=report.r_bars,
            moment_errors=report.moment_errors,
            fitted_mass_exponent=report.fitted_mass_exponent,
            predicted_mass_exponent=report.predicted_mass_exponent,
            masses=report.masses,
            predicted_masses=report.predicted_masses,
            amplitude_bound_holds=report.amplitude_bound_holds,
            r_bar_decreasing=report.r_bar_decreasing,
            sup_error_decreasing=report.sup_error_decreasing,
            soliton_moments=[
                AsymptoticsService.soliton_moment(config.p, k) for k in range(config.dim)
            ],
        )
        last = profiles[-1]
        self._plot(plots.plot_rescaled_profile, "rescaled.svg", last,
                   AsymptoticsService.rescale(last), half_width=settings.window_half_width)
        return EXIT_OK, {"asymptotics": result.model_dump()}, {
            "sup_errors": report.sup_errors,
            "fitted_mass_exponent": report.fitted_mass_exponent,
        }

    def _evolve(self):
        config = self.config
        reference = GroundStateService.ground_state(self._spec(config.lam), mesh=self._mesh())
        dt = config.dt if config.dt is not None else DynamicsService.default_time_step(reference)
        experiment = ExperimentSpec(
            base=reference.spec,
            epsilon=config.eps,
            mode=config.mode,
            t_final=config.t_final,
            dt=dt,
            seed=config.seed,
        )
        self.grid.update({"nodes": reference.mesh.size, "dt": dt})
        outcome = DynamicsService.stability_experiment(experiment, reference)
        trace = outcome.trace
        self._write("trace.csv", csv_io.generate_trace_csv(trace))
        self._plot(plots.plot_orbital_distance, "trace.svg", trace)

        masses = np.asarray(trace.mass_series)
        energies = np.asarray(trace.energy_series)
        phase_rate = None
        if len(trace.times) >= 2:
            phase_rate = float(np.polyfit(trace.times, trace.phase_series, 1)[0])
        result = EvolveResult(
            verdict=outcome.verdict.value,
            initial_distance=outcome.initial_distance,
            max_distance=outcome.max_distance,
            reference_norm=outcome.reference_norm,
            dt=trace.dt,
            samples=len(trace.times),
            completed=trace.completed,
            blowup_time=trace.blowup_time,
            mass_drift=float(np.max(np.abs(masses - masses[0])) / masses[0]),
            energy_drift=float(
                np.max(np.abs(energies - energies[0])) / max(abs(energies[0]), np.finfo(float).tiny)
            ),
            phase_rate=phase_rate,
        )
        return EXIT_OK, {"evolve": result.model_dump()}, {
            "verdict": result.verdict, "max_distance": result.max_distance
        }
