#!/usr/bin/env python3
"""
Run Acceptance Checks

Runs the numerical acceptance checks end to end and prints a pass/fail table.

Checks:
    eigen-3d          lambda_1 for N = 3 equals pi^2
    eigen-2d          lambda_1 for N = 2 lies in [pi^2 - 1/4, pi^2 - 1/16]
    amplitude         u_max at (N, p, lambda) = (2, 4, 100) is sqrt(2 lambda) within 15%
    regimes           observed regime matches the (N, p) table (slow)
    fold-roots        d(lambda) = eta / 2 has two roots with opposite slopes for p = 8 (slow)
    critical-tail     d(lambda) at p = 6, lambda = 2000 approaches the soliton mass (slow)
    sup-error         sup |omega - W| decreases along lambda = 100, 400, 1600 (slow)
    standing-wave     unperturbed evolution conserves mass and energy

Usage:
    uv run python scripts/run_acceptance.py [--quick] [--log-level LEVEL]

Examples:
    # Fast checks only
    uv run python scripts/run_acceptance.py --quick

    # Everything, with solver progress on stderr
    uv run python scripts/run_acceptance.py --log-level info
"""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Callable, List, Tuple

import numpy as np
from rich.console import Console
from rich.table import Table

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.data import ExperimentSpec, FieldState, ProblemSpec, Regime
from app.exceptions import AnnulusNLSError
from app.logging_config import setup_logging
from app.services import (
    AsymptoticsService,
    DynamicsService,
    GroundStateService,
    MassCurveService,
)

logger = logging.getLogger(__name__)
console = Console()

Check = Callable[[], Tuple[bool, str]]


def check_eigen_3d() -> Tuple[bool, str]:
    lam1 = GroundStateService.first_dirichlet_eigenvalue(3)
    return abs(lam1 - math.pi ** 2) <= 1e-8, f"{lam1:.12g}"


def check_eigen_2d() -> Tuple[bool, str]:
    lam1 = GroundStateService.first_dirichlet_eigenvalue(2)
    return math.pi ** 2 - 0.25 <= lam1 <= math.pi ** 2 - 1.0 / 16.0, f"{lam1:.12g}"


def check_amplitude() -> Tuple[bool, str]:
    profile = GroundStateService.ground_state(ProblemSpec(2, 4.0, 100.0))
    target = math.sqrt(200.0)
    return abs(profile.u_max - target) <= 0.15 * target, f"u_max = {profile.u_max:.6g}"


def check_regimes() -> Tuple[bool, str]:
    observed = []
    for dim, p in ((3, 4.0), (2, 6.0), (2, 8.0)):
        lam1 = GroundStateService.first_dirichlet_eigenvalue(dim)
        curve = MassCurveService.trace_curve(dim, p, -lam1 + 0.2, 2000.0, 16, check_slopes=False)
        regime = MassCurveService.classify(curve).regime
        observed.append((regime, MassCurveService.expected_regime(dim, p)))
    ok = all(found is expected for found, expected in observed)
    return ok, ", ".join(found.value for found, _ in observed)


def check_fold_roots() -> Tuple[bool, str]:
    lam1 = GroundStateService.first_dirichlet_eigenvalue(2)
    curve = MassCurveService.trace_curve(2, 8.0, -lam1 + 0.2, 1000.0, 16, check_slopes=False)
    report = MassCurveService.classify(curve)
    if report.regime is not Regime.SUPERCRITICAL_FOLD:
        return False, f"regime {report.regime.value}"
    roots = MassCurveService.solve_mass(curve, 0.5 * report.eta, report)
    slopes = [root.mass_slope for root in roots]
    ok = len(roots) == 2 and slopes[0] > 0.0 > slopes[1]
    return ok, "; ".join(f"lambda = {root.lam:.6g} ({root.stability.value})" for root in roots)


def check_critical_tail() -> Tuple[bool, str]:
    profile = GroundStateService.ground_state(ProblemSpec(2, 6.0, 2000.0))
    mass = MassCurveService.mass(profile)
    limit = 2.0 * math.pi * AsymptoticsService.soliton_moment(6.0, 0)
    return abs(mass - limit) <= 0.1 * limit, f"d = {mass:.6g}, limit = {limit:.6g}"


def check_sup_error() -> Tuple[bool, str]:
    profile = GroundStateService.ground_state(ProblemSpec(2, 4.0, 100.0))
    errors = [AsymptoticsService.sup_error(profile)]
    for lam in (400.0, 1600.0):
        profile = GroundStateService.continue_in_lambda(profile, lam)
        errors.append(AsymptoticsService.sup_error(profile))
    ok = errors[0] > errors[1] > errors[2] and errors[2] <= 0.15
    return ok, ", ".join(f"{error:.3g}" for error in errors)


def check_standing_wave() -> Tuple[bool, str]:
    reference = GroundStateService.ground_state(ProblemSpec(2, 4.0, 10.0))
    dt = DynamicsService.default_time_step(reference)
    spec = ExperimentSpec(base=reference.spec, epsilon=0.0, mode="peak-bump",
                          t_final=2000 * dt, dt=dt)
    initial = FieldState(t=0.0, mesh=reference.mesh, phi=reference.u)
    trace = DynamicsService.evolve(initial, spec, reference)
    masses = np.asarray(trace.mass_series)
    energies = np.asarray(trace.energy_series)
    mass_drift = float(np.max(np.abs(masses - masses[0])) / masses[0])
    energy_drift = float(np.max(np.abs(energies - energies[0])) / max(abs(energies[0]), 1.0))
    ok = trace.completed and mass_drift <= 1e-9 and energy_drift <= 1e-6
    return ok, f"mass drift {mass_drift:.2e}, energy drift {energy_drift:.2e}"


FAST_CHECKS = [
    ("eigen-3d", check_eigen_3d),
    ("eigen-2d", check_eigen_2d),
    ("amplitude", check_amplitude),
    ("standing-wave", check_standing_wave),
]
SLOW_CHECKS = [
    ("regimes", check_regimes),
    ("fold-roots", check_fold_roots),
    ("critical-tail", check_critical_tail),
    ("sup-error", check_sup_error),
]


def run_checks(checks: List[Tuple[str, Check]]) -> int:
    table = Table(title="annulus-nls acceptance")
    table.add_column("Check", style="cyan")
    table.add_column("Result")
    table.add_column("Details")

    failures = 0
    for name, check in checks:
        try:
            ok, details = check()
        except AnnulusNLSError as exc:
            logger.error("Check raised", extra={"check": name, "error": str(exc)})
            ok, details = False, f"{type(exc).__name__}: {exc}"
        failures += not ok
        table.add_row(name, "[green]pass[/green]" if ok else "[red]fail[/red]", details)

    console.print(table)
    return failures


def parse_arguments():
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        description="Run acceptance checks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__
    )
    parser.add_argument('--quick', action='store_true', help='Skip the slow curve checks')
    parser.add_argument('--log-level', default='warning',
                        choices=['debug', 'info', 'warning', 'error'])
    return parser.parse_args()


def main():
    """Main script execution."""
    args = parse_arguments()
    setup_logging(level=args.log_level.upper())

    checks = FAST_CHECKS if args.quick else FAST_CHECKS + SLOW_CHECKS
    failures = run_checks(checks)
    if failures:
        console.print(f"[red]{failures} check(s) failed[/red]")
        return 1
    console.print("[green]All checks passed[/green]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
