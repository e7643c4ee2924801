"""
Mass curve services for annulus-nls

d(lambda) = C * int_1^2 u_lambda^2 r^(N-1) dr along the ground-state branch,
its slope, the existence regime it implies and the normalized solutions d = c.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from app.config import settings
from app.data import (
    CurvePoint,
    ExistenceReport,
    ExponentFit,
    MassCurve,
    Mesh,
    ProblemSpec,
    Profile,
    Regime,
    RootBracket,
    SlopeCheck,
    SolutionRoot,
    Stability,
)
from app.exceptions import (
    DegenerateLinearizationError,
    InsufficientRangeError,
    ParameterError,
    SingularMatrixError,
    SolverError,
)
from app.numerics import (
    find_root,
    fit_powerlaw,
    quad_weighted,
    radial_operator,
    solve_tridiagonal,
    sphere_area,
)
from app.services.ground_state_service import GroundStateService

logger = logging.getLogger(__name__)

MIN_CURVE_POINTS = 8


def _stability(slope: float, mass: float) -> Stability:
    if abs(slope) <= settings.marginal_slope * mass:
        return Stability.MARGINAL
    return Stability.STABLE if slope > 0.0 else Stability.UNSTABLE


class MassCurveService:
    @staticmethod
    def mass(profile: Profile) -> float:
        """C * int u^2 r^(N-1) dr by weighted Simpson quadrature."""
        u = np.asarray(profile.u, dtype=float)
        dim = profile.spec.dim
        return sphere_area(dim) * quad_weighted(u * u, profile.mesh, dim - 1)

    @staticmethod
    def mass_slope(profile: Profile, check: bool = True) -> float:
        """
        d'(lambda) from the linearized problem L w = -u.

        With L = -Delta_h + lambda - (p-1) u^(p-2) and Dirichlet ends, w = du/dlambda
        and d' = 2C int u w r^(N-1) dr. When check is set the value is compared with
        a centred difference of d and a warning is logged on disagreement.
        """
        spec = profile.spec
        u = np.asarray(profile.u, dtype=float)
        op = radial_operator(profile.mesh, spec.dim)
        sub, diag, sup = op.bands()
        jacobian = diag + spec.lam - (spec.p - 1.0) * np.maximum(u[1:-1], 0.0) ** (spec.p - 2.0)
        try:
            w_interior = solve_tridiagonal(sub, jacobian, sup, -u[1:-1])
        except SingularMatrixError as exc:
            logger.error("Degenerate linearization at ground state", extra={
                "dim": spec.dim, "p": spec.p, "lambda": spec.lam
            }, exc_info=True)
            raise DegenerateLinearizationError(
                f"linearized operator is singular at lambda = {spec.lam:.17g}"
            ) from exc
        w = np.zeros_like(u)
        w[1:-1] = w_interior
        slope = 2.0 * sphere_area(spec.dim) * quad_weighted(u * w, profile.mesh, spec.dim - 1)

        if check:
            result = MassCurveService._compare_slopes(profile, slope)
            if not result.consistent:
                logger.warning("Mass slope conditioning warning", extra={
                    "lambda": spec.lam,
                    "linearized": result.linearized,
                    "finite_difference": result.finite_difference,
                    "relative_gap": result.relative_gap,
                })
        return slope

    @staticmethod
    def _compare_slopes(profile: Profile, slope: float) -> SlopeCheck:
        lam = profile.lam
        lam1 = GroundStateService.first_dirichlet_eigenvalue(profile.spec.dim)
        # stay on the branch side of -lambda_1
        step = min(max(1e-3, 1e-3 * abs(lam)), 0.5 * (lam + lam1))
        upper = GroundStateService.continue_in_lambda(profile, lam + step, mesh=profile.mesh)
        lower = GroundStateService.continue_in_lambda(profile, lam - step, mesh=profile.mesh)
        difference = (MassCurveService.mass(upper) - MassCurveService.mass(lower)) / (2.0 * step)
        gap = abs(slope - difference)
        size = max(abs(slope), abs(difference))
        relative_gap = gap / size if size > 0.0 else 0.0
        floor = settings.marginal_slope * MassCurveService.mass(profile)
        return SlopeCheck(
            linearized=slope,
            finite_difference=difference,
            step=step,
            relative_gap=relative_gap,
            consistent=relative_gap <= settings.slope_check_rtol or gap <= floor,
        )

    @staticmethod
    def mass_slope_check(profile: Profile) -> SlopeCheck:
        """Linearized slope against the centred difference on the same mesh."""
        slope = MassCurveService.mass_slope(profile, check=False)
        return MassCurveService._compare_slopes(profile, slope)

    @staticmethod
    def expected_regime(dim: int, p: float) -> Regime:
        """Existence regime implied by (N, p) alone; p = 6 is critical only for N = 2."""
        critical = math.isclose(p, 6.0, rel_tol=0.0, abs_tol=1e-12)
        if dim >= 3 or (p < 6.0 and not critical):
            return Regime.ALL_MASSES
        if critical:
            return Regime.CRITICAL_BOUNDED
        return Regime.SUPERCRITICAL_FOLD

    @staticmethod
    def curve_grid(lam1: float, lambda_lo: float, lambda_hi: float, n_points: int) -> List[float]:
        """
        Linear spacing on [lambda_lo, max(1, lambda_1)], logarithmic above.

        Grids for n and 2n points share every point of the n-point grid.
        """
        split = max(1.0, lam1)
        if lambda_hi <= split:
            return [lambda_lo + (lambda_hi - lambda_lo) * (k / (n_points - 1))
                    for k in range(n_points)]
        if lambda_lo >= split:
            ratio = lambda_hi / lambda_lo
            return [lambda_lo * ratio ** (k / (n_points - 1)) for k in range(n_points)]
        n_linear = n_points // 2
        n_log = n_points - n_linear
        grid = [lambda_lo + (split - lambda_lo) * (k / n_linear) for k in range(n_linear)]
        grid += [split * (lambda_hi / split) ** (k / n_log) for k in range(1, n_log + 1)]
        return grid

    @staticmethod
    def trace_curve(
        dim: int,
        p: float,
        lambda_lo: float,
        lambda_hi: float,
        n_points: int,
        mesh: Optional[Mesh] = None,
        check_slopes: bool = True,
    ) -> MassCurve:
        """
        Sample d(lambda) along the branch by warm-started continuation.

        Points whose solve fails are recorded in ``gaps`` and the trace resumes
        from the last converged profile.
        """
        if n_points < MIN_CURVE_POINTS:
            raise ParameterError(f"a mass curve needs at least {MIN_CURVE_POINTS} points")
        if not lambda_lo < lambda_hi:
            raise ParameterError(f"need lambda_lo < lambda_hi, got {lambda_lo}, {lambda_hi}")
        GroundStateService.check_spec(ProblemSpec(dim, p, lambda_lo))
        lam1 = GroundStateService.first_dirichlet_eigenvalue(dim)
        grid = MassCurveService.curve_grid(lam1, lambda_lo, lambda_hi, n_points)

        logger.info("Tracing mass curve", extra={
            "dim": dim, "p": p, "lambda_lo": lambda_lo, "lambda_hi": lambda_hi,
            "points": n_points
        })
        points: List[CurvePoint] = []
        profiles: List[Profile] = []
        gaps: List[float] = []
        current: Optional[Profile] = None
        for lam in grid:
            try:
                if current is None:
                    profile = GroundStateService.ground_state(ProblemSpec(dim, p, lam), mesh=mesh)
                else:
                    profile = GroundStateService.continue_in_lambda(current, lam, mesh=mesh)
                slope = MassCurveService.mass_slope(profile, check=check_slopes)
            except SolverError as exc:
                logger.warning("Curve point failed, marking gap", extra={
                    "lambda": lam, "error": str(exc)
                })
                gaps.append(lam)
                continue
            current = profile
            profiles.append(profile)
            points.append(CurvePoint(
                lam=lam,
                mass=MassCurveService.mass(profile),
                mass_slope=slope,
                u_max=profile.u_max,
                r_bar=profile.r_bar,
                s_slope=profile.s_slope,
            ))

        logger.info("Mass curve traced", extra={
            "dim": dim, "p": p, "points": len(points), "gaps": len(gaps)
        })
        return MassCurve(
            dim=dim, p=p, points=points, lambda_min=lambda_lo, lambda_max=lambda_hi,
            gaps=gaps, profiles=profiles,
        )

    @staticmethod
    def classify(curve: MassCurve) -> ExistenceReport:
        """Existence regime with its mass threshold estimated from the sampled curve."""
        from app.services.asymptotics_service import AsymptoticsService

        lam1 = GroundStateService.first_dirichlet_eigenvalue(curve.dim)
        if len(curve.points) < 3:
            raise InsufficientRangeError("classification needs at least 3 converged points")
        lambdas, masses = curve.lambdas, curve.masses
        if lambdas[-1] < settings.classify_min_lambda:
            raise InsufficientRangeError(
                f"curve ends at lambda = {lambdas[-1]}; classification needs "
                f"lambda_max >= {settings.classify_min_lambda}"
            )
        if lambdas[0] > -lam1 + settings.classify_max_lower_offset:
            raise InsufficientRangeError(
                f"curve starts at lambda = {lambdas[0]}; classification needs a start "
                f"within {settings.classify_max_lower_offset} of -lambda_1 = {-lam1:.10f}"
            )

        regime = MassCurveService.expected_regime(curve.dim, curve.p)
        window = (float(lambdas[0]), float(lambdas[-1]))
        observed = float(np.max(masses))

        if regime is Regime.ALL_MASSES:
            report = ExistenceReport(regime=regime, eta=None, lambda_window=window)
        elif regime is Regime.CRITICAL_BOUNDED:
            tail = sphere_area(curve.dim) * AsymptoticsService.soliton_moment(curve.p, 0)
            eta = max(observed, tail)
            report = ExistenceReport(
                regime=regime,
                eta=eta,
                eta_low=observed,
                eta_high=eta + abs(float(masses[-1]) - tail),
                tail_limit=tail,
                lambda_window=window,
            )
        else:
            lambda_hat, eta = MassCurveService._refine_fold(curve)
            report = ExistenceReport(
                regime=regime,
                eta=eta,
                eta_low=eta,
                eta_high=eta,
                lambda_hat=lambda_hat,
                lambda_window=window,
            )

        logger.info("Curve classified", extra={
            "dim": curve.dim, "p": curve.p, "regime": report.regime.value,
            "eta": report.eta, "lambda_hat": report.lambda_hat
        })
        return report

    @staticmethod
    def _refine_fold(curve: MassCurve):
        """Golden-section search for the interior maximum of d around the sampled argmax."""
        masses = curve.masses
        k = int(np.argmax(masses))
        if k == 0 or k == masses.size - 1:
            raise InsufficientRangeError(
                "the sampled mass curve has no interior maximum; widen the lambda range"
            )
        seed = curve.profiles[k]
        cache: Dict[float, float] = {}

        def negative_mass(lam: float) -> float:
            if lam not in cache:
                profile = GroundStateService.continue_in_lambda(seed, lam, mesh=seed.mesh)
                cache[lam] = -MassCurveService.mass(profile)
            return cache[lam]

        lambdas = curve.lambdas
        bracket = (float(lambdas[k - 1]), float(lambdas[k]), float(lambdas[k + 1]))
        result = minimize_scalar(negative_mass, bracket=bracket, method="golden",
                                 options={"xtol": 1e-8})
        lambda_hat = float(result.x)
        eta = max(-float(result.fun), float(masses[k]))
        logger.debug("Fold refined", extra={
            "lambda_hat": lambda_hat, "eta": eta, "evaluations": result.nfev
        })
        return lambda_hat, eta

    @staticmethod
    def solve_mass(
        curve: MassCurve,
        c: float,
        report: Optional[ExistenceReport] = None,
        tol: Optional[float] = None,
    ) -> List[SolutionRoot]:
        """
        Every lambda on the sampled window with d(lambda) = c, tagged by the sign of d'.

        Sign changes of d - c between samples (and across the refined fold when a
        report carries one) are refined with Brent's method, re-solving the
        boundary value problem at every iterate. An empty list means no solution
        on the window. tol is the relative mass tolerance of an accepted root.
        """
        if not c > 0.0:
            raise ParameterError(f"target mass must be positive, got {c}")
        samples = [(point.lam, point.mass, profile)
                   for point, profile in zip(curve.points, curve.profiles)]
        if report is not None and report.lambda_hat is not None:
            nearest = min(samples, key=lambda item: abs(item[0] - report.lambda_hat))[2]
            hat_profile = GroundStateService.continue_in_lambda(
                nearest, report.lambda_hat, mesh=nearest.mesh
            )
            samples.append((report.lambda_hat, MassCurveService.mass(hat_profile), hat_profile))
            samples.sort(key=lambda item: item[0])

        tol = (settings.mass_tolerance if tol is None else tol) * max(1.0, c)
        roots: List[SolutionRoot] = []
        for (lam_a, mass_a, profile_a), (lam_b, mass_b, _) in zip(samples, samples[1:]):
            if mass_a == c:
                roots.append(MassCurveService._root(profile_a))
                continue
            if (mass_a - c) * (mass_b - c) >= 0.0:
                continue
            root = MassCurveService._refine_root(profile_a, lam_a, lam_b, c, tol)
            if root is not None:
                roots.append(root)
        if samples and samples[-1][1] == c:
            roots.append(MassCurveService._root(samples[-1][2]))

        merged: List[SolutionRoot] = []
        for root in sorted(roots, key=lambda item: item.lam):
            if merged and abs(root.lam - merged[-1].lam) < settings.root_merge_distance:
                merged[-1].stability = Stability.MARGINAL
                continue
            merged.append(root)

        logger.info("Normalized solutions found", extra={
            "dim": curve.dim, "p": curve.p, "mass": c, "count": len(merged)
        })
        return merged

    @staticmethod
    def _root(profile: Profile) -> SolutionRoot:
        mass = MassCurveService.mass(profile)
        slope = MassCurveService.mass_slope(profile, check=False)
        return SolutionRoot(
            lam=profile.lam,
            mass=mass,
            mass_slope=slope,
            stability=_stability(slope, mass),
            profile=profile,
        )

    @staticmethod
    def _refine_root(
        seed: Profile, lam_a: float, lam_b: float, c: float, tol: float
    ) -> Optional[SolutionRoot]:
        warm = {"profile": seed}

        def defect(lam: float) -> float:
            profile = GroundStateService.continue_in_lambda(warm["profile"], lam, mesh=seed.mesh)
            warm["profile"] = profile
            return MassCurveService.mass(profile) - c

        try:
            bracket = RootBracket.around(defect, lam_a, lam_b)
        except ParameterError:
            logger.warning("Sign change lost on re-solve, skipping", extra={
                "lambda_a": lam_a, "lambda_b": lam_b, "mass": c
            })
            return None
        lam = find_root(defect, bracket, 1e-13 * max(1.0, abs(lam_a), abs(lam_b)))
        profile = GroundStateService.continue_in_lambda(warm["profile"], lam, mesh=seed.mesh)
        root = MassCurveService._root(profile)
        if abs(root.mass - c) > tol:
            logger.warning("Mass root above tolerance", extra={
                "lambda": lam, "mass": root.mass, "target": c, "tolerance": tol
            })
        return root

    @staticmethod
    def fit_bifurcation_exponent(
        dim: int,
        p: float,
        offsets: Optional[Sequence[float]] = None,
        mesh: Optional[Mesh] = None,
    ) -> ExponentFit:
        """
        Power law of d against the distance to the bifurcation point.

        Offsets are measured from the lowest eigenvalue of the discrete operator
        on the mesh used, so the fit does not see the O(h^2) eigenvalue bias.
        """
        if offsets is None:
            offsets = np.geomspace(1e-3, 1e-1, 9)
        offsets = sorted((float(value) for value in offsets), reverse=True)
        if offsets[-1] <= 0.0:
            raise ParameterError("bifurcation offsets must be positive")
        mesh = mesh if mesh is not None else GroundStateService.mesh_for_lambda(0.0)
        lam1_h = radial_operator(mesh, dim).lowest_eigenvalue()

        profile = GroundStateService.ground_state(ProblemSpec(dim, p, -lam1_h + offsets[0]),
                                                  mesh=mesh)
        masses = [MassCurveService.mass(profile)]
        for offset in offsets[1:]:
            profile = GroundStateService.continue_in_lambda(profile, -lam1_h + offset, mesh=mesh)
            masses.append(MassCurveService.mass(profile))

        fit = fit_powerlaw(zip(offsets, masses))
        monotone = bool(np.all(np.diff(masses) < 0.0))
        logger.info("Bifurcation exponent fitted", extra={
            "dim": dim, "p": p, "exponent": fit.exponent, "expected": 2.0 / (p - 2.0)
        })
        return ExponentFit(
            exponent=fit.exponent,
            prefactor=fit.prefactor,
            residual=fit.residual,
            expected_exponent=2.0 / (p - 2.0),
            abscissae=tuple(offsets),
            masses=tuple(masses),
            monotone=monotone,
        )

    @staticmethod
    def fit_tail_exponent(
        dim: int, p: float, lambdas: Optional[Sequence[float]] = None
    ) -> ExponentFit:
        """Power law of d over a large-lambda ladder (default 500 to 4000)."""
        if lambdas is None:
            lambdas = np.geomspace(500.0, 4000.0, 7)
        lambdas = sorted(float(value) for value in lambdas)
        profile = GroundStateService.ground_state(ProblemSpec(dim, p, lambdas[0]))
        masses = [MassCurveService.mass(profile)]
        for lam in lambdas[1:]:
            profile = GroundStateService.continue_in_lambda(profile, lam)
            masses.append(MassCurveService.mass(profile))

        fit = fit_powerlaw(zip(lambdas, masses))
        steps = np.diff(masses)
        expected = 2.0 / (p - 2.0) - 0.5
        logger.info("Tail exponent fitted", extra={
            "dim": dim, "p": p, "exponent": fit.exponent, "expected": expected
        })
        return ExponentFit(
            exponent=fit.exponent,
            prefactor=fit.prefactor,
            residual=fit.residual,
            expected_exponent=expected,
            abscissae=tuple(lambdas),
            masses=tuple(masses),
            monotone=bool(np.all(steps > 0.0) or np.all(steps < 0.0)),
        )
