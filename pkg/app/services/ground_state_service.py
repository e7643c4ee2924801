"""
Ground state services for annulus-nls

Positive radial solutions of -Delta u + lambda u = u^(p-1) on 1 < |x| < 2 with
zero boundary values, and the first radial Dirichlet eigenvalue lambda_1.
"""
import logging
import math
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from app.config import settings
from app.data import Energetics, Mesh, ProblemSpec, Profile, RootBracket, ShotResult
from app.exceptions import (
    BracketError,
    ContinuationError,
    NewtonConvergenceError,
    ParameterError,
    ProfileValidationError,
    ShootingMonotonicityError,
    SingularMatrixError,
)
from app.numerics import (
    RadialTrajectory,
    find_root,
    integrate_radial_ivp,
    quad_weighted,
    radial_operator,
    solve_tridiagonal,
    sphere_area,
)

logger = logging.getLogger(__name__)

_EIGEN_IVP_TOLERANCE = 1e-12
_BRACKET_FACTOR = 4.0
_MAX_BRACKET_STEPS = 60
_FALLBACK_ANCHOR = 50.0  # well-conditioned shooting anchor for continuation fallbacks
_NEWTON_FAILURES = (NewtonConvergenceError, SingularMatrixError, ProfileValidationError)


def _positive_power(values: np.ndarray, exponent: float) -> np.ndarray:
    return np.power(np.maximum(values, 0.0), exponent)


@lru_cache(maxsize=None)
def _uniform_mesh(n: int) -> Mesh:
    return Mesh.uniform(n)


@lru_cache(maxsize=32)
def _dirichlet_eigenvalue(dim: int, tol: float) -> float:
    def end_value(mu: float) -> float:
        trajectory = integrate_radial_ivp(
            dim, lambda u: mu * u, 1.0, 0.0, 1.0, 2.0, tol=_EIGEN_IVP_TOLERANCE
        )
        return trajectory.end_value

    # u = r^((1-N)/2) v turns the radial operator into -v'' + q v with
    # q = (N-1)(N-3) / (4 r^2), so lambda_1 - pi^2 lies between min q and max q
    q_coef = (dim - 1) * (dim - 3) / 4.0
    lo = math.pi ** 2 + min(q_coef, q_coef / 4.0) - 0.5
    hi = math.pi ** 2 + max(q_coef, q_coef / 4.0) + 0.5
    try:
        bracket = RootBracket.around(end_value, lo, hi)
    except ParameterError as exc:
        raise BracketError(f"no sign change of phi(2; mu) on [{lo}, {hi}] for N = {dim}") from exc
    return find_root(end_value, bracket, tol)


def parabolic_peak(r: np.ndarray, u: np.ndarray) -> Tuple[float, float]:
    """(u_max, r_bar) from the parabola through the discrete argmax and its neighbours."""
    k = int(np.clip(np.argmax(u), 1, u.size - 2))
    x = r[k - 1:k + 2] - r[k]
    a, b, c = np.polyfit(x, u[k - 1:k + 2], 2)
    if not a < 0.0:
        return float(u[k]), float(r[k])
    vertex = float(np.clip(-b / (2.0 * a), x[0], x[2]))
    value = float(a * vertex * vertex + b * vertex + c)
    return max(value, float(u[k])), float(r[k] + vertex)


def boundary_slope(r: np.ndarray, u: np.ndarray) -> float:
    """Second-order one-sided derivative at r = 1 from the first three nodes."""
    x0, x1, x2 = r[:3]
    u0, u1, u2 = u[:3]
    return float(
        u0 * (2 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2))
        + u1 * (x0 - x2) / ((x1 - x0) * (x1 - x2))
        + u2 * (x0 - x1) / ((x2 - x0) * (x2 - x1))
    )


def _transfer(values: np.ndarray, source: Mesh, target: Mesh) -> np.ndarray:
    if target.same_as(source):
        return values.copy()
    moved = np.maximum(CubicSpline(source.nodes, values)(target.nodes), 0.0)
    moved[0] = moved[-1] = 0.0
    return moved


def _newton(spec: ProblemSpec, mesh: Mesh, guess: np.ndarray) -> Tuple[np.ndarray, float, int]:
    """
    Damped Newton on the interior nodes of the flux-form discretization.

    Returns the solution (endpoints zero), the max-norm defect and the number of
    iterations used.
    """
    op = radial_operator(mesh, spec.dim)
    lam, p = spec.lam, spec.p
    sub, diag, sup = op.bands()

    def defect(values: np.ndarray) -> np.ndarray:
        interior = values[1:-1]
        return op.apply(values) + lam * interior - _positive_power(interior, p - 1.0)

    u = np.array(guess, dtype=float)
    u[0] = u[-1] = 0.0
    f = defect(u)
    norm = float(np.max(np.abs(f)))
    iteration = 0
    while True:
        scale = max(1.0, float(np.max(u)) ** (p - 1.0))
        if norm <= settings.newton_tolerance * scale:
            return u, norm, iteration
        if iteration >= settings.newton_max_iterations:
            break
        iteration += 1

        jacobian = diag + lam - (p - 1.0) * _positive_power(u[1:-1], p - 2.0)
        step = solve_tridiagonal(sub, jacobian, sup, f)
        theta = 1.0
        for _ in range(settings.newton_max_halvings):
            trial = u.copy()
            trial[1:-1] -= theta * step
            f_trial = defect(trial)
            trial_norm = float(np.max(np.abs(f_trial)))
            if trial_norm < norm:
                break
            theta *= 0.5
        else:
            break  # no descent direction left
        u, f, norm = trial, f_trial, trial_norm

    scale = max(1.0, float(np.max(u)) ** (p - 1.0))
    if norm <= settings.residual_acceptance * scale:
        logger.debug("Newton stalled inside acceptance", extra={
            "lambda": lam, "residual": norm, "iterations": iteration
        })
        return u, norm, iteration
    raise NewtonConvergenceError(
        f"Newton did not converge for lambda = {lam:.17g} on {mesh.size} nodes "
        f"(residual {norm:.3e} after {iteration} iterations)",
        residual=norm,
        iterations=iteration,
    )


class GroundStateService:
    @staticmethod
    def first_dirichlet_eigenvalue(dim: int) -> float:
        """Smallest lambda with a nontrivial radial Dirichlet eigenfunction on the annulus."""
        if int(dim) != dim or dim < 2:
            raise ParameterError(f"dimension N must be an integer >= 2, got {dim}")
        return _dirichlet_eigenvalue(int(dim), settings.eigen_tolerance)

    @staticmethod
    def first_eigenfunction(dim: int, mesh: Mesh) -> np.ndarray:
        """Positive first eigenfunction on the mesh, normalized to C * int phi^2 r^(N-1) dr = 1."""
        lam1 = GroundStateService.first_dirichlet_eigenvalue(dim)
        trajectory = integrate_radial_ivp(
            dim, lambda u: lam1 * u, 1.0, 0.0, 1.0, 2.0,
            tol=_EIGEN_IVP_TOLERANCE, r_eval=mesh.nodes,
        )
        phi = np.abs(np.nan_to_num(trajectory.u_eval))
        phi[0] = phi[-1] = 0.0
        norm = math.sqrt(sphere_area(dim) * quad_weighted(phi * phi, mesh, dim - 1))
        return phi / norm

    @staticmethod
    def check_spec(spec: ProblemSpec) -> None:
        lam1 = GroundStateService.first_dirichlet_eigenvalue(spec.dim)
        if not spec.lam > -lam1:
            raise ParameterError(
                f"lambda = {spec.lam} must exceed -lambda_1 = {-lam1:.10f} for N = {spec.dim}"
            )

    @staticmethod
    def mesh_for_lambda(lam: float) -> Mesh:
        """Uniform mesh resolving the O(lambda^(-1/2)) peak width."""
        n = max(
            settings.mesh_min_nodes,
            settings.mesh_nodes_per_sqrt_lambda * math.ceil(math.sqrt(max(lam, 0.0))),
        )
        return _uniform_mesh(min(n, settings.mesh_max_nodes))

    @staticmethod
    def _trajectory(
        spec: ProblemSpec, s: float, r_eval: Optional[np.ndarray] = None
    ) -> RadialTrajectory:
        exponent = spec.p - 1.0
        lam = spec.lam

        # negative part clamped: trajectories cross zero while bracketing
        def field_term(u: float) -> float:
            return (u ** exponent if u > 0.0 else 0.0) - lam * u

        return integrate_radial_ivp(
            spec.dim, field_term, 1.0, 0.0, s, 2.0, stop_at_zero=True, r_eval=r_eval
        )

    @staticmethod
    def shoot(spec: ProblemSpec, s: float) -> ShotResult:
        """Integrate from u(1) = 0, u'(1) = s up to the first zero or r = 2."""
        if not s >= 0.0:
            raise ParameterError(f"initial slope must be non-negative, got {s}")
        if s == 0.0:
            return ShotResult(
                slope=0.0, first_zero=None, end_value=0.0,
                r=np.array([1.0, 2.0]), u=np.zeros(2),
            )
        trajectory = GroundStateService._trajectory(spec, s)
        return ShotResult(
            slope=s,
            first_zero=trajectory.first_zero,
            end_value=None if trajectory.first_zero is not None else trajectory.end_value,
            r=trajectory.r,
            u=trajectory.u,
            overflowed=trajectory.overflowed,
        )

    @staticmethod
    def _miss(spec: ProblemSpec, s: float) -> float:
        miss = GroundStateService.shoot(spec, s).miss
        return min(miss, settings.overflow_limit)

    @staticmethod
    def shooting_slope(spec: ProblemSpec, initial_slope: Optional[float] = None) -> float:
        """
        Initial slope s* whose trajectory first vanishes at r = 2.

        Slopes are scaled by 4 from the starting guess until one shot has no zero
        before r = 2 and another has; first_zero is checked to be nonincreasing
        over every probed slope before Brent's method runs on the bracket.
        """
        if initial_slope is None:
            # peak height ~ lambda^(1/(p-2)) over a width ~ lambda^(-1/2)
            initial_slope = max(1.0, spec.lam) ** (1.0 / (spec.p - 2.0) + 0.5)
        probes = []

        def probe(s: float) -> float:
            shot = GroundStateService.shoot(spec, s)
            probes.append((s, shot.first_zero))
            return min(shot.miss, settings.overflow_limit)

        s = float(initial_slope)
        miss = probe(s)
        if miss < 0.0:
            hi, f_hi = s, miss
            for _ in range(_MAX_BRACKET_STEPS):
                s /= _BRACKET_FACTOR
                miss = probe(s)
                if miss >= 0.0:
                    break
            else:
                logger.error("No positive shot found", extra={
                    "dim": spec.dim, "p": spec.p, "lambda": spec.lam, "smallest_slope": s
                })
                raise BracketError(
                    f"every shot vanishes before r = 2 at lambda = {spec.lam}; "
                    "lambda must exceed -lambda_1"
                )
            lo, f_lo = s, miss
        else:
            lo, f_lo = s, miss
            for _ in range(_MAX_BRACKET_STEPS):
                s *= _BRACKET_FACTOR
                miss = probe(s)
                if miss < 0.0:
                    break
            else:
                raise BracketError(f"no shot vanishes before r = 2 at lambda = {spec.lam}")
            hi, f_hi = s, miss

        ordered = sorted((s, math.inf if zero is None else zero) for s, zero in probes)
        for (s_a, z_a), (s_b, z_b) in zip(ordered, ordered[1:]):
            if z_b > z_a + 1e-9:
                raise ShootingMonotonicityError(
                    f"first zero increased from {z_a:.12g} (s = {s_a:.6g}) "
                    f"to {z_b:.12g} (s = {s_b:.6g}) at lambda = {spec.lam}"
                )

        if f_lo == 0.0:
            return lo
        tol = 4.0 * np.finfo(float).eps * hi
        return find_root(
            lambda slope: GroundStateService._miss(spec, slope),
            RootBracket(lo, hi, f_lo, f_hi),
            tol,
        )

    @staticmethod
    def _shooting_guess(spec: ProblemSpec, s: float, mesh: Mesh) -> np.ndarray:
        trajectory = GroundStateService._trajectory(spec, s, r_eval=mesh.nodes)
        guess = np.maximum(np.nan_to_num(trajectory.u_eval, nan=0.0), 0.0)
        # past the peak the growing mode takes over; keep the decaying part only
        k = int(np.argmax(guess))
        guess[k:] = np.minimum.accumulate(guess[k:])
        guess[0] = guess[-1] = 0.0
        return guess

    @staticmethod
    def _assemble(spec: ProblemSpec, mesh: Mesh, u: np.ndarray, s_slope: float) -> Profile:
        u = np.asarray(u, dtype=float)
        u.setflags(write=False)
        u_max, r_bar = parabolic_peak(mesh.nodes, u)
        profile = Profile(
            spec=spec, mesh=mesh, u=u, s_slope=float(s_slope),
            u_max=u_max, r_bar=r_bar, residual_inf=0.0,
        )
        profile.residual_inf = GroundStateService.residual(profile)
        GroundStateService.validate_profile(profile)
        return profile

    @staticmethod
    def ground_state(
        spec: ProblemSpec,
        mesh: Optional[Mesh] = None,
        initial_slope: Optional[float] = None,
    ) -> Profile:
        """
        Positive radial ground state for (N, p, lambda).

        Args:
            spec: Problem parameters
            mesh: Mesh override; every intermediate solve reuses it when given
            initial_slope: Starting slope of the shooting bracket search

        Single shooting plus Newton on the mesh up to settings.shooting_lambda_max;
        beyond that the solution is continued from the shooting anchor.
        """
        override = mesh
        target_mesh = mesh if mesh is not None else GroundStateService.mesh_for_lambda(spec.lam)
        logger.info("Solving ground state", extra={
            "dim": spec.dim, "p": spec.p, "lambda": spec.lam, "nodes": target_mesh.size
        })

        if spec.lam > settings.shooting_lambda_max:
            anchor = GroundStateService.ground_state(
                spec.with_lambda(settings.shooting_lambda_max),
                mesh=override,
                initial_slope=initial_slope,
            )
            return GroundStateService.continue_in_lambda(anchor, spec.lam, mesh=override)

        s_star = GroundStateService.shooting_slope(spec, initial_slope)
        guess = GroundStateService._shooting_guess(spec, s_star, target_mesh)
        try:
            u, residual, iterations = _newton(spec, target_mesh, guess)
            profile = GroundStateService._assemble(spec, target_mesh, u, s_star)
        except _NEWTON_FAILURES as exc:
            if not spec.lam > _FALLBACK_ANCHOR:
                logger.error("Ground state refinement failed", extra={
                    "dim": spec.dim, "p": spec.p, "lambda": spec.lam, "error": str(exc)
                }, exc_info=True)
                raise
            logger.warning("Shooting guess rejected, continuing from anchor", extra={
                "lambda": spec.lam, "anchor": _FALLBACK_ANCHOR, "error": str(exc)
            })
            anchor = GroundStateService.ground_state(
                spec.with_lambda(_FALLBACK_ANCHOR), mesh=override
            )
            return GroundStateService.continue_in_lambda(anchor, spec.lam, mesh=override)

        logger.debug("Ground state converged", extra={
            "lambda": spec.lam, "slope": s_star, "u_max": profile.u_max,
            "r_bar": profile.r_bar, "residual": residual, "iterations": iterations
        })
        return profile

    @staticmethod
    def residual(profile: Profile) -> float:
        """Max-norm defect of -Delta_h u + lambda u - |u|^(p-2) u over interior nodes."""
        u = np.asarray(profile.u, dtype=float)
        op = radial_operator(profile.mesh, profile.spec.dim)
        interior = u[1:-1]
        nonlinear = np.abs(interior) ** (profile.spec.p - 2.0) * interior
        defect = op.apply(u) + profile.spec.lam * interior - nonlinear
        return float(np.max(np.abs(defect)))

    @staticmethod
    def validate_profile(profile: Profile) -> None:
        """Raise ProfileValidationError when profile is not a positive unimodal solution."""
        u = profile.u
        scale = max(profile.u_max, np.finfo(float).tiny)
        problems = []
        if abs(u[0]) > 1e-10 * scale or abs(u[-1]) > 1e-10 * scale:
            problems.append("nonzero boundary values")
        if np.any(u[1:-1] <= 0.0):
            problems.append("non-positive interior value")
        increments = np.diff(u)
        signs = np.sign(increments[np.abs(increments) > 1e-10 * scale])
        if signs.size == 0 or signs[0] < 0 or np.count_nonzero(signs[1:] != signs[:-1]) != 1:
            problems.append("not unimodal")
        if not 1.0 < profile.r_bar < 2.0:
            problems.append("peak radius outside (1, 2)")
        limit = settings.residual_acceptance * max(1.0, profile.u_max ** (profile.spec.p - 1.0))
        if not profile.residual_inf <= limit:
            problems.append(f"residual {profile.residual_inf:.3e} above {limit:.3e}")
        if problems:
            raise ProfileValidationError(
                f"profile at lambda = {profile.lam} rejected: " + ", ".join(problems)
            )

    @staticmethod
    def profile_energetics(profile: Profile) -> Energetics:
        """Gradient, mass and potential integrals with the energy, action and Nehari defect."""
        spec = profile.spec
        u = np.asarray(profile.u, dtype=float)
        op = radial_operator(profile.mesh, spec.dim)
        c = sphere_area(spec.dim)
        gradient = c * float(op.dirichlet_form(u, u))
        mass = c * float(op.weighted_inner(u, u))
        potential = c * float(np.sum(op.weights * np.abs(u[1:-1]) ** spec.p))
        energy = 0.5 * gradient - potential / spec.p
        return Energetics(
            gradient=gradient,
            mass=mass,
            potential=potential,
            energy=energy,
            action=energy + 0.5 * spec.lam * mass,
            nehari_defect=gradient + spec.lam * mass - potential,
        )

    @staticmethod
    def _advance(current: Profile, lam: float, mesh: Mesh) -> Profile:
        """Tangent predictor from current, Newton corrector at lam on mesh."""
        spec = current.spec.with_lambda(lam)
        u = np.asarray(current.u, dtype=float)
        op = radial_operator(current.mesh, spec.dim)
        sub, diag, sup = op.bands()
        jacobian = diag + current.lam - (spec.p - 1.0) * _positive_power(u[1:-1], spec.p - 2.0)
        tangent = solve_tridiagonal(sub, jacobian, sup, -u[1:-1])
        guess = u.copy()
        guess[1:-1] = np.maximum(u[1:-1] + (lam - current.lam) * tangent, 0.0)
        guess = _transfer(guess, current.mesh, mesh)

        solution, _, _ = _newton(spec, mesh, guess)
        return GroundStateService._assemble(
            spec, mesh, solution, boundary_slope(mesh.nodes, solution)
        )

    @staticmethod
    def continue_in_lambda(
        profile: Profile, lam_target: float, mesh: Optional[Mesh] = None
    ) -> Profile:
        """
        Follow the ground-state branch from profile to lam_target.

        Steps are a fraction of the distance lambda + lambda_1 to the bifurcation
        point, grown by 1.5 on success and halved on failure. Without a mesh
        override each step uses mesh_for_lambda.
        """
        if lam_target == profile.lam and (mesh is None or mesh.same_as(profile.mesh)):
            return profile
        lam1 = GroundStateService.first_dirichlet_eigenvalue(profile.spec.dim)
        if not lam_target > -lam1:
            raise ParameterError(f"continuation target {lam_target} is not above -lambda_1")

        logger.info("Continuing ground state", extra={
            "dim": profile.spec.dim, "p": profile.spec.p,
            "lambda_start": profile.lam, "lambda_target": lam_target
        })
        current = profile
        fraction = settings.continuation_initial_fraction
        steps = 0
        while current.lam != lam_target or (mesh is not None and not current.mesh.same_as(mesh)):
            remaining = lam_target - current.lam
            distance = current.lam + lam1
            step = fraction * distance
            if remaining < 0.0:
                step = min(step, 0.5 * distance)
            if abs(remaining) <= step:
                trial = lam_target
            else:
                trial = current.lam + math.copysign(step, remaining)
            trial_mesh = mesh if mesh is not None else GroundStateService.mesh_for_lambda(trial)

            try:
                candidate = GroundStateService._advance(current, trial, trial_mesh)
            except _NEWTON_FAILURES as exc:
                fraction *= 0.5
                logger.debug("Continuation step rejected", extra={
                    "lambda": current.lam, "trial": trial, "fraction": fraction, "error": str(exc)
                })
                floor = settings.continuation_min_step * max(1.0, abs(current.lam))
                if fraction * distance < floor:
                    logger.error("Continuation step underflow", extra={
                        "last_lambda": current.lam, "lambda_target": lam_target
                    })
                    raise ContinuationError(
                        f"continuation stalled at lambda = {current.lam:.17g} "
                        f"on the way to {lam_target:.17g}",
                        last_lambda=current.lam,
                        last_profile=current,
                    ) from exc
                continue

            current = candidate
            steps += 1
            fraction = min(settings.continuation_max_fraction, 1.5 * fraction)

        logger.debug("Continuation finished", extra={
            "lambda": current.lam, "steps": steps, "u_max": current.u_max
        })
        return current
