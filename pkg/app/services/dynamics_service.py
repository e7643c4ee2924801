"""
Dynamics services for annulus-nls

Radial time-dependent NLS i Phi_t = -Delta Phi - |Phi|^(p-2) Phi on the annulus
with Dirichlet ends, advanced by a conservative Crank-Nicolson scheme:

    W (Phi+ - Phi) i / dt = (S - W Q) (Phi+ + Phi) / 2

where S, W are the flux-form stiffness and weights of the ground-state solver
and Q is the difference quotient of F(rho) = (2/p) rho^(p/2) between |Phi|^2
and |Phi+|^2. The system matrix is a real symmetric shift of W, so the discrete
mass sum(W |Phi|^2) is preserved by every inner iterate, and the converged step
also preserves the discrete energy.
"""
import logging
import math
from typing import Optional

import numpy as np
from tenacity import after_log, before_log, retry, retry_if_exception_type, stop_after_attempt

from app.config import settings
from app.data import (
    EvolutionTrace,
    ExperimentSpec,
    FieldState,
    PerturbationMode,
    ProblemSpec,
    Profile,
    StabilityResult,
    Verdict,
)
from app.exceptions import EvolutionAbortedError, InnerIterationError, ParameterError
from app.numerics import RadialOperator, radial_operator, solve_tridiagonal, sphere_area

logger = logging.getLogger(__name__)

_SINE_MODES = 5
_STABLE_FLOOR = 1e-6  # relative to ||u||_H1, stands in for delta(0) when epsilon = 0


def _potential_quotient(new: np.ndarray, old: np.ndarray, p: float) -> np.ndarray:
    """(F(a) - F(b)) / (a - b) for F(rho) = (2/p) rho^(p/2), F'(a) where a == b."""
    m = 0.5 * p
    hi = np.maximum(new, old)
    lo = np.minimum(new, old)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(lo / hi)
        ratio = np.where(
            log_ratio == 0.0, m, np.expm1(m * log_ratio) / np.expm1(log_ratio)
        )
        quotient = np.where(hi > 0.0, hi ** (m - 1.0) * ratio, 0.0)
    return (2.0 / p) * quotient


def _crank_nicolson_step(op: RadialOperator, phi: np.ndarray, dt: float, p: float) -> np.ndarray:
    w = op.weights
    interior = phi[1:-1]
    stiffness = op.apply_symmetric(phi)
    rho_old = np.abs(interior) ** 2
    half = 0.5j * dt
    off = half * op.s_off
    scale = max(1.0, float(np.max(np.abs(interior))))

    guess = interior
    for _ in range(settings.inner_max_iterations):
        q = _potential_quotient(np.abs(guess) ** 2, rho_old, p)
        diag = w + half * (op.s_diag - w * q)
        rhs = w * interior - half * (stiffness - w * q * interior)
        update = solve_tridiagonal(off, diag, off, rhs)
        change = float(np.max(np.abs(update - guess)))
        guess = update
        if change <= settings.inner_tolerance * scale:
            result = np.zeros_like(phi)
            result[1:-1] = guess
            return result
    raise InnerIterationError(
        f"inner iteration stalled (last change {change:.3e})", time=float("nan")
    )


class DynamicsService:
    @staticmethod
    def default_time_step(reference: Profile) -> float:
        """dt resolving both the phase rate lambda and the nonlinear rate u_max^(p-2)."""
        rate = max(abs(reference.lam), reference.u_max ** (reference.spec.p - 2.0), 1.0)
        return 0.02 / rate

    @staticmethod
    def discrete_mass(state: FieldState, dim: int) -> float:
        op = radial_operator(state.mesh, dim)
        return sphere_area(dim) * float(op.weighted_inner(state.phi, state.phi).real)

    @staticmethod
    def discrete_energy(state: FieldState, dim: int, p: float) -> float:
        """C (1/2 <S Phi, Phi> - (1/p) sum w |Phi|^p), conserved by the scheme."""
        op = radial_operator(state.mesh, dim)
        gradient = float(op.dirichlet_form(state.phi, state.phi).real)
        potential = float(np.sum(op.weights * np.abs(state.phi[1:-1]) ** p))
        return sphere_area(dim) * (0.5 * gradient - potential / p)

    @staticmethod
    def _h1_inner(op: RadialOperator, f: np.ndarray, g: np.ndarray) -> complex:
        return sphere_area(op.dim) * complex(op.dirichlet_form(f, g) + op.weighted_inner(f, g))

    @staticmethod
    def h1_norm(profile: Profile) -> float:
        op = radial_operator(profile.mesh, profile.spec.dim)
        u = np.asarray(profile.u, dtype=float)
        return math.sqrt(DynamicsService._h1_inner(op, u, u).real)

    @staticmethod
    def _distance(op: RadialOperator, phi: np.ndarray, u: np.ndarray) -> float:
        overlap = DynamicsService._h1_inner(op, phi, u)
        rotation = overlap / abs(overlap) if overlap != 0 else 1.0
        difference = phi - rotation * u
        return math.sqrt(max(DynamicsService._h1_inner(op, difference, difference).real, 0.0))

    @staticmethod
    def orbital_distance(state: FieldState, reference: Profile) -> float:
        """
        inf over s of ||Phi - e^(is) u||_H1.

        The infimum is attained at e^(is) = <Phi, u> / |<Phi, u>|; the distance is
        evaluated as the norm of that difference rather than by expanding the square.
        """
        if not state.mesh.same_as(reference.mesh):
            raise ParameterError("state and reference must share a mesh")
        op = radial_operator(reference.mesh, reference.spec.dim)
        return DynamicsService._distance(op, state.phi, np.asarray(reference.u, dtype=float))

    @staticmethod
    def perturb(reference: Profile, spec: ExperimentSpec) -> FieldState:
        """
        Initial state u + epsilon ||u||_H1 b with b of unit H1 norm.

        peak-bump: a Gaussian bump at r_bar with the peak width, tapered to the ends.
        random-smooth: seeded complex combination of the first five sine modes.
        mass-preserving-rescale: random-smooth, then scaled back to the mass of u.
        """
        mesh = reference.mesh
        r = mesh.nodes
        u = np.asarray(reference.u, dtype=float).astype(complex)
        op = radial_operator(mesh, reference.spec.dim)

        if spec.mode is PerturbationMode.PEAK_BUMP:
            width = 1.0 / math.sqrt(max(reference.lam, 4.0))
            bump = np.exp(-(((r - reference.r_bar) / width) ** 2))
            direction = bump * np.sin(math.pi * (r - 1.0))
            direction = direction.astype(complex)
        else:
            rng = np.random.default_rng(spec.seed)
            coefficients = rng.standard_normal(_SINE_MODES) + 1j * rng.standard_normal(_SINE_MODES)
            modes = np.sin(np.outer(np.arange(1, _SINE_MODES + 1), math.pi * (r - 1.0)))
            direction = coefficients @ modes
        direction[0] = direction[-1] = 0.0
        direction /= math.sqrt(DynamicsService._h1_inner(op, direction, direction).real)

        phi = u + spec.epsilon * DynamicsService.h1_norm(reference) * direction
        if spec.mode is PerturbationMode.MASS_PRESERVING_RESCALE:
            target = float(op.weighted_inner(u, u).real)
            phi *= math.sqrt(target / float(op.weighted_inner(phi, phi).real))
        phi[0] = phi[-1] = 0.0
        return FieldState(t=0.0, mesh=mesh, phi=phi)

    @staticmethod
    def propagate(state: FieldState, spec: ProblemSpec, dt: float, n_steps: int) -> FieldState:
        """Advance n_steps of size dt; a negative dt runs the scheme backward."""
        if dt == 0.0 or n_steps < 0:
            raise ParameterError(f"need dt != 0 and n_steps >= 0, got {dt}, {n_steps}")
        op = radial_operator(state.mesh, spec.dim)
        phi = state.phi.copy()
        for step in range(1, n_steps + 1):
            try:
                phi = _crank_nicolson_step(op, phi, dt, spec.p)
            except InnerIterationError as exc:
                exc.time = state.t + (step - 1) * dt
                raise
        return FieldState(t=state.t + n_steps * dt, mesh=state.mesh, phi=phi)

    @staticmethod
    def _run(
        initial: FieldState,
        reference: Profile,
        dt: float,
        t_final: float,
        stop_distance: Optional[float],
    ) -> EvolutionTrace:
        spec = reference.spec
        op = radial_operator(reference.mesh, spec.dim)
        u = np.asarray(reference.u, dtype=float)
        n_steps = int(round((t_final - initial.t) / dt))
        stride = max(1, int((t_final - initial.t) / (settings.trace_samples * dt)))
        blowup_level = settings.blowup_factor * float(np.max(np.abs(u)))

        trace = EvolutionTrace(dt=dt)
        angle = float(np.angle(op.weighted_inner(initial.phi, u)))
        phase = angle

        def record(t: float, values: np.ndarray) -> None:
            state = FieldState(t=t, mesh=initial.mesh, phi=values)
            trace.append(
                t,
                DynamicsService.discrete_mass(state, spec.dim),
                DynamicsService.discrete_energy(state, spec.dim, spec.p),
                DynamicsService._distance(op, values, u),
                phase,
            )

        record(initial.t, initial.phi)
        recorded_step = 0
        phi = initial.phi
        for step in range(1, n_steps + 1):
            t = initial.t + step * dt
            try:
                advanced = _crank_nicolson_step(op, phi, dt, spec.p)
            except InnerIterationError as exc:
                # partial trace ends on the last accepted state
                if recorded_step != step - 1:
                    record(t - dt, phi)
                exc.time = t - dt
                exc.partial = trace
                raise
            phi = advanced

            peak = float(np.max(np.abs(phi)))
            if not math.isfinite(peak) or peak > blowup_level:
                trace.blowup_time = t
                logger.warning("Blow-up detected", extra={"time": t, "peak": peak})
                return trace

            new_angle = float(np.angle(op.weighted_inner(phi, u)))
            phase += math.remainder(new_angle - angle, 2.0 * math.pi)
            angle = new_angle

            crossed = (
                stop_distance is not None
                and DynamicsService._distance(op, phi, u) >= stop_distance
            )
            if crossed or step % stride == 0 or step == n_steps:
                record(t, phi)
                recorded_step = step
            if crossed:
                logger.info("Orbital distance threshold reached", extra={
                    "time": t, "distance": trace.orbital_distance_series[-1],
                    "threshold": stop_distance
                })
                return trace

        trace.completed = True
        return trace

    @staticmethod
    def evolve(
        initial: FieldState,
        spec: ExperimentSpec,
        reference: Profile,
        stop_distance: Optional[float] = None,
    ) -> EvolutionTrace:
        """
        Evolve initial to spec.t_final, sampling about settings.trace_samples points.

        An inner-iteration failure restarts the run once with dt halved; a second
        failure raises EvolutionAbortedError carrying the partial trace. Blow-up
        ends the run with ``blowup_time`` set. With stop_distance the run also
        ends once the orbital distance reaches it.
        """
        if not initial.mesh.same_as(reference.mesh):
            raise ParameterError("initial state and reference profile must share a mesh")
        if reference.lam != 0.0 and spec.dt > 0.1 / abs(reference.lam):
            limit = 0.1 / abs(reference.lam)
            raise ParameterError(
                f"dt = {spec.dt:g} does not resolve the phase rate (dt <= {limit:.6g})"
            )
        logger.info("Starting evolution", extra={
            "dim": reference.spec.dim, "p": reference.spec.p, "lambda": reference.lam,
            "dt": spec.dt, "t_final": spec.t_final, "nodes": reference.mesh.size
        })
        attempts = []

        @retry(
            stop=stop_after_attempt(2),
            retry=retry_if_exception_type(InnerIterationError),
            before=before_log(logger, logging.DEBUG),
            after=after_log(logger, logging.WARNING),
            reraise=True,
        )
        def _evolve_with_halving() -> EvolutionTrace:
            dt = spec.dt / 2 ** len(attempts)
            attempts.append(dt)
            return DynamicsService._run(initial, reference, dt, spec.t_final, stop_distance)

        try:
            trace = _evolve_with_halving()
        except InnerIterationError as exc:
            logger.error("Evolution aborted", extra={
                "time": exc.time, "dt": attempts[-1]
            }, exc_info=True)
            raise EvolutionAbortedError(
                f"evolution aborted at t = {exc.time:.6g} after halving dt to {attempts[-1]:.3e}",
                trace=exc.partial,
            ) from exc

        logger.info("Evolution finished", extra={
            "samples": len(trace.times), "completed": trace.completed,
            "blowup_time": trace.blowup_time, "dt": trace.dt
        })
        return trace

    @staticmethod
    def stability_experiment(spec: ExperimentSpec, reference: Profile) -> StabilityResult:
        """
        Perturb the standing wave and classify the orbital distance history.

        instability-detected: distance reaches unstable_fraction * ||u||_H1 or blow-up.
        stable-consistent: the run completes with max distance <= stable_factor * delta(0).
        inconclusive: anything else, including a run aborted by the inner iteration
        before the threshold was reached.
        """
        if (spec.base.dim, spec.base.p) != (reference.spec.dim, reference.spec.p):
            raise ParameterError("experiment (N, p) does not match the reference profile")
        norm = DynamicsService.h1_norm(reference)
        initial = DynamicsService.perturb(reference, spec)
        initial_distance = DynamicsService.orbital_distance(initial, reference)
        threshold = settings.unstable_fraction * norm

        aborted = False
        try:
            trace = DynamicsService.evolve(initial, spec, reference, stop_distance=threshold)
        except EvolutionAbortedError as exc:
            trace = exc.trace
            aborted = True
        max_distance = max(trace.orbital_distance_series)
        baseline = max(initial_distance, _STABLE_FLOOR * norm)
        if trace.blowup_time is not None or max_distance >= threshold:
            verdict = Verdict.INSTABILITY_DETECTED
        elif trace.completed and max_distance <= settings.stable_factor * baseline:
            verdict = Verdict.STABLE_CONSISTENT
        else:
            verdict = Verdict.INCONCLUSIVE

        logger.info("Stability experiment finished", extra={
            "lambda": reference.lam, "mode": spec.mode.value, "seed": spec.seed,
            "epsilon": spec.epsilon, "verdict": verdict.value, "aborted": aborted,
            "initial_distance": initial_distance, "max_distance": max_distance
        })
        return StabilityResult(
            verdict=verdict,
            trace=trace,
            initial_distance=initial_distance,
            max_distance=max_distance,
            reference_norm=norm,
        )
