"""
Adaptive Dormand-Prince 5(4) integration of the radial ODE

    u'' + ((N - 1) / r) u' = -g(u)

with continuous (dense) output, sign-change event location and overflow
detection. The field term g is what the caller supplies: for the stationary
problem it is u_+^(p-1) - lambda u, for the eigenvalue problem it is lambda u.

The state is two scalars, so the stages are evaluated on plain floats.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from app.config import settings
from app.exceptions import ParameterError, StepSizeUnderflowError

logger = logging.getLogger(__name__)

FieldTerm = Callable[[float], float]

# Dormand-Prince tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6] + (0.0,)
# difference between the 5th and embedded 4th order weights
_E = (-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40)
# quartic continuous extension, y(r + s h) = y + h * sum_m (K^T P)[m] s^(m+1)
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

_SAFETY = 0.9
_BETA = 0.04  # proportional-integral control
_EXPONENT = 0.2 - 0.75 * _BETA
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@dataclass
class RadialTrajectory:
    """Accepted step points plus optional dense samples at requested radii."""
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    first_zero: Optional[float]
    overflowed: bool
    r_eval: Optional[np.ndarray] = None
    u_eval: Optional[np.ndarray] = None
    du_eval: Optional[np.ndarray] = None
    steps: int = 0
    rejected: int = 0

    @property
    def end_value(self) -> float:
        return float(self.u[-1])


class _Step:
    """Coefficients of the dense interpolant over one accepted step."""
    __slots__ = ("r", "h", "u", "v", "qu", "qv")

    def __init__(self, r: float, h: float, u: float, v: float, ku: List[float], kv: List[float]):
        self.r = r
        self.h = h
        self.u = u
        self.v = v
        self.qu = [sum(ku[i] * _P[i][m] for i in range(7)) for m in range(4)]
        self.qv = [sum(kv[i] * _P[i][m] for i in range(7)) for m in range(4)]

    def __call__(self, radius: float):
        s = (radius - self.r) / self.h
        s2 = s * s
        powers = (s, s2, s2 * s, s2 * s2)
        u = self.u + self.h * sum(q * w for q, w in zip(self.qu, powers))
        v = self.v + self.h * sum(q * w for q, w in zip(self.qv, powers))
        return u, v


def _locate_zero(step: _Step, r_lo: float, r_hi: float, u_lo: float, tol: float) -> float:
    """Bisect the dense output for the sign change inside [r_lo, r_hi]."""
    while r_hi - r_lo > tol:
        mid = 0.5 * (r_lo + r_hi)
        u_mid, _ = step(mid)
        if u_mid == 0.0:
            return mid
        if (u_mid > 0.0) == (u_lo > 0.0):
            r_lo, u_lo = mid, u_mid
        else:
            r_hi = mid
    return 0.5 * (r_lo + r_hi)


def integrate_radial_ivp(
    dim: int,
    field_term: FieldTerm,
    r0: float,
    u0: float,
    du0: float,
    r_end: float,
    tol: Optional[float] = None,
    stop_at_zero: bool = False,
    r_eval: Optional[Sequence[float]] = None,
) -> RadialTrajectory:
    """
    Integrate u'' + ((N-1)/r) u' + g(u) = 0 from r0 to r_end.

    Args:
        dim: Dimension N >= 2 (sets the first-order coefficient)
        field_term: g(u)
        r0, u0, du0: Initial radius, value and slope
        r_end: Final radius, r0 < r_end <= 2
        tol: Local error tolerance (absolute and relative); settings.ivp_tolerance if None
        stop_at_zero: Stop at the first sign change of u and report its radius
        r_eval: Radii at which to sample the dense output

    The error test is max_i |e_i| / (tol * scale + tol * |y_i|) <= 1 with
    scale = max(|u0|, |du0|).

    Returns:
        RadialTrajectory; ``overflowed`` is set when |u| or |u'| exceeded
        settings.overflow_limit, in which case the trajectory ends at the last
        finite step.
    """
    tol = settings.ivp_tolerance if tol is None else float(tol)
    if dim < 2:
        raise ParameterError(f"dimension must be >= 2, got {dim}")
    if not (1.0 <= r0 < r_end <= 2.0):
        raise ParameterError(f"need 1 <= r0 < r_end <= 2, got r0={r0}, r_end={r_end}")
    if not tol > 0.0:
        raise ParameterError(f"tolerance must be positive, got {tol}")

    curvature = float(dim - 1)
    limit = settings.overflow_limit
    event_tol = settings.event_tolerance

    def rhs(r: float, u: float, v: float):
        return v, -curvature / r * v - field_term(u)

    samples = None if r_eval is None else np.asarray(r_eval, dtype=float)
    u_samples = None if samples is None else np.full(samples.shape, np.nan)
    v_samples = None if samples is None else np.full(samples.shape, np.nan)
    next_sample = 0
    if samples is not None:
        while next_sample < samples.size and samples[next_sample] < r0:
            next_sample += 1
        if next_sample < samples.size and samples[next_sample] == r0:
            u_samples[next_sample], v_samples[next_sample] = u0, du0
            next_sample += 1

    r, u, v = float(r0), float(u0), float(du0)
    rs, us, vs = [r], [u], [v]
    # absolute tolerance follows the size of the initial data, so tiny shots
    # (the linear regime) are resolved as accurately as unit ones
    data_scale = max(abs(u), abs(v))
    atol = tol * data_scale if data_scale > 0.0 else tol
    span = r_end - r0
    h = span * min(0.1, tol ** 0.2)
    previous_error = 1e-4
    first_zero = None
    overflowed = False
    steps = rejected = 0

    ku = [0.0] * 7
    kv = [0.0] * 7
    ku[0], kv[0] = rhs(r, u, v)

    while r < r_end:
        if h < settings.min_step * max(1.0, abs(r)):
            logger.error("Radial integration step underflow", extra={
                "radius": r, "step": h, "dim": dim
            })
            raise StepSizeUnderflowError(f"step size underflow at r = {r:.17g}", radius=r)
        last = r + h >= r_end - 1e-15 * r_end
        if last:
            h = r_end - r

        for i in range(1, 7):
            row = _A[i]
            ui = u + h * sum(a * k for a, k in zip(row, ku))
            vi = v + h * sum(a * k for a, k in zip(row, kv))
            ku[i], kv[i] = rhs(r + _C[i] * h, ui, vi)
        u_new = u + h * sum(b * k for b, k in zip(_B, ku))
        v_new = v + h * sum(b * k for b, k in zip(_B, kv))

        if not (math.isfinite(u_new) and math.isfinite(v_new)) or max(
            abs(u_new), abs(v_new)
        ) > limit:
            if h > span * 1e-6:
                # shrink first; a genuinely runaway solution keeps failing
                h *= _MIN_FACTOR
                rejected += 1
                continue
            overflowed = True
            logger.debug("Radial integration overflow", extra={"radius": r, "dim": dim})
            break

        err_u = h * sum(e * k for e, k in zip(_E, ku))
        err_v = h * sum(e * k for e, k in zip(_E, kv))
        error = max(
            abs(err_u) / (atol + tol * max(abs(u), abs(u_new))),
            abs(err_v) / (atol + tol * max(abs(v), abs(v_new))),
        )

        if error > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * error ** -_EXPONENT)
            rejected += 1
            continue

        r_new = r_end if last else r + h
        step = None
        if samples is not None or stop_at_zero:
            step = _Step(r, h, u, v, list(ku), list(kv))

        crossed = stop_at_zero and (
            (u > 0.0 and u_new <= 0.0) or (u < 0.0 and u_new >= 0.0)
        )
        stop_radius = r_new
        if crossed and u_new != 0.0:
            first_zero = _locate_zero(step, r, r_new, u, event_tol)
            stop_radius = first_zero
            u_new, v_new = 0.0, step(first_zero)[1]
        elif crossed:
            first_zero = r_new

        if samples is not None:
            while next_sample < samples.size and samples[next_sample] <= stop_radius:
                u_samples[next_sample], v_samples[next_sample] = step(samples[next_sample])
                next_sample += 1

        steps += 1
        r, u, v = stop_radius, u_new, v_new
        rs.append(r)
        us.append(u)
        vs.append(v)
        if crossed:
            break

        factor = _SAFETY * max(error, 1e-10) ** -_EXPONENT * previous_error ** _BETA
        h *= min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        previous_error = max(error, 1e-4)
        ku[0], kv[0] = ku[6], kv[6]

    return RadialTrajectory(
        r=np.array(rs),
        u=np.array(us),
        du=np.array(vs),
        first_zero=first_zero,
        overflowed=overflowed,
        r_eval=samples,
        u_eval=u_samples,
        du_eval=v_samples,
        steps=steps,
        rejected=rejected,
    )
