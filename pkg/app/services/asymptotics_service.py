"""
Asymptotics services for annulus-nls

The decaying soliton W of -W'' + W = W^(p-1) on the line, the blow-up rescaling
omega(rho) = lambda^(1/(2-p)) u(rho / sqrt(lambda) + r_bar) and the large-lambda
diagnostics built on them.
"""
import logging
import math
from functools import lru_cache
from typing import List, Sequence

import numpy as np
from scipy.integrate import quad, simpson
from scipy.interpolate import PchipInterpolator
from scipy.special import comb, gamma, gammaincc

from app.config import settings
from app.data import Profile, RescaledProfile, RescaleReport, SolitonRef
from app.exceptions import InsufficientRangeError, ParameterError
from app.numerics import fit_powerlaw, sphere_area
from app.services.mass_curve_service import MassCurveService

logger = logging.getLogger(__name__)

_AMPLITUDE_CHECK_LAMBDA = 10.0


@lru_cache(maxsize=128)
def _soliton_moment(p: float, k: int, tail_tolerance: float) -> float:
    soliton = SolitonRef(p)
    # W^2 <= A^2 4^(2/(p-2)) e^(-2r), so the tail past R is bounded by an
    # upper incomplete gamma function
    envelope = soliton.amplitude ** 2 * 4.0 ** (2.0 / (p - 2.0))
    radius = 5.0
    while True:
        tail = envelope * gammaincc(k + 1, 2.0 * radius) * gamma(k + 1) / 2.0 ** (k + 1)
        if 2.0 * tail < tail_tolerance:
            break
        radius += 1.0
    value, abserr = quad(
        lambda r: soliton(r) ** 2 * r ** k, 0.0, radius,
        epsabs=1e-14, epsrel=1e-13, limit=200,
    )
    logger.debug("Soliton moment", extra={
        "p": p, "k": k, "radius": radius, "value": 2.0 * value, "abserr": abserr
    })
    return 2.0 * value


class AsymptoticsService:
    @staticmethod
    def soliton_eval(p: float, r):
        return SolitonRef(p)(r)

    @staticmethod
    def soliton_moment(p: float, k: int) -> float:
        """Integral of W^2 r^k over the line; zero for odd k."""
        if int(k) != k or k < 0:
            raise ParameterError(f"moment order must be a non-negative integer, got {k}")
        if k % 2 == 1:
            return 0.0
        return _soliton_moment(float(p), int(k), settings.moment_tail_tolerance)

    @staticmethod
    def soliton_residual(p: float, half_width: float = 10.0, h: float = 1e-3) -> float:
        """Max |-W'' + W - W^(p-1)| on [-half_width, half_width], fourth-order stencil for W''."""
        n = int(round(2.0 * half_width / h))
        r = np.linspace(-half_width - 2.0 * h, half_width + 2.0 * h, n + 5)
        w = SolitonRef(p)(r)
        second = (-w[:-4] + 16.0 * w[1:-3] - 30.0 * w[2:-2] + 16.0 * w[3:-1] - w[4:]) / (
            12.0 * h * h
        )
        center = w[2:-2]
        return float(np.max(np.abs(-second + center - center ** (p - 1.0))))

    @staticmethod
    def rescale(profile: Profile) -> RescaledProfile:
        """
        Blow-up rescaling around the peak.

        The peak (r_bar, u_max) is inserted into the interpolation nodes, so
        omega(0) = lambda^(1/(2-p)) u_max exactly; the shape-preserving cubic keeps
        the interpolant from overshooting the peak.
        """
        lam = profile.lam
        if not lam > 0.0:
            raise ParameterError(f"rescaling needs lambda > 0, got {lam}")
        p = profile.spec.p
        scale = lam ** (1.0 / (2.0 - p))
        root = math.sqrt(lam)

        r = profile.mesh.nodes
        u = np.asarray(profile.u, dtype=float)
        keep = np.abs(r - profile.r_bar) > 1e-12
        position = int(np.searchsorted(r[keep], profile.r_bar))
        nodes = np.insert(r[keep], position, profile.r_bar)
        values = np.insert(u[keep], position, profile.u_max)
        interpolant = PchipInterpolator(nodes, values, extrapolate=False)

        def evaluate(rho):
            radius = np.asarray(rho, dtype=float) / root + profile.r_bar
            return scale * np.nan_to_num(interpolant(radius), nan=0.0)

        return RescaledProfile(
            lam=lam,
            rho=root * (nodes - profile.r_bar),
            omega=scale * values,
            peak=scale * profile.u_max,
            evaluate=evaluate,
        )

    @staticmethod
    def sup_error(profile: Profile) -> float:
        """sup |omega - W| over the window |rho| <= settings.window_half_width."""
        rescaled = AsymptoticsService.rescale(profile)
        half_width = settings.window_half_width
        rho = np.linspace(-half_width, half_width, settings.window_samples)
        return float(np.max(np.abs(rescaled(rho) - SolitonRef(profile.spec.p)(rho))))

    @staticmethod
    def rescaled_moments(profile: Profile) -> List[float]:
        """Integrals of omega^2 rho^k over the rescaled annulus for k = 0..N-1."""
        lam = profile.lam
        p = profile.spec.p
        rho = math.sqrt(lam) * (profile.mesh.nodes - profile.r_bar)
        omega = lam ** (1.0 / (2.0 - p)) * np.asarray(profile.u, dtype=float)
        return [float(simpson(omega ** 2 * rho ** k, x=rho)) for k in range(profile.spec.dim)]

    @staticmethod
    def predict_mass(p: float, dim: int, lam: float, r_bar: float) -> float:
        """Binomial expansion of d(lambda) with the omega-moments replaced by soliton moments."""
        if not p > 2.0 or not lam > 0.0:
            raise ParameterError(
                f"mass prediction needs p > 2 and lambda > 0, got p={p}, lambda={lam}"
            )
        total = 0.0
        for k in range(dim):
            total += (
                comb(dim - 1, k, exact=True)
                * lam ** (2.0 / (p - 2.0) - (k + 1) / 2.0)
                * r_bar ** (dim - 1 - k)
                * AsymptoticsService.soliton_moment(p, k)
            )
        return sphere_area(dim) * total

    @staticmethod
    def limit_diagnostics(profiles: Sequence[Profile]) -> RescaleReport:
        """Rescaled convergence, peak and mass diagnostics along a lambda ladder."""
        profiles = list(profiles)
        if len(profiles) < 3:
            raise InsufficientRangeError("limit diagnostics need at least 3 profiles")
        lambdas = [profile.lam for profile in profiles]
        if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
            raise InsufficientRangeError("profiles must be ordered by strictly increasing lambda")
        if lambdas[0] <= 0.0 or lambdas[-1] < settings.classify_min_lambda:
            raise InsufficientRangeError(
                "limit diagnostics need 0 < lambda and "
                f"lambda_max >= {settings.classify_min_lambda}"
            )
        dim, p = profiles[0].spec.dim, profiles[0].spec.p

        sup_errors, ratios, r_bars, moment_errors = [], [], [], []
        masses, predicted = [], []
        references = [AsymptoticsService.soliton_moment(p, k) for k in range(dim)]
        for profile in profiles:
            sup_errors.append(AsymptoticsService.sup_error(profile))
            ratios.append(profile.lam / profile.u_max ** (p - 2.0))
            r_bars.append(profile.r_bar)
            moments = AsymptoticsService.rescaled_moments(profile)
            moment_errors.append([abs(m - ref) for m, ref in zip(moments, references)])
            masses.append(MassCurveService.mass(profile))
            predicted.append(AsymptoticsService.predict_mass(p, dim, profile.lam, profile.r_bar))

        fit = fit_powerlaw(zip(lambdas, masses))
        checked = [ratio for lam, ratio in zip(lambdas, ratios) if lam >= _AMPLITUDE_CHECK_LAMBDA]
        report = RescaleReport(
            dim=dim,
            p=p,
            lambdas=lambdas,
            sup_errors=sup_errors,
            amplitude_ratios=ratios,
            r_bars=r_bars,
            moment_errors=moment_errors,
            fitted_mass_exponent=fit.exponent,
            predicted_mass_exponent=2.0 / (p - 2.0) - 0.5,
            masses=masses,
            predicted_masses=predicted,
            amplitude_bound_holds=all(0.0 < ratio <= 1.0 for ratio in checked),
            r_bar_decreasing=all(b < a for a, b in zip(r_bars, r_bars[1:])),
            sup_error_decreasing=all(b < a for a, b in zip(sup_errors, sup_errors[1:])),
        )
        logger.info("Limit diagnostics computed", extra={
            "dim": dim, "p": p, "profiles": len(profiles),
            "fitted_mass_exponent": report.fitted_mass_exponent,
            "last_sup_error": sup_errors[-1]
        })
        return report
