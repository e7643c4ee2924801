#!/usr/bin/env python3
"""
Unit tests for the soliton limit and the large-lambda diagnostics.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.data import ProblemSpec, SolitonRef
from app.exceptions import InsufficientRangeError, ParameterError
from app.services import AsymptoticsService, GroundStateService


@pytest.fixture(scope="module")
def ladder_n2_p4():
    """Ground states at lambda = 100, 400, 1600 for N = 2, p = 4."""
    profile = GroundStateService.ground_state(ProblemSpec(2, 4.0, 100.0))
    profiles = [profile]
    for lam in (400.0, 1600.0):
        profile = GroundStateService.continue_in_lambda(profile, lam)
        profiles.append(profile)
    return profiles


class TestSoliton:
    """Test the closed-form soliton and its moments."""

    def test_peak_value(self):
        value = AsymptoticsService.soliton_eval(4.0, 0.0)
        assert value == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_cubic_soliton_is_sech(self):
        r = np.linspace(-8.0, 8.0, 161)
        np.testing.assert_allclose(
            AsymptoticsService.soliton_eval(4.0, r), math.sqrt(2.0) / np.cosh(r), rtol=1e-12
        )

    @pytest.mark.parametrize("p", [3.0, 4.0, 6.0, 8.0])
    def test_even(self, p):
        r = np.linspace(0.0, 6.0, 31)
        np.testing.assert_array_equal(SolitonRef(p)(r), SolitonRef(p)(-r))

    @pytest.mark.parametrize("p", [3.0, 4.0, 6.0, 8.0])
    def test_ode_residual(self, p):
        assert AsymptoticsService.soliton_residual(p) <= 1e-8

    def test_far_tail_is_finite(self):
        assert AsymptoticsService.soliton_eval(3.0, 1e4) == 0.0

    def test_moment_cubic(self):
        assert AsymptoticsService.soliton_moment(4.0, 0) == pytest.approx(4.0, rel=1e-12)

    def test_moment_quintic(self):
        assert AsymptoticsService.soliton_moment(6.0, 0) == pytest.approx(
            math.sqrt(3.0) * math.pi / 2.0, rel=1e-12
        )

    def test_second_moment_cubic(self):
        """int 2 sech^2(r) r^2 dr = pi^2 / 3."""
        assert AsymptoticsService.soliton_moment(4.0, 2) == pytest.approx(
            math.pi ** 2 / 3.0, rel=1e-10
        )

    @pytest.mark.parametrize("p", [3.0, 4.0, 8.0])
    def test_odd_moments_vanish(self, p):
        assert AsymptoticsService.soliton_moment(p, 1) == 0.0
        assert AsymptoticsService.soliton_moment(p, 3) == 0.0

    def test_invalid_moment_order(self):
        with pytest.raises(ParameterError):
            AsymptoticsService.soliton_moment(4.0, -1)


class TestPredictMass:
    """Test predict_mass."""

    def test_leading_term(self):
        predicted = AsymptoticsService.predict_mass(4.0, 2, 1e4, 1.0)
        assert predicted == pytest.approx(2.0 * math.pi * 100.0 * 4.0, rel=1e-12)

    def test_critical_constant(self):
        """At p = 6, N = 2 the leading term does not depend on lambda."""
        soliton_mass = math.sqrt(3.0) * math.pi ** 2
        for lam in (1e4, 1e6, 1e8):
            assert AsymptoticsService.predict_mass(6.0, 2, lam, 1.0) == pytest.approx(
                soliton_mass, rel=1e-3
            )

    def test_rejects_non_positive_lambda(self):
        with pytest.raises(ParameterError):
            AsymptoticsService.predict_mass(4.0, 2, -1.0, 1.0)


class TestRescale:
    """Test rescale, sup_error and limit_diagnostics."""

    def test_peak_value(self):
        profile = GroundStateService.ground_state(ProblemSpec(2, 4.0, 100.0))
        rescaled = AsymptoticsService.rescale(profile)
        assert rescaled(0.0) == pytest.approx(profile.u_max / 10.0, rel=1e-14)
        assert rescaled.peak == pytest.approx(profile.u_max / 10.0, rel=1e-14)

    def test_outside_annulus_is_zero(self):
        profile = GroundStateService.ground_state(ProblemSpec(2, 4.0, 100.0))
        rescaled = AsymptoticsService.rescale(profile)
        assert rescaled(np.array([-50.0, 50.0])).tolist() == [0.0, 0.0]

    def test_rejects_non_positive_lambda(self):
        profile = GroundStateService.ground_state(ProblemSpec(2, 4.0, -1.0))
        with pytest.raises(ParameterError):
            AsymptoticsService.rescale(profile)

    @pytest.mark.slow
    def test_short_ladder_rejected(self, ladder_n2_p4):
        with pytest.raises(InsufficientRangeError):
            AsymptoticsService.limit_diagnostics(ladder_n2_p4[:2])
        with pytest.raises(InsufficientRangeError):
            AsymptoticsService.limit_diagnostics(list(reversed(ladder_n2_p4)))

    @pytest.mark.slow
    def test_sup_error_decreases(self, ladder_n2_p4):
        errors = [AsymptoticsService.sup_error(profile) for profile in ladder_n2_p4]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] <= 0.15

    @pytest.mark.slow
    def test_sup_error_bounded_below_by_wall_value(self, ladder_n2_p4):
        """omega is zero past the inner wall rho = sqrt(lambda) (1 - r_bar) while W is not."""
        soliton = SolitonRef(4.0)
        for profile in ladder_n2_p4:
            edge = math.sqrt(profile.lam) * (1.0 - profile.r_bar)
            assert -5.0 < edge < 0.0
            wall_value = float(soliton(edge))
            assert AsymptoticsService.sup_error(profile) >= 0.98 * wall_value

    @pytest.mark.slow
    def test_limit_diagnostics(self, ladder_n2_p4):
        report = AsymptoticsService.limit_diagnostics(ladder_n2_p4)
        assert report.lambdas == [100.0, 400.0, 1600.0]
        assert report.sup_error_decreasing
        assert report.r_bar_decreasing
        assert report.amplitude_bound_holds
        assert report.predicted_mass_exponent == pytest.approx(0.5)
        assert len(report.moment_errors) == 3 and len(report.moment_errors[0]) == 2
        assert report.masses[-1] == pytest.approx(report.predicted_masses[-1], rel=0.1)

    @pytest.mark.slow
    @pytest.mark.parametrize("p, target", [(4.0, 0.5), (8.0, 0.25)])
    def test_amplitude_ratio_at_lambda_4000(self, p, target):
        profile = GroundStateService.ground_state(ProblemSpec(2, p, 4000.0))
        ratio = 4000.0 / profile.u_max ** (p - 2.0)
        assert ratio <= 1.0
        assert ratio == pytest.approx(target, rel=0.1)

    @pytest.mark.slow
    def test_mass_moment_at_lambda_4000(self):
        profile = GroundStateService.ground_state(ProblemSpec(2, 4.0, 4000.0))
        moments = AsymptoticsService.rescaled_moments(profile)
        assert moments[0] == pytest.approx(AsymptoticsService.soliton_moment(4.0, 0), rel=0.05)

    @pytest.mark.slow
    def test_peak_radius_tends_to_inner_boundary(self):
        radii = []
        profile = GroundStateService.ground_state(ProblemSpec(2, 4.0, 40.0))
        radii.append(profile.r_bar)
        for lam in (400.0, 4000.0):
            profile = GroundStateService.continue_in_lambda(profile, lam)
            radii.append(profile.r_bar)
        assert radii[0] > radii[1] > radii[2] > 1.0
