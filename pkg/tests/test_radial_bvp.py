#!/usr/bin/env python3
"""
Unit tests for the radial boundary value problem.

Tests cover:
- First radial Dirichlet eigenvalue and eigenfunction
- Shooting from r = 1 and the ground-state slope
- Ground-state profiles and their invariants
- Discrete residual and energetics
- Continuation along the branch
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.data import Mesh, ProblemSpec, Profile
from app.exceptions import BracketError, ParameterError, ProfileValidationError
from app.numerics import quad_weighted, sphere_area
from app.services import GroundStateService


@pytest.fixture(scope="module")
def profile_n2_p4_l10():
    """Ground state at N = 2, p = 4, lambda = 10."""
    return GroundStateService.ground_state(ProblemSpec(2, 4.0, 10.0))


class TestDirichletEigenvalue:
    """Test first_dirichlet_eigenvalue and first_eigenfunction."""

    def test_three_dimensions_is_pi_squared(self):
        assert GroundStateService.first_dirichlet_eigenvalue(3) == pytest.approx(
            math.pi ** 2, abs=1e-8
        )

    def test_two_dimensions_bracket(self):
        lam1 = GroundStateService.first_dirichlet_eigenvalue(2)
        assert math.pi ** 2 - 0.25 <= lam1 <= math.pi ** 2 - 1.0 / 16.0

    def test_two_below_three(self):
        assert (
            GroundStateService.first_dirichlet_eigenvalue(2)
            < GroundStateService.first_dirichlet_eigenvalue(3)
        )

    def test_invalid_dimension(self):
        with pytest.raises(ParameterError):
            GroundStateService.first_dirichlet_eigenvalue(1)

    def test_eigenfunction_normalized_and_positive(self):
        mesh = Mesh.uniform(401)
        phi = GroundStateService.first_eigenfunction(2, mesh)
        assert phi[0] == 0.0 and phi[-1] == 0.0
        assert np.all(phi[1:-1] > 0.0)
        norm = sphere_area(2) * quad_weighted(phi * phi, mesh, 1)
        assert norm == pytest.approx(1.0, rel=1e-10)

    def test_eigenfunction_three_dimensions_closed_form(self):
        """phi_1 is proportional to sin(pi (r - 1)) / r for N = 3."""
        mesh = Mesh.uniform(201)
        phi = GroundStateService.first_eigenfunction(3, mesh)
        r = mesh.nodes
        exact = np.sin(math.pi * (r - 1.0)) / r
        exact /= math.sqrt(sphere_area(3) * quad_weighted(exact * exact, mesh, 2))
        np.testing.assert_allclose(phi, exact, atol=1e-7)


class TestShooting:
    """Test shoot and shooting_slope."""

    def test_zero_slope_is_trivial(self):
        shot = GroundStateService.shoot(ProblemSpec(2, 4.0, 10.0), 0.0)
        assert shot.first_zero is None
        assert shot.end_value == 0.0

    def test_small_slope_stays_positive(self):
        """Near the linear regime the shot is positive up to r = 2."""
        shot = GroundStateService.shoot(ProblemSpec(2, 4.0, 10.0), 1e-6)
        assert shot.first_zero is None
        assert shot.end_value > 0.0

    def test_negative_slope_rejected(self):
        with pytest.raises(ParameterError):
            GroundStateService.shoot(ProblemSpec(2, 4.0, 10.0), -1.0)

    def test_ground_state_slope_hits_outer_boundary(self):
        spec = ProblemSpec(2, 4.0, 10.0)
        s_star = GroundStateService.shooting_slope(spec)
        shot = GroundStateService.shoot(spec, s_star)
        if shot.first_zero is not None:
            assert shot.first_zero == pytest.approx(2.0, abs=1e-9)
        else:
            assert abs(shot.end_value) < 1e-6

    def test_larger_slope_vanishes_earlier(self):
        spec = ProblemSpec(2, 4.0, 10.0)
        s_star = GroundStateService.shooting_slope(spec)
        shot = GroundStateService.shoot(spec, 2.0 * s_star)
        assert shot.first_zero is not None and shot.first_zero < 2.0


class TestGroundState:
    """Test ground_state, residual, validate_profile and profile_energetics."""

    def test_profile_invariants(self, profile_n2_p4_l10):
        profile = profile_n2_p4_l10
        u = profile.u
        assert u[0] == 0.0 and u[-1] == 0.0
        assert np.all(u[1:-1] > 0.0)
        assert 1.0 < profile.r_bar < 2.0
        k = int(np.argmax(u))
        assert np.all(np.diff(u[:k + 1]) > 0.0)
        assert np.all(np.diff(u[k:]) < 0.0)
        assert profile.s_slope > 0.0
        limit = 1e-8 * max(1.0, profile.u_max ** 3)
        assert profile.residual_inf <= limit
        GroundStateService.validate_profile(profile)

    def test_amplitude_scaling_at_lambda_100(self):
        profile = GroundStateService.ground_state(ProblemSpec(2, 4.0, 100.0))
        assert profile.u_max == pytest.approx(math.sqrt(2.0) * 10.0, rel=0.15)
        assert 100.0 / profile.u_max ** 2 <= 1.0

    def test_negative_lambda(self):
        profile = GroundStateService.ground_state(ProblemSpec(3, 3.0, -5.0))
        GroundStateService.validate_profile(profile)
        assert profile.u_max > 0.0

    def test_lambda_below_bifurcation_rejected(self):
        with pytest.raises(ParameterError):
            GroundStateService.check_spec(ProblemSpec(2, 4.0, -20.0))

    def test_solver_below_bifurcation_raises_bracket_error(self):
        lam1 = GroundStateService.first_dirichlet_eigenvalue(2)
        with pytest.raises(BracketError):
            GroundStateService.ground_state(ProblemSpec(2, 4.0, -lam1 - 0.1))

    @pytest.mark.parametrize("initial_slope", [0.01, 1e4])
    def test_independent_of_starting_slope(self, profile_n2_p4_l10, initial_slope):
        """Brackets grown from very different slopes reach the same ground state."""
        profile = GroundStateService.ground_state(
            ProblemSpec(2, 4.0, 10.0), initial_slope=initial_slope
        )
        assert profile.mesh.same_as(profile_n2_p4_l10.mesh)
        assert np.max(np.abs(profile.u - profile_n2_p4_l10.u)) <= 1e-8

    @pytest.mark.slow
    def test_mesh_convergence_is_second_order(self):
        """u_max differences shrink by about 4 each time the mesh is refined."""
        spec = ProblemSpec(2, 4.0, 10.0)
        peaks = [
            GroundStateService.ground_state(spec, mesh=Mesh.uniform(n)).u_max
            for n in (201, 401, 801, 1601)
        ]
        changes = np.abs(np.diff(peaks))
        orders = np.log2(changes[:-1] / changes[1:])
        assert np.all(orders >= 1.8)

    def test_supercritical_p_rejected(self):
        with pytest.raises(ParameterError):
            ProblemSpec(3, 6.5, 1.0)

    def test_mesh_override_is_reused(self):
        mesh = Mesh.uniform(300)
        profile = GroundStateService.ground_state(ProblemSpec(2, 4.0, 10.0), mesh=mesh)
        assert profile.mesh.same_as(mesh)

    def test_zero_profile_residual(self):
        mesh = Mesh.uniform(51)
        zero = np.zeros(51)
        profile = Profile(
            spec=ProblemSpec(2, 4.0, 10.0), mesh=mesh, u=zero, s_slope=0.0,
            u_max=0.0, r_bar=1.5, residual_inf=0.0,
        )
        assert GroundStateService.residual(profile) == 0.0

    def test_residual_detects_perturbation(self, profile_n2_p4_l10):
        profile = profile_n2_p4_l10
        r = profile.mesh.nodes
        bumped = Profile(
            spec=profile.spec, mesh=profile.mesh,
            u=profile.u + 0.01 * np.sin(math.pi * (r - 1.0)),
            s_slope=profile.s_slope, u_max=profile.u_max, r_bar=profile.r_bar,
            residual_inf=0.0,
        )
        assert GroundStateService.residual(bumped) >= profile.residual_inf + 1e-3

    def test_validate_rejects_sign_change(self, profile_n2_p4_l10):
        profile = profile_n2_p4_l10
        u = profile.u.copy()
        u[len(u) // 2] = -1.0
        broken = Profile(
            spec=profile.spec, mesh=profile.mesh, u=u, s_slope=profile.s_slope,
            u_max=profile.u_max, r_bar=profile.r_bar, residual_inf=profile.residual_inf,
        )
        with pytest.raises(ProfileValidationError):
            GroundStateService.validate_profile(broken)

    def test_nehari_identity(self, profile_n2_p4_l10):
        """Ground states satisfy |grad u|^2 + lambda |u|^2 = int u^p."""
        energetics = GroundStateService.profile_energetics(profile_n2_p4_l10)
        assert abs(energetics.nehari_defect) <= 1e-6 * energetics.potential
        assert energetics.action == pytest.approx(
            energetics.energy + 5.0 * energetics.mass, rel=1e-12
        )
        # on the Nehari manifold the action is (1/2 - 1/p) int u^p
        assert energetics.action == pytest.approx(0.25 * energetics.potential, rel=1e-5)

    @pytest.mark.slow
    @pytest.mark.parametrize("dim, p", [(2, 3.0), (2, 4.0), (2, 6.0), (2, 8.0), (3, 3.0), (3, 4.0)])
    @pytest.mark.parametrize("lam", [1.0, 50.0, 1000.0])
    def test_profile_quality_grid(self, dim, p, lam):
        profile = GroundStateService.ground_state(ProblemSpec(dim, p, lam))
        GroundStateService.validate_profile(profile)
        assert profile.residual_inf <= 1e-8 * max(1.0, profile.u_max ** (p - 1.0))
        if lam >= 10.0:
            assert lam / profile.u_max ** (p - 2.0) <= 1.0


class TestContinuation:
    """Test continue_in_lambda."""

    def test_same_lambda_returns_input(self, profile_n2_p4_l10):
        result = GroundStateService.continue_in_lambda(profile_n2_p4_l10, 10.0)
        assert result is profile_n2_p4_l10

    def test_matches_cold_start(self, profile_n2_p4_l10):
        continued = GroundStateService.continue_in_lambda(profile_n2_p4_l10, 60.0)
        cold = GroundStateService.ground_state(ProblemSpec(2, 4.0, 60.0))
        assert continued.mesh.same_as(cold.mesh)
        assert continued.u_max == pytest.approx(cold.u_max, rel=1e-6)

    @pytest.mark.slow
    @pytest.mark.parametrize("dim, p", [(2, 4.0), (2, 8.0), (3, 4.0), (2, 3.0)])
    def test_matches_cold_start_at_lambda_1000(self, dim, p):
        start = GroundStateService.ground_state(ProblemSpec(dim, p, 10.0))
        continued = GroundStateService.continue_in_lambda(start, 1000.0)
        cold = GroundStateService.ground_state(ProblemSpec(dim, p, 1000.0))
        assert continued.u_max == pytest.approx(cold.u_max, rel=1e-6)

    def test_amplitude_decreases_toward_bifurcation(self, profile_n2_p4_l10):
        lam1 = GroundStateService.first_dirichlet_eigenvalue(2)
        targets = [0.0, -5.0, -9.0, -lam1 + 0.1, -lam1 + 0.01]
        amplitudes = [profile_n2_p4_l10.u_max]
        profile = profile_n2_p4_l10
        for target in targets:
            profile = GroundStateService.continue_in_lambda(profile, target)
            amplitudes.append(profile.u_max)
        assert all(b < a for a, b in zip(amplitudes, amplitudes[1:]))

    def test_shape_approaches_eigenfunction(self, profile_n2_p4_l10):
        """Close to -lambda_1 the normalized profile is the first eigenfunction."""
        lam1 = GroundStateService.first_dirichlet_eigenvalue(2)
        profile = GroundStateService.continue_in_lambda(profile_n2_p4_l10, -lam1 + 0.01)
        phi = GroundStateService.first_eigenfunction(2, profile.mesh)
        shape = profile.u / np.max(profile.u)
        np.testing.assert_allclose(shape, phi / np.max(phi), atol=0.02)

    def test_target_below_bifurcation_rejected(self, profile_n2_p4_l10):
        with pytest.raises(ParameterError):
            GroundStateService.continue_in_lambda(profile_n2_p4_l10, -20.0)
