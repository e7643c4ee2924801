#!/usr/bin/env python3
"""
Unit tests for the numerical kernels.

Tests cover:
- Dormand-Prince radial integration, dense output and zero events
- Tridiagonal solves against dense oracles
- Weighted Simpson quadrature
- Bracketed root finding
- Log-log power-law fits
- The conservative radial operator
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.data import Mesh, RootBracket
from app.exceptions import ParameterError, SingularMatrixError
from app.numerics import (
    find_root,
    fit_powerlaw,
    integrate_radial_ivp,
    quad_weighted,
    radial_operator,
    solve_tridiagonal,
    sphere_area,
)


class TestRadialIntegrator:
    """Test integrate_radial_ivp."""

    def test_zero_data_stays_zero(self):
        """Zero initial data gives the trivial trajectory and no event."""
        trajectory = integrate_radial_ivp(
            2, lambda u: 10.0 * u - u ** 3, 1.0, 0.0, 0.0, 2.0, stop_at_zero=True
        )
        assert trajectory.first_zero is None
        assert np.all(trajectory.u == 0.0)
        assert not trajectory.overflowed

    def test_euler_ode_gives_logarithm(self):
        """u'' + u'/r = 0 from (1, 0, 1) is ln r."""
        trajectory = integrate_radial_ivp(2, lambda u: 0.0, 1.0, 0.0, 1.0, 2.0)
        assert trajectory.end_value == pytest.approx(math.log(2.0), abs=1e-9)

    def test_dense_output_matches_closed_form(self):
        """Dense samples of ln r at requested radii."""
        radii = np.linspace(1.0, 2.0, 11)
        trajectory = integrate_radial_ivp(2, lambda u: 0.0, 1.0, 0.0, 1.0, 2.0, r_eval=radii)
        np.testing.assert_allclose(trajectory.u_eval, np.log(radii), atol=1e-9)
        np.testing.assert_allclose(trajectory.du_eval, 1.0 / radii, atol=1e-8)

    def test_error_shrinks_at_fifth_order_rate(self):
        """Dividing tol by 32 divides the ln r error by roughly 32^(4/5) = 16."""
        errors = []
        for tol in (1e-5, 1e-5 / 32.0):
            trajectory = integrate_radial_ivp(2, lambda u: 0.0, 1.0, 0.0, 1.0, 2.0, tol=tol)
            errors.append(abs(trajectory.end_value - math.log(2.0)))
        assert errors[1] > 0.0
        assert errors[0] / errors[1] >= 12.0

    def test_first_zero_for_three_dimensional_eigenfunction(self):
        """With N = 3 and g(u) = pi^2 u the solution is sin(pi (r - 1)) / r, zero at r = 2."""
        trajectory = integrate_radial_ivp(
            3, lambda u: math.pi ** 2 * u, 1.0, 0.0, 1.0, 2.0, stop_at_zero=True
        )
        # zero may land exactly on r = 2 or just past the end of the interval
        if trajectory.first_zero is not None:
            assert trajectory.first_zero == pytest.approx(2.0, abs=1e-9)
        else:
            assert abs(trajectory.end_value) < 1e-9

    def test_interior_zero_is_located(self):
        """g(u) = 4 pi^2 u in N = 3 vanishes first at r = 1.5."""
        trajectory = integrate_radial_ivp(
            3, lambda u: 4.0 * math.pi ** 2 * u, 1.0, 0.0, 1.0, 2.0, stop_at_zero=True
        )
        assert trajectory.first_zero == pytest.approx(1.5, abs=1e-10)
        assert trajectory.r[-1] == trajectory.first_zero

    def test_invalid_arguments(self):
        with pytest.raises(ParameterError):
            integrate_radial_ivp(1, lambda u: 0.0, 1.0, 0.0, 1.0, 2.0)
        with pytest.raises(ParameterError):
            integrate_radial_ivp(2, lambda u: 0.0, 1.5, 0.0, 1.0, 1.2)


class TestTridiagonal:
    """Test solve_tridiagonal."""

    def test_identity(self):
        rhs = np.linspace(0.0, 1.0, 7)
        solution = solve_tridiagonal(np.zeros(6), np.ones(7), np.zeros(6), rhs)
        np.testing.assert_array_equal(solution, rhs)

    def test_discrete_laplacian_reproduces_parabola(self):
        """Three-point Laplacian on 9 interior points; x(1-x)/2 is exact."""
        n = 9
        h = 1.0 / (n + 1)
        x = np.arange(1, n + 1) * h
        solution = solve_tridiagonal(
            -np.ones(n - 1) / h ** 2, 2.0 * np.ones(n) / h ** 2, -np.ones(n - 1) / h ** 2,
            np.ones(n),
        )
        np.testing.assert_allclose(solution, x * (1.0 - x) / 2.0, atol=1e-13)

    def test_random_dominant_system_matches_dense_solve(self):
        rng = np.random.default_rng(7)
        n = 50
        sub, sup = rng.normal(size=n - 1), rng.normal(size=n - 1)
        diag = 4.0 + np.abs(rng.normal(size=n))
        rhs = rng.normal(size=n)
        dense = np.diag(diag) + np.diag(sub, -1) + np.diag(sup, 1)
        np.testing.assert_allclose(
            solve_tridiagonal(sub, diag, sup, rhs), np.linalg.solve(dense, rhs), atol=1e-12
        )

    def test_complex_right_hand_side(self):
        diag = np.full(5, 3.0 + 1.0j)
        rhs = np.arange(5) * (1.0 - 2.0j)
        solution = solve_tridiagonal(np.ones(4), diag, np.ones(4), rhs)
        dense = np.diag(diag) + np.diag(np.ones(4), -1) + np.diag(np.ones(4), 1)
        np.testing.assert_allclose(dense @ solution, rhs, atol=1e-12)

    def test_singular_system_raises(self):
        with pytest.raises(SingularMatrixError):
            solve_tridiagonal(np.ones(2), np.zeros(3), np.zeros(2), np.ones(3))

    def test_length_mismatch_raises(self):
        with pytest.raises(ParameterError):
            solve_tridiagonal(np.ones(5), np.ones(3), np.ones(2), np.ones(3))


class TestQuadrature:
    """Test quad_weighted and sphere_area."""

    def test_zero_function(self):
        mesh = Mesh.uniform(101)
        assert quad_weighted(np.zeros(101), mesh, 3) == 0.0

    def test_constant_times_r(self):
        mesh = Mesh.uniform(101)
        assert quad_weighted(np.ones(101), mesh, 1) == pytest.approx(1.5, abs=1e-14)

    def test_quartic_integrand(self):
        """r^2 * r^2 over [1, 2] is 31/5; Simpson error is O(h^4)."""
        mesh = Mesh.uniform(201)
        assert quad_weighted(mesh.nodes ** 2, mesh, 2) == pytest.approx(6.2, abs=1e-9)

    def test_odd_interval_count(self):
        """An even node count is resampled and stays exact for cubics."""
        mesh = Mesh.uniform(100)
        assert quad_weighted(mesh.nodes ** 2, mesh, 1) == pytest.approx(3.75, abs=1e-12)

    def test_negative_exponent_rejected(self):
        mesh = Mesh.uniform(21)
        with pytest.raises(ParameterError):
            quad_weighted(np.ones(21), mesh, -1)

    def test_sphere_area(self):
        assert sphere_area(2) == pytest.approx(2.0 * math.pi)
        assert sphere_area(3) == pytest.approx(4.0 * math.pi)


class TestFindRoot:
    """Test find_root."""

    @pytest.mark.parametrize("f, lo, hi, expected", [
        (lambda x: x - 1.0, 0.0, 2.0, 1.0),
        (lambda x: x * x - 2.0, 1.0, 2.0, math.sqrt(2.0)),
        (math.sin, 3.0, 4.0, math.pi),
    ])
    def test_known_roots(self, f, lo, hi, expected):
        root = find_root(f, RootBracket.around(f, lo, hi), 1e-12)
        assert root == pytest.approx(expected, abs=1e-11)
        assert lo <= root <= hi

    def test_bracket_without_sign_change(self):
        with pytest.raises(ParameterError):
            RootBracket.around(lambda x: x * x + 1.0, -1.0, 1.0)

    def test_bracket_order(self):
        with pytest.raises(ParameterError):
            RootBracket(2.0, 1.0, -1.0, 1.0)


class TestPowerLaw:
    """Test fit_powerlaw."""

    def test_exact_power_law(self):
        fit = fit_powerlaw([(x, x ** 1.5) for x in (1.0, 2.0, 4.0, 8.0)])
        assert fit.exponent == pytest.approx(1.5, abs=1e-12)
        assert fit.prefactor == pytest.approx(1.0, abs=1e-12)
        assert fit.residual == pytest.approx(0.0, abs=1e-12)

    def test_prefactor(self):
        fit = fit_powerlaw([(x, 4.0 * x ** 0.5) for x in (100.0, 400.0, 1600.0)])
        assert fit.exponent == pytest.approx(0.5, abs=1e-12)
        assert fit.prefactor == pytest.approx(4.0, rel=1e-12)

    def test_perturbed_data(self):
        xs = np.geomspace(1.0, 1e4, 20)
        fit = fit_powerlaw([(x, x ** (-1 / 6) * (1.0 + 0.01 * math.sin(math.log(x)))) for x in xs])
        assert fit.exponent == pytest.approx(-1 / 6, abs=0.01)

    def test_invalid_data(self):
        with pytest.raises(ParameterError):
            fit_powerlaw([(1.0, 1.0), (2.0, 2.0)])
        with pytest.raises(ParameterError):
            fit_powerlaw([(1.0, 1.0), (2.0, -2.0), (3.0, 3.0)])
        with pytest.raises(ParameterError):
            fit_powerlaw([(1.0, 1.0), (1.0, 2.0), (3.0, 3.0)])


class TestRadialOperator:
    """Test the conservative radial operator."""

    def test_symmetric_form(self):
        """<S f, g> equals the Dirichlet form for zero-endpoint vectors."""
        mesh = Mesh.uniform(41)
        op = radial_operator(mesh, 3)
        r = mesh.nodes
        f = np.sin(math.pi * (r - 1.0))
        g = (r - 1.0) * (2.0 - r)
        lhs = np.sum(op.apply_symmetric(f) * g[1:-1])
        assert lhs == pytest.approx(float(op.dirichlet_form(f, g)), rel=1e-12)

    def test_lowest_eigenvalue_three_dimensions(self):
        """Discrete eigenvalue approaches pi^2 at second order."""
        coarse = radial_operator(Mesh.uniform(201), 3).lowest_eigenvalue()
        fine = radial_operator(Mesh.uniform(401), 3).lowest_eigenvalue()
        assert abs(fine - math.pi ** 2) < abs(coarse - math.pi ** 2)
        assert fine == pytest.approx(math.pi ** 2, rel=1e-4)

    def test_weights_integrate_radial_measure(self):
        mesh = Mesh.uniform(201)
        op = radial_operator(mesh, 2)
        # interior weights omit the two half cells at r = 1 and r = 2
        h = 1.0 / 200
        assert float(np.sum(op.weights)) == pytest.approx(1.5 - 1.5 * h, abs=1e-12)

    def test_mesh_validation(self):
        with pytest.raises(ParameterError):
            Mesh(np.linspace(1.0, 2.0, 8))
        with pytest.raises(ParameterError):
            Mesh(np.linspace(0.5, 2.0, 40))
