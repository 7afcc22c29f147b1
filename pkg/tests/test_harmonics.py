import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import cap_point, fd_tangent_derivative, tangent_basis
from sphaerica.geometry import (
    SphericalCap,
    boundary_nodes,
    stereographic_project,
    unit_vector,
)
from sphaerica.harmonics import (
    InnerHarmonicIndex,
    ShCoefficients,
    coefficients_from_entries,
    inner_harmonic_eval,
    inner_harmonic_grad,
    log_series,
    sh_eval,
    sh_grad_eval,
    synth_field,
)
from sphaerica.quadrature import build_boundary_grid, build_sphere_grid
from sphaerica.solvers import mvp_residual


def test_constant_harmonic_value():
    c = coefficients_from_entries(0, {(0, 1): 1.0})
    xi = unit_vector([0.3, -0.5, 0.8])
    assert sh_eval(c, xi) == pytest.approx(1.0 / np.sqrt(4 * np.pi), abs=1e-15)


def test_degree_one_parity():
    c = coefficients_from_entries(1, {(1, 3): 1.0})
    xi = unit_vector([0.4, 0.1, 0.9])
    assert sh_eval(c, xi) == pytest.approx(-sh_eval(c, -xi), abs=1e-14)


def test_orthonormality():
    grid = build_sphere_grid(24, 48)
    entries = [(n, j) for n in range(0, 9) for j in (1, n + 1, 2 * n + 1)]
    entries = sorted(set(entries))
    basis = {
        (n, j): sh_eval(coefficients_from_entries(n, {(n, j): 1.0}), grid.nodes)
        for n, j in entries
    }
    for i, (n, j) in enumerate(entries):
        for m, k in entries[i:]:
            inner = float(np.sum(grid.weights * basis[(n, j)] * basis[(m, k)]))
            expected = 1.0 if (n, j) == (m, k) else 0.0
            assert inner == pytest.approx(expected, abs=1e-12)


def test_gradient_of_linear_function():
    # x . a expanded in degree-1 harmonics; grad must equal a - (x.a) x
    a = np.array([0.7, -0.3, 0.55])
    scale = np.sqrt(4 * np.pi / 3)
    c = coefficients_from_entries(
        1, {(1, 1): scale * a[1], (1, 2): scale * a[2], (1, 3): scale * a[0]}
    )
    xi = unit_vector([0.2, 0.9, -0.3])
    assert sh_eval(c, xi) == pytest.approx(float(xi @ a), abs=1e-14)
    grad = sh_grad_eval(c, xi)
    assert_allclose(grad, a - (xi @ a) * xi, atol=1e-13)


def test_gradient_matches_finite_differences(rng):
    c = synth_field(11, 0, 10, 1.0)
    for _ in range(20):
        xi = unit_vector(rng.normal(size=3))
        grad = sh_grad_eval(c, xi)
        assert abs(float(grad @ xi)) < 1e-12
        for direction in tangent_basis(xi):
            fd = fd_tangent_derivative(lambda p: sh_eval(c, p), xi, direction)
            assert fd == pytest.approx(float(grad @ direction), abs=1e-6)


def test_constant_field_has_zero_gradient():
    c = coefficients_from_entries(0, {(0, 1): 3.0})
    assert_allclose(sh_grad_eval(c, unit_vector([0.1, 0.2, 0.97])), 0.0, atol=1e-15)


def test_synth_field_determinism_and_bounds():
    a = synth_field(42, 3, 25, 2.0)
    b = synth_field(42, 3, 25, 2.0)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert a.seed == 42
    assert np.abs(a.coeffs).max() <= 1.0
    assert np.all(a.coeffs[:3] == 0.0)
    assert np.isfinite(a.coeffs).all()
    with pytest.raises(ValueError):
        synth_field(1, 5, 3)


def test_coefficients_validation():
    with pytest.raises(ValueError):
        ShCoefficients(2, np.ones((2, 5)))
    with pytest.raises(ValueError):
        coefficients_from_entries(2, {(2, 6): 1.0})
    with pytest.raises(ValueError):
        ShCoefficients(2, np.full((3, 5), np.nan))


CAP = SphericalCap(unit_vector([0.15, 0.1, 0.98]), 0.9)


def test_inner_harmonic_special_values():
    R = (CAP.radius * (2 - CAP.radius)) ** 0.25
    idx0 = InnerHarmonicIndex(CAP, 0, 1)
    xi = cap_point(CAP, 0.62, 2.1)
    assert inner_harmonic_eval(idx0, xi) == pytest.approx(
        1.0 / (R * np.sqrt(np.pi)), abs=1e-14
    )
    idx1 = InnerHarmonicIndex(CAP, 1, 1)
    assert inner_harmonic_eval(idx1, CAP.center) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        InnerHarmonicIndex(CAP, 0, 2)


@pytest.mark.parametrize("degree,order", [(1, 1), (3, 1), (5, 2)])
def test_inner_harmonics_are_harmonic(degree, order, rng):
    idx = InnerHarmonicIndex(CAP, degree, order)
    for _ in range(5):
        center = cap_point(CAP, 0.75 * rng.random(), rng.uniform(0, 2 * np.pi))
        probe = SphericalCap(center, 0.05)
        residual = mvp_residual(lambda p: inner_harmonic_eval(idx, p), probe, "II")
        assert residual < 1e-10


def test_inner_harmonic_gradient_fd(rng):
    idx = InnerHarmonicIndex(CAP, 3, 2)
    for _ in range(20):
        xi = cap_point(CAP, 0.85 * rng.random(), rng.uniform(0, 2 * np.pi))
        grad = inner_harmonic_grad(idx, xi)
        assert abs(float(grad @ xi)) < 1e-12
        for direction in tangent_basis(xi):
            fd = fd_tangent_derivative(
                lambda p: inner_harmonic_eval(idx, p), xi, direction
            )
            assert fd == pytest.approx(float(grad @ direction), abs=1e-6)


def test_inner_harmonic_gradient_vanishes_at_center_for_high_degree():
    idx = InnerHarmonicIndex(CAP, 3, 1)
    assert_allclose(inner_harmonic_grad(idx, CAP.center), 0.0, atol=1e-14)


def test_tangential_derivative_closed_loop():
    # the derivative of any harmonic along the boundary integrates to zero
    idx = InnerHarmonicIndex(CAP, 1, 1)
    grid = build_boundary_grid(CAP, 64)
    tangential = np.sum(grid.tangents * inner_harmonic_grad(idx, grid.nodes), axis=1)
    assert abs(np.sum(grid.weights * tangential)) < 1e-13


def _chart_pair(zeta, rho, t_xi, phi_xi, t_eta, phi_eta):
    cap = SphericalCap(zeta, rho)
    xi = cap_point(cap, t_xi, phi_xi)
    eta = cap_point(SphericalCap(zeta, 1.999), t_eta, phi_eta)
    return xi, eta


def test_log_series_empty_sum_is_log_prefix():
    zeta = unit_vector([0.1, 0.2, 0.95])
    xi, eta = _chart_pair(zeta, 0.8, 0.3, 1.0, 0.8, 2.5)
    value = log_series(xi, eta, zeta, 0.8, 0)
    expected = (
        -np.log(2.0) + np.log(1 + xi @ zeta) + np.log(1 - eta @ zeta)
    )
    assert value == pytest.approx(expected, abs=1e-15)


def test_log_series_converges_with_expected_ratio():
    zeta = unit_vector([0.1, 0.2, 0.95])
    xi, eta = _chart_pair(zeta, 0.8, 0.35, 1.1, 0.75, 2.8)
    truth = np.log(1.0 - xi @ eta)
    sigma = np.linalg.norm(stereographic_project(zeta, xi)) / np.linalg.norm(
        stereographic_project(zeta, eta)
    )
    errors = [abs(log_series(xi, eta, zeta, 0.8, n) - truth) for n in (5, 10, 20, 40)]
    assert errors[0] > errors[1] > errors[2] > errors[3]
    fitted = (errors[1] / errors[0]) ** (1.0 / 5.0)
    assert fitted == pytest.approx(sigma, rel=0.2)


def test_log_series_precondition():
    zeta = unit_vector([0.0, 0.0, 1.0])
    xi, eta = _chart_pair(zeta, 0.8, 0.9, 0.3, 0.2, 0.3)
    with pytest.raises(ValueError):
        log_series(xi, eta, zeta, 0.8, 5)
