import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import cap_point, random_interior_points
from sphaerica.geometry import SphericalCap, boundary_nodes, unit_vector
from sphaerica.harmonics import (
    InnerHarmonicIndex,
    ShCoefficients,
    coefficients_from_entries,
    inner_harmonic_eval,
    inner_harmonic_grad,
    sh_eval,
    sh_grad_eval,
    synth_field,
)
from sphaerica.quadrature import (
    FieldSamples,
    build_boundary_grid,
    build_cap_grid,
    build_sphere_grid,
    integrate,
    mean_value,
    sample,
)
from sphaerica.solvers import (
    beltrami_fd,
    default_scale,
    dirichlet_solve_cap,
    invert_gradient,
    max_principle_check,
    mvp_residual,
    neumann_solve_cap,
    poisson_solve_cap,
    surface_potential,
)

CAP = SphericalCap(unit_vector([0.2, 0.0, 1.0]), 0.9)


def laplacian_coeffs(c: ShCoefficients) -> ShCoefficients:
    degrees = np.arange(c.l_max + 1, dtype=float)
    return ShCoefficients(c.l_max, c.coeffs * (-degrees * (degrees + 1.0))[:, None])


class TestSurfacePotential:
    def test_annihilates_constants_on_sphere(self):
        grid = build_sphere_grid(32, 64)
        ones = sample(grid, lambda p: np.ones(len(p)))
        value = surface_potential(ones, grid.nodes[100], scale=12, xi_values=1.0)
        assert abs(value) < 1e-14

    def test_spectral_inversion_on_sphere(self, rng):
        grid = build_sphere_grid(48, 96)
        c = coefficients_from_entries(2, {(2, 2): 1.0})
        h = sample(grid, lambda p: sh_eval(c, p))
        idx = rng.choice(len(grid), 24, p=grid.weights / (4 * np.pi), replace=False)
        pts = grid.nodes[idx]
        values = surface_potential(h, pts, scale=12, xi_values=h.values[idx])
        assert np.abs(values + sh_eval(c, pts) / 6.0).max() < 5e-6

    def test_cap_exterior_laplacian_identity(self):
        grid = build_cap_grid(CAP, 48, 96)
        c = synth_field(5, 1, 8)
        h = sample(grid, lambda p: sh_eval(c, p))
        total = integrate(grid, h)
        outside = -CAP.center
        fd = beltrami_fd(
            lambda p: surface_potential(h, p, scale=10), outside, h=1e-3
        )
        assert fd == pytest.approx(-total / (4 * np.pi), abs=1e-3)


class TestBeltramiProbe:
    @pytest.mark.parametrize("n", [1, 2, 4, 8])
    def test_eigenvalues(self, n):
        c = coefficients_from_entries(n, {(n, n): 1.0})
        xi = unit_vector([0.3, -0.4, 0.85])
        value = sh_eval(c, xi)
        fd = beltrami_fd(lambda p: sh_eval(c, p), xi, 1e-3)
        assert abs(fd + n * (n + 1) * value) < 1e-3 * abs(n * (n + 1) * value)

    def test_constant_and_linear(self):
        xi = unit_vector([0.1, 0.8, 0.5])
        assert abs(beltrami_fd(lambda p: np.full(len(p), 3.0), xi, 1e-3)) < 1e-8
        a = unit_vector([0.5, -1.0, 0.2])
        fd = beltrami_fd(lambda p: p @ a, xi, 1e-3)
        assert fd == pytest.approx(-2.0 * float(xi @ a), abs=1e-4)

    def test_step_bounds(self):
        with pytest.raises(ValueError):
            beltrami_fd(lambda p: np.ones(len(p)), unit_vector([0, 0, 1.0]), 1.0)


class TestPoisson:
    def test_zero_rhs(self):
        grid = build_cap_grid(CAP, 16, 32)
        zeros = sample(grid, lambda p: np.zeros(len(p)))
        xi = cap_point(CAP, 0.5, 1.0)
        assert poisson_solve_cap(CAP, zeros, -CAP.center, xi) == 0.0

    def test_mean_free_rhs_reduces_to_potential(self):
        grid = build_cap_grid(CAP, 24, 48)
        c = coefficients_from_entries(3, {(3, 3): 1.0})
        raw = sample(grid, lambda p: sh_eval(c, p))
        shifted = FieldSamples(grid, raw.values - mean_value(raw))
        xi = cap_point(CAP, 0.4, 2.0)
        a = poisson_solve_cap(CAP, shifted, -CAP.center, xi, scale=8)
        b = surface_potential(shifted, xi, scale=8)
        assert a == pytest.approx(b, abs=1e-12)

    def test_interior_point_required_for_xi_bar(self):
        grid = build_cap_grid(CAP, 8, 16)
        zeros = sample(grid, lambda p: np.zeros(len(p)))
        with pytest.raises(ValueError):
            poisson_solve_cap(CAP, zeros, CAP.center, CAP.center)

    def test_fd_laplacian_matches_rhs(self, rng):
        # matched regime: FD step, regularization ball, and node spacing all
        # comparable; robust accuracy is a few percent of the data scale
        grid = build_cap_grid(CAP, 96, 192)
        c = coefficients_from_entries(2, {(2, 1): 1.0})
        lap = laplacian_coeffs(c)
        h_samples = sample(grid, lambda p: sh_eval(lap, p))
        worst = 0.0
        for _ in range(6):
            xi = cap_point(CAP, 0.7 * rng.random(), rng.uniform(0, 2 * np.pi))
            fd = beltrami_fd(
                lambda p: poisson_solve_cap(CAP, h_samples, -CAP.center, p, scale=7),
                xi,
                h=8e-3,
            )
            worst = max(worst, abs(fd - sh_eval(lap, xi)))
        assert worst < 5e-2


class TestDirichlet:
    def test_constant_data(self):
        xi = random_interior_points(CAP, np.random.default_rng(0), 10)
        vals = dirichlet_solve_cap(CAP, lambda p: np.ones(len(p)), xi, m=256)
        assert np.abs(vals - 1.0).max() < 1e-12

    def test_inner_harmonic_traces(self, rng):
        idx = InnerHarmonicIndex(CAP, 2, 1)
        pts = random_interior_points(CAP, rng, 30, max_fraction=0.9)
        vals = dirichlet_solve_cap(
            CAP, lambda p: inner_harmonic_eval(idx, p), pts, m=512
        )
        assert np.abs(vals - inner_harmonic_eval(idx, pts)).max() < 1e-8

    def test_center_value_is_boundary_average(self):
        idx = InnerHarmonicIndex(CAP, 3, 2)
        grid = build_boundary_grid(CAP, 256)
        average = float(
            np.sum(grid.weights * inner_harmonic_eval(idx, grid.nodes))
        ) / (2 * np.pi * CAP.boundary_sine)
        value = dirichlet_solve_cap(
            CAP, lambda p: inner_harmonic_eval(idx, p), CAP.center, m=256
        )
        assert value == pytest.approx(average, abs=1e-13)

    def test_rejects_near_boundary_points(self):
        near = cap_point(CAP, 1.0 - 1e-9, 0.0)
        with pytest.raises(ValueError):
            dirichlet_solve_cap(CAP, lambda p: np.ones(len(p)), near)


class TestNeumann:
    def test_zero_data_returns_mean(self):
        xi = cap_point(CAP, 0.3, 0.2)
        value = neumann_solve_cap(CAP, lambda p: np.zeros(len(p)), 2.5, xi)
        assert value == pytest.approx(2.5, abs=1e-15)

    def test_compatibility_enforced(self):
        with pytest.raises(ValueError):
            neumann_solve_cap(CAP, lambda p: np.ones(len(p)), 0.0, CAP.center)

    def test_mean_shift_linearity(self):
        idx = InnerHarmonicIndex(CAP, 1, 1)
        grid = build_boundary_grid(CAP, 128)
        data = np.sum(grid.normals * inner_harmonic_grad(idx, grid.nodes), axis=1)
        xi = cap_point(CAP, 0.35, 2.0)
        base = neumann_solve_cap(CAP, FieldSamples(grid, data), 0.0, xi)
        shifted = neumann_solve_cap(CAP, FieldSamples(grid, data), 1.25, xi)
        assert shifted - base == pytest.approx(1.25, abs=1e-14)

    def test_inner_harmonic_round_trip(self, rng):
        idx = InnerHarmonicIndex(CAP, 1, 1)
        grid = build_boundary_grid(CAP, 512)
        data = np.sum(grid.normals * inner_harmonic_grad(idx, grid.nodes), axis=1)
        area_grid = build_cap_grid(CAP, 48, 96)
        mean = mean_value(sample(area_grid, lambda p: inner_harmonic_eval(idx, p)))
        pts = random_interior_points(CAP, rng, 20)
        vals = neumann_solve_cap(CAP, FieldSamples(grid, data), mean, pts)
        assert np.abs(vals - inner_harmonic_eval(idx, pts)).max() < 1e-7


class TestInvertGradient:
    def _setup(self, nt=64, nphi=128):
        grid = build_cap_grid(CAP, nt, nphi)
        a = unit_vector([0.3, -1.0, 0.4])
        grad = a[None, :] - (grid.nodes @ a)[:, None] * grid.nodes
        samples = FieldSamples(grid, grad, tangential=True)
        truth = grid.nodes @ a
        cap_mean = float(np.sum(grid.weights * truth) / np.sum(grid.weights))
        return grid, samples, a, cap_mean

    def test_round_trip_and_scale_improvement(self, rng):
        grid, samples, a, cap_mean = self._setup()
        inner = SphericalCap(CAP.center, 0.8 * CAP.radius)
        keep = np.flatnonzero(inner.contains(grid.nodes))
        sel = rng.choice(keep, 150, replace=False, p=grid.weights[keep] / grid.weights[keep].sum())
        pts = grid.nodes[sel]
        errors = {}
        for scale in (8, 10):
            rec = invert_gradient(samples, "grad", scale, pts)
            diff = rec - (pts @ a - cap_mean)
            diff -= diff.mean()
            errors[scale] = np.abs(diff).max()
        assert errors[10] < 2e-3
        assert errors[10] < errors[8]

    def test_curl_route_matches(self, rng):
        grid, samples, a, cap_mean = self._setup(48, 96)
        curl_field = FieldSamples(
            grid, np.cross(grid.nodes, samples.values), tangential=True
        )
        pts = random_interior_points(CAP, rng, 40, max_fraction=0.75)
        rec = invert_gradient(curl_field, "curl", 9, pts)
        diff = rec - (pts @ a - cap_mean)
        diff -= diff.mean()
        assert np.abs(diff).max() < 5e-3

    def test_zero_field(self):
        grid = build_cap_grid(CAP, 12, 24)
        zeros = FieldSamples(grid, np.zeros((len(grid), 3)), tangential=True)
        assert invert_gradient(zeros, "grad", 8, CAP.center) == 0.0

    def test_requires_tangential_samples(self):
        grid = build_cap_grid(CAP, 8, 16)
        radial = FieldSamples(grid, grid.nodes.copy())
        with pytest.raises(ValueError):
            invert_gradient(radial, "grad", 8, CAP.center)

    def test_default_scale_tracks_resolution(self):
        coarse = build_cap_grid(CAP, 30, 60)
        fine = build_cap_grid(CAP, 120, 240)
        assert default_scale(fine) == default_scale(coarse) + 2


class TestMeanValueAndMaximum:
    def test_constants_satisfy_both_properties(self):
        probe = SphericalCap(cap_point(CAP, 0.4, 0.3), 0.07)
        for which in ("I", "II"):
            residual = mvp_residual(
                lambda p: np.full(len(p), 1.7), probe, which
            )
            assert residual < 1e-12

    def test_harmonic_and_negative_control(self, rng):
        idx = InnerHarmonicIndex(CAP, 3, 1)
        a = unit_vector([1.0, 0.4, -0.2])
        for _ in range(5):
            center = cap_point(CAP, 0.7 * rng.random(), rng.uniform(0, 2 * np.pi))
            probe = SphericalCap(center, 0.05)
            for which in ("I", "II"):
                assert (
                    mvp_residual(lambda p: inner_harmonic_eval(idx, p), probe, which)
                    < 1e-10
                )
            assert mvp_residual(lambda p: (p @ a) ** 2, probe, "II") > 1e-6

    def test_max_principle(self):
        idx = InnerHarmonicIndex(CAP, 4, 2)
        inner = SphericalCap(CAP.center, 0.7 * CAP.radius)
        assert max_principle_check(lambda p: inner_harmonic_eval(idx, p), inner)
        assert max_principle_check(lambda p: np.full(len(p), 2.0), inner)


class TestGreenFormulas:
    def test_divergence_formula(self):
        # f = grad U: area integral of the Laplacian against boundary flux
        c = synth_field(9, 1, 6)
        lap = laplacian_coeffs(c)
        grid = build_cap_grid(CAP, 64, 128)
        bgrid = build_boundary_grid(CAP, 512)
        area = integrate(grid, sample(grid, lambda p: sh_eval(lap, p)))
        flux = float(
            np.sum(
                bgrid.weights
                * np.sum(bgrid.normals * sh_grad_eval(c, bgrid.nodes), axis=1)
            )
        )
        assert area == pytest.approx(flux, abs=1e-8)

    def test_curl_formula(self):
        # f = curl-grad U: area Laplacian against tangential circulation
        c = synth_field(10, 1, 6)
        lap = laplacian_coeffs(c)
        grid = build_cap_grid(CAP, 64, 128)
        bgrid = build_boundary_grid(CAP, 512)
        area = integrate(grid, sample(grid, lambda p: sh_eval(lap, p)))
        curl = np.cross(bgrid.nodes, sh_grad_eval(c, bgrid.nodes))
        circulation = float(
            np.sum(bgrid.weights * np.sum(bgrid.tangents * curl, axis=1))
        )
        assert area == pytest.approx(circulation, abs=1e-8)

    def test_symmetric_formula(self):
        low_f = synth_field(11, 1, 5)
        low_h = synth_field(12, 1, 5)
        lap_f, lap_h = laplacian_coeffs(low_f), laplacian_coeffs(low_h)
        grid = build_cap_grid(CAP, 64, 128)
        bgrid = build_boundary_grid(CAP, 512)
        lhs = integrate(
            grid,
            sample(
                grid,
                lambda p: sh_eval(low_f, p) * sh_eval(lap_h, p)
                - sh_eval(low_h, p) * sh_eval(lap_f, p),
            ),
        )
        normal_f = np.sum(bgrid.normals * sh_grad_eval(low_f, bgrid.nodes), axis=1)
        normal_h = np.sum(bgrid.normals * sh_grad_eval(low_h, bgrid.nodes), axis=1)
        rhs = float(
            np.sum(
                bgrid.weights
                * (
                    sh_eval(low_f, bgrid.nodes) * normal_h
                    - sh_eval(low_h, bgrid.nodes) * normal_f
                )
            )
        )
        assert lhs == pytest.approx(rhs, abs=1e-7)

    def test_interior_representation(self, rng):
        # four-term representation reproduces interior values
        c = synth_field(13, 1, 5)
        lap = laplacian_coeffs(c)
        grid = build_cap_grid(CAP, 64, 128)
        bgrid = build_boundary_grid(CAP, 512)
        lap_samples = sample(grid, lambda p: sh_eval(lap, p))
        mean_term = integrate(grid, sample(grid, lambda p: sh_eval(c, p))) / (
            4 * np.pi
        )
        from sphaerica.kernels import fundamental_deriv, _fundamental_many

        for _ in range(4):
            xi = cap_point(CAP, 0.7 * rng.random(), rng.uniform(0, 2 * np.pi))
            volume = surface_potential(lap_samples, xi, scale=12)
            t_b = bgrid.nodes @ xi
            double = float(
                np.sum(
                    bgrid.weights
                    * (-(bgrid.normals @ xi) / (4 * np.pi * (1.0 - t_b)))
                    * sh_eval(c, bgrid.nodes)
                )
            )
            single = float(
                np.sum(
                    bgrid.weights
                    * _fundamental_many(t_b)
                    * np.sum(bgrid.normals * sh_grad_eval(c, bgrid.nodes), axis=1)
                )
            )
            rep = mean_term + volume + double - single
            assert rep == pytest.approx(sh_eval(c, xi), abs=1e-4)
