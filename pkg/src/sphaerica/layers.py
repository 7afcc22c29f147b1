"""Curve potentials on cap boundaries and their boundary integral equations.

The single layer integrates the fundamental solution against a boundary
density, the double layer its boundary-normal derivative. On cap boundaries
both admit closed kernel structure: the double-layer kernel restricted to
the curve is one constant (geodesic curvature over 4 pi), which makes the
second-kind Dirichlet equation a rank-one perturbation of the identity, and
the single-layer kernel depends on the parameter difference only, which
makes the Neumann equation circulant and solvable by FFT after splitting off
the periodic log singularity with spectral quadrature weights.

jump_probe measures the classical limit and jump behavior of the potentials
across the boundary by evaluating at points displaced along the boundary
normal and extrapolating the displacement to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SphericalCap
from .kernels import KIND_FUNDAMENTAL, KernelSpec, kernel_value_matrix
from .quadrature import KIND_BOUNDARY, FieldSamples, QuadratureGrid

FOUR_PI = 4.0 * np.pi
_MEAN_FREE_TOL = 1e-10
_COMPAT_TOL = 1e-8


@dataclass(frozen=True)
class DensitySamples:
    """Boundary density values co-indexed with a boundary grid."""

    grid: QuadratureGrid
    values: np.ndarray
    mean_free: bool = False

    def __post_init__(self):
        if self.grid.kind != KIND_BOUNDARY:
            raise ValueError("densities live on boundary grids")
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.grid),):
            raise ValueError("density shape does not match its grid")
        if self.mean_free:
            total = abs(float(np.sum(self.grid.weights * values)))
            if total >= _MEAN_FREE_TOL:
                raise ValueError(f"density marked mean-free integrates to {total:.2e}")
        values.setflags(write=False)


def geodesic_curvature(cap: SphericalCap) -> float:
    """Geodesic curvature of the cap boundary, (1 - rho)/sqrt(rho (2 - rho))."""
    return (1.0 - cap.radius) / cap.boundary_sine


def single_layer(density: DensitySamples, xi) -> float | np.ndarray:
    """Boundary integral of G(xi . eta) against the density.

    Plain trapezoidal quadrature; accuracy degrades within about one node
    spacing of the curve and the kernel blows up on node collision.
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi[None, :] if single else xi
    grid = density.grid
    k = kernel_value_matrix(KernelSpec(KIND_FUNDAMENTAL), pts, grid.nodes)
    out = np.sum(grid.weights[None, :] * k * density.values[None, :], axis=1)
    return float(out[0]) if single else out


def _dlp_kernel(pts: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """Double-layer kernel -(nu(eta) . xi) / (4 pi (1 - xi . eta)), (P, N)."""
    t = pts @ grid.nodes.T
    if np.any(1.0 - t < 1e-14):
        raise ValueError("double layer evaluated on a boundary node")
    nu_dot = pts @ grid.normals.T
    return -nu_dot / (FOUR_PI * (1.0 - t))


def double_layer(density: DensitySamples, xi) -> float | np.ndarray:
    """Boundary integral of the normal-derivative kernel against the density."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi[None, :] if single else xi
    grid = density.grid
    k = _dlp_kernel(pts, grid)
    out = np.sum(grid.weights[None, :] * k * density.values[None, :], axis=1)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class JumpReport:
    """Across-boundary differences of a potential at decreasing displacements."""

    taus: np.ndarray
    outside: np.ndarray
    inside: np.ndarray
    differences: np.ndarray
    jump: float
    outside_limit: float
    inside_limit: float


def _extrapolate(taus: np.ndarray, values: np.ndarray) -> float:
    """Limit tau -> 0 from the last three (tau, value) pairs via a quadratic."""
    t = taus[-3:]
    v = values[-3:]
    vand = np.vander(t, 3, increasing=True)  # columns 1, tau, tau^2
    coef = np.linalg.solve(vand, v)
    return float(coef[0])


def jump_probe(
    density: DensitySamples,
    boundary_index: int,
    taus,
    potential: str = "double",
    quantity: str = "value",
) -> JumpReport:
    """Measure the boundary jump of a layer potential at one boundary node.

    Evaluation points are (xi +- tau nu)/sqrt(1 + tau^2), i.e. rotations of
    the node xi by arctan(tau) along its normal great circle. quantity
    "normal-derivative" differentiates along that circle with a centered
    step tau/16. The reported jump extrapolates the last three displacements
    to zero with a quadratic fit; convergence in tau is first order, so the
    extrapolation is heuristic rather than certified.
    """
    taus = np.asarray(sorted(np.atleast_1d(taus), reverse=True), dtype=float)
    if taus.size < 3:
        raise ValueError("need at least three displacements to extrapolate")
    grid = density.grid
    floor = 10.0 * 2.0 * np.pi * grid.cap.boundary_sine / len(grid)
    if taus.min() < floor:
        raise ValueError(
            f"displacement {taus.min():.3e} below the resolution floor {floor:.3e};"
            " refine the boundary grid"
        )
    xi = grid.nodes[boundary_index]
    nu = grid.normals[boundary_index]
    if potential == "double":
        evaluate = lambda pts: double_layer(density, pts)
    elif potential == "single":
        evaluate = lambda pts: single_layer(density, pts)
    else:
        raise ValueError("potential must be 'single' or 'double'")

    def along(alphas: np.ndarray) -> np.ndarray:
        return np.outer(np.cos(alphas), xi) + np.outer(np.sin(alphas), nu)

    alphas = np.arctan(taus)
    if quantity == "value":
        outside = evaluate(along(alphas))
        inside = evaluate(along(-alphas))
    elif quantity == "normal-derivative":
        h = alphas / 16.0
        outside = (evaluate(along(alphas + h)) - evaluate(along(alphas - h))) / (
            2.0 * h
        )
        inside = (evaluate(along(-alphas + h)) - evaluate(along(-alphas - h))) / (
            2.0 * h
        )
    else:
        raise ValueError("quantity must be 'value' or 'normal-derivative'")
    diffs = outside - inside
    return JumpReport(
        taus=taus,
        outside=outside,
        inside=inside,
        differences=diffs,
        jump=_extrapolate(taus, diffs),
        outside_limit=_extrapolate(taus, outside),
        inside_limit=_extrapolate(taus, inside),
    )


@dataclass(frozen=True)
class BoundarySolution:
    """Density solving a boundary integral equation, plus an interior evaluator."""

    density: DensitySamples
    equation: str

    def __call__(self, xi):
        if self.equation == "dirichlet":
            return double_layer(self.density, xi)
        return single_layer(self.density, xi)


def solve_idp(grid: QuadratureGrid, boundary_values) -> BoundarySolution:
    """Second-kind boundary equation of the Dirichlet problem on a cap.

    On the boundary the double-layer kernel is the constant kappa_g / 4 pi,
    so the collocation system (I/2 + rank-one) solves in closed form:
    Q = 2 F - (kappa_g / 2 pi) * (2 integral(F) / (2 - rho)).
    """
    f = _boundary_values(grid, boundary_values)
    cap = grid.cap
    denom = 2.0 - cap.radius
    if not denom > 1e-12:
        raise ValueError("degenerate cap radius")
    total = float(np.sum(grid.weights * f))
    charge = 2.0 * total / denom
    q = 2.0 * f - geodesic_curvature(cap) / (2.0 * np.pi) * charge
    return BoundarySolution(DensitySamples(grid, q), "dirichlet")


def _log_quadrature_weights(m: int) -> np.ndarray:
    """Spectral weights for int_0^{2pi} ln(4 sin^2(t/2)) f(t) dt on m nodes.

    Exact for trigonometric polynomials of degree below m/2; the weights sum
    to zero, matching the vanishing mean of the periodic log kernel.
    """
    if m % 2 != 0:
        raise ValueError("log quadrature needs an even node count")
    j = np.arange(m)
    t = 2.0 * np.pi * j / m
    k = np.arange(1, m // 2)
    weights = -(4.0 * np.pi / m) * np.sum(
        np.cos(np.outer(t, k)) / k[None, :], axis=1
    )
    weights -= (4.0 * np.pi / m**2) * np.cos(0.5 * m * t)
    return weights


def solve_inp(
    grid: QuadratureGrid, boundary_values, compat_tol: float = _COMPAT_TOL
) -> BoundarySolution:
    """Second-kind boundary equation of the Neumann problem on a cap.

    Collocating the normal derivative of the single-layer ansatz gives
    F = K[Q] - Q/2 with the observation-side normal-derivative kernel K. On
    cap boundaries K is the constant kappa_g / 4 pi, so the collocation
    matrix is the circulant (rank-one minus identity/2) and the mean-free
    branch solves in closed form as Q = -2 F; the zero mode is pinned by the
    solvability condition. The density must be mean-free for the single
    layer to stay harmonic, so the data is required to integrate to zero.
    """
    f = _boundary_values(grid, boundary_values)
    total = float(np.sum(grid.weights * f))
    if abs(total) > compat_tol:
        raise ValueError(
            f"Neumann boundary data violates solvability: integral {total:.3e}"
        )
    q = -2.0 * (f - total / float(np.sum(grid.weights)))
    return BoundarySolution(DensitySamples(grid, q, mean_free=True), "neumann")


def single_layer_on_boundary(density: DensitySamples) -> np.ndarray:
    """Values of the single-layer potential at its own boundary nodes.

    On the curve the kernel depends only on the parameter difference:
    G = ln(4 sin^2(delta/2))/4pi plus a constant, so the log part is
    integrated with the spectral periodic-log weights and the remainder by
    the trapezoid rule; the resulting circulant product is evaluated by FFT.
    """
    grid = density.grid
    cap = grid.cap
    m = len(grid)
    s = cap.boundary_sine
    c0 = (np.log(s * s) - 2.0 * np.log(2.0) + 1.0) / FOUR_PI
    row = s * (_log_quadrature_weights(m) / FOUR_PI + (2.0 * np.pi / m) * c0)
    return np.fft.irfft(np.fft.rfft(row) * np.fft.rfft(density.values), n=m)


def idp_residual(solution: BoundarySolution, boundary_values) -> float:
    """Sup-norm residual of F = U2[Q] + Q/2 at the collocation nodes."""
    grid = solution.density.grid
    f = _boundary_values(grid, boundary_values)
    q = solution.density.values
    kg = geodesic_curvature(grid.cap)
    u2 = kg / FOUR_PI * float(np.sum(grid.weights * q))
    return float(np.abs(u2 + 0.5 * q - f).max())


def inp_residual(solution: BoundarySolution, boundary_values) -> float:
    """Sup-norm residual of F = K[Q] - Q/2 at the collocation nodes."""
    grid = solution.density.grid
    f = _boundary_values(grid, boundary_values)
    q = solution.density.values
    kg = geodesic_curvature(grid.cap)
    ku = kg / FOUR_PI * float(np.sum(grid.weights * q))
    return float(np.abs(ku - 0.5 * q - f).max())


def _boundary_values(grid: QuadratureGrid, boundary_values) -> np.ndarray:
    if grid.kind != KIND_BOUNDARY:
        raise ValueError("boundary solvers need a boundary grid")
    if isinstance(boundary_values, FieldSamples):
        if boundary_values.grid is not grid:
            raise ValueError("boundary data must live on the collocation grid")
        return boundary_values.values
    if callable(boundary_values):
        return np.asarray(boundary_values(grid.nodes), dtype=float)
    values = np.asarray(boundary_values, dtype=float)
    if values.shape != (len(grid),):
        raise ValueError("boundary data shape does not match the grid")
    return values
