"""Surface potentials and boundary value solvers on caps and the sphere.

Quadrature of singular kernels follows two strategies. Gradient-kernel
convolutions (invert_gradient and everything built on it) integrate the
scale-J regularized kernel directly; J defaults to a value tied to the grid
resolution. The scalar surface potential additionally exploits the kernel's
zero spherical mean on full-sphere grids: when the integrand's value at the
evaluation point is available, the singular part is subtracted and the
quadrature error drops by more than an order of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import SphericalCap, unit_vector
from .kernels import (
    KIND_FUNDAMENTAL,
    KIND_NEUMANN_REG,
    KernelSpec,
    kernel_grad_dot,
    kernel_value_matrix,
)
from .quadrature import (
    KIND_BOUNDARY,
    KIND_SPHERE,
    FieldSamples,
    QuadratureGrid,
    build_boundary_grid,
    build_cap_grid,
    integrate,
    mean_value,
)

_CHUNK_DOUBLES = 8_000_000


@dataclass(frozen=True)
class SolveReport:
    """Solution samples plus the residual diagnostics needed to rerun them."""

    points: np.ndarray
    values: np.ndarray
    params: dict
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        for v in self.diagnostics.values():
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError("diagnostics must be finite")


def default_scale(grid: QuadratureGrid) -> int:
    """Regularization scale tied to grid resolution: ceil(log2(1/h_t)) + 2."""
    h = grid.polar_spacing
    if h <= 0.0:
        raise ValueError("default scale needs an area grid")
    return int(np.ceil(np.log2(1.0 / h))) + 2


def _chunks(n_points: int, n_nodes: int):
    step = max(1, _CHUNK_DOUBLES // max(n_nodes, 1))
    for i0 in range(0, n_points, step):
        yield i0, min(i0 + step, n_points)


def surface_potential(
    samples: FieldSamples,
    xi,
    scale: int | None = None,
    xi_values=None,
) -> float | np.ndarray:
    """Quadrature of G(xi . eta) H(eta) over the sample grid.

    Nodes with 1 - xi . eta < 2^-scale use the linear continuation of the log
    kernel. On full-sphere grids with xi_values supplied (the integrand at
    the evaluation points), the zero-mean identity of the kernel turns the
    integrand into G(xi . eta)(H(eta) - H(xi)), which removes the singular
    contribution entirely.
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi[None, :] if single else xi
    grid = samples.grid
    if scale is None:
        scale = default_scale(grid)
    spec = KernelSpec(KIND_FUNDAMENTAL, scale=scale)
    subtract = xi_values is not None and grid.kind == KIND_SPHERE
    if subtract:
        centers = np.atleast_1d(np.asarray(xi_values, dtype=float))
    h = samples.values
    out = np.empty(pts.shape[0])
    w = grid.weights
    for i0, i1 in _chunks(pts.shape[0], len(grid)):
        k = kernel_value_matrix(spec, pts[i0:i1], grid.nodes)
        if subtract:
            out[i0:i1] = np.sum(
                w[None, :] * k * (h[None, :] - centers[i0:i1, None]), axis=1
            )
        else:
            out[i0:i1] = np.sum(w[None, :] * k * h[None, :], axis=1)
    return float(out[0]) if single else out


def beltrami_fd(evaluator, xi, h: float = 1e-3) -> float:
    """Five-point gnomonic-stencil estimate of the surface Laplacian.

    evaluator maps stacked points (N, 3) to values (N,). Second order in h;
    h should stay within [1e-4, 1e-2].
    """
    if not 1e-4 <= h <= 1e-2:
        raise ValueError("step h must lie in [1e-4, 1e-2]")
    xi = unit_vector(np.asarray(xi, dtype=float))
    helper = np.array([0.0, 0.0, 1.0]) if abs(xi[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = unit_vector(np.cross(helper, xi))
    e2 = np.cross(xi, e1)
    stencil = np.stack(
        [xi + h * e1, xi - h * e1, xi + h * e2, xi - h * e2, xi]
    )
    stencil = stencil / np.linalg.norm(stencil, axis=1, keepdims=True)
    vals = np.asarray(evaluator(stencil), dtype=float)
    return float((vals[0] + vals[1] + vals[2] + vals[3] - 4.0 * vals[4]) / (h * h))


def poisson_solve_cap(
    cap: SphericalCap,
    samples: FieldSamples,
    xi_bar,
    xi,
    scale: int | None = None,
) -> float | np.ndarray:
    """Particular solution of the surface Poisson equation on a cap.

    Returns the potential of the demeaned right-hand side plus the correction
    -(1/|cap|) ln(1 - xi . xi_bar) * integral(H), with xi_bar a fixed point
    outside the closed cap.
    """
    xi_bar = unit_vector(np.asarray(xi_bar, dtype=float))
    if cap.contains(xi_bar) or 1.0 - float(xi_bar @ cap.center) <= cap.radius:
        raise ValueError("xi_bar must lie outside the closed cap")
    area = 2.0 * np.pi * cap.radius
    total = integrate(samples.grid, samples)
    demeaned = FieldSamples(samples.grid, samples.values - total / area)
    base = surface_potential(demeaned, xi, scale=scale)
    xi = np.asarray(xi, dtype=float)
    t_bar = xi @ xi_bar
    return base - np.log(1.0 - t_bar) / area * total


def dirichlet_solve_cap(
    cap: SphericalCap,
    boundary_values,
    xi,
    m: int = 512,
    margin: float = 1e-6,
) -> float | np.ndarray:
    """Closed-form Poisson-type integral for the cap Dirichlet problem.

    boundary_values is either FieldSamples on a boundary grid or a callable
    on stacked boundary nodes; xi must be strictly interior
    (1 - xi . center < radius - margin).
    """
    grid, f = _boundary_data(cap, boundary_values, m)
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi[None, :] if single else xi
    if not np.all(cap.contains(pts, margin=margin)):
        raise ValueError("evaluation points must be strictly interior")
    s = cap.boundary_sine
    front = (pts @ cap.center + cap.radius - 1.0) / (2.0 * np.pi * s)
    kernel = 1.0 / (1.0 - pts @ grid.nodes.T)
    out = front * np.sum(grid.weights[None, :] * kernel * f[None, :], axis=1)
    return float(out[0]) if single else out


def neumann_solve_cap(
    cap: SphericalCap,
    boundary_values,
    mean_val: float,
    xi,
    m: int = 512,
    compat_tol: float = 1e-8,
) -> float | np.ndarray:
    """Single-integral representation of the cap Neumann problem.

    boundary_values carries the normal derivative on the boundary; it must
    integrate to zero (solvability). mean_val supplies the cap mean of the
    solution, which fixes the free additive constant.
    """
    grid, f = _boundary_data(cap, boundary_values, m)
    total = float(np.sum(grid.weights * f))
    if abs(total) > compat_tol:
        raise ValueError(
            f"Neumann data violates the solvability condition: integral {total:.3e}"
        )
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi[None, :] if single else xi
    if not np.all(cap.contains(pts)):
        raise ValueError("evaluation points must lie inside the cap")
    rho = cap.radius
    log_part = np.log(1.0 - pts @ grid.nodes.T) / (2.0 * np.pi)
    const_part = (1.0 - rho) / (2.0 * np.pi * rho) * np.log(2.0 - rho)
    out = mean_val - np.sum(
        grid.weights[None, :] * (log_part + const_part) * f[None, :], axis=1
    )
    return float(out[0]) if single else out


def _boundary_data(cap, boundary_values, m):
    if isinstance(boundary_values, FieldSamples):
        grid = boundary_values.grid
        if grid.kind != KIND_BOUNDARY:
            raise ValueError("boundary data must live on a boundary grid")
        return grid, boundary_values.values
    grid = build_boundary_grid(cap, m)
    return grid, np.asarray(boundary_values(grid.nodes), dtype=float)


def invert_gradient(
    samples: FieldSamples,
    mode: str,
    scale: int | None,
    xi,
) -> float | np.ndarray:
    """Reconstruct a scalar (up to its mean) from its surface gradient or
    surface curl gradient sampled on a cap or sphere grid.

    mode "grad" treats the samples as grad U, mode "curl" as curl-grad U.
    Returns -integral (D_eta K)(xi, eta) . f(eta) with K the Neumann cap
    kernel (cap grids) or the fundamental solution (sphere grids),
    regularized at the given scale. The caller adds any desired mean.
    """
    if mode not in ("grad", "curl"):
        raise ValueError("mode must be 'grad' or 'curl'")
    if not samples.tangential:
        raise ValueError("invert_gradient requires tangential samples")
    grid = samples.grid
    if scale is None:
        scale = default_scale(grid)
    if grid.kind == KIND_SPHERE:
        spec = KernelSpec(KIND_FUNDAMENTAL, scale=scale)
    else:
        spec = KernelSpec(KIND_NEUMANN_REG, cap=grid.cap, scale=scale)
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi[None, :] if single else xi
    out = np.empty(pts.shape[0])
    w = grid.weights
    for i0, i1 in _chunks(pts.shape[0], len(grid)):
        rows = kernel_grad_dot(
            spec, pts[i0:i1], grid.nodes, samples.values, curl=(mode == "curl")
        )
        out[i0:i1] = -np.sum(w[None, :] * rows, axis=1)
    return float(out[0]) if single else out


def mvp_residual(
    evaluator,
    probe_cap: SphericalCap,
    which: str,
    n_t: int = 24,
    n_phi: int = 48,
    m: int = 128,
) -> float:
    """Residual of a mean value identity for a harmonic function.

    which = "I": |F(center) - area-term - weighted boundary term| with the
    interior average over the probe cap; which = "II": |F(center) - boundary
    average|. Both vanish for functions harmonic on the closed probe cap.
    """
    center = probe_cap.center
    rho = probe_cap.radius
    f_center = float(np.asarray(evaluator(center[None, :]))[0])
    bgrid = build_boundary_grid(probe_cap, m)
    bvals = np.asarray(evaluator(bgrid.nodes), dtype=float)
    bint = float(np.sum(bgrid.weights * bvals))
    if which == "II":
        return abs(f_center - bint / (2.0 * np.pi * probe_cap.boundary_sine))
    if which != "I":
        raise ValueError("which must be 'I' or 'II'")
    agrid = build_cap_grid(probe_cap, n_t, n_phi)
    avals = np.asarray(evaluator(agrid.nodes), dtype=float)
    aint = float(np.sum(agrid.weights * avals))
    coef = np.sqrt(2.0 - rho) / (4.0 * np.pi * np.sqrt(rho))
    return abs(f_center - aint / (4.0 * np.pi) - coef * bint)


def max_principle_check(
    evaluator,
    cap: SphericalCap,
    n_t: int = 32,
    n_phi: int = 64,
    m: int = 256,
    slack: float = 1e-12,
) -> bool:
    """sup |F| over an interior grid <= sup |F| over the boundary + slack."""
    agrid = build_cap_grid(cap, n_t, n_phi)
    bgrid = build_boundary_grid(cap, m)
    interior = np.abs(np.asarray(evaluator(agrid.nodes), dtype=float)).max()
    boundary = np.abs(np.asarray(evaluator(bgrid.nodes), dtype=float)).max()
    return bool(interior <= boundary + slack)
