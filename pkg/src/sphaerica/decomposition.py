"""Helmholtz and Hardy-Hodge decompositions of spherical vector fields.

A field splits into a radial part, a curl-free tangential part (surface
gradient of a scalar), and a divergence-free tangential part (surface curl
gradient of a scalar). The scalars are recovered by convolving the field
with gradient kernels: the fundamental solution globally, the Neumann and
Dirichlet cap kernels on caps. The Hardy-Hodge variant recombines the
Helmholtz scalars through the half-integer shifted square root of the
(shifted) surface Laplacian, whose inverse acts spectrally as 1/(n + 1/2)
and pointwise as a weakly singular convolution; both paths are implemented
and cross-checked in the tests. The Hardy-Hodge split is global only: the
nonlocal operator does not restrict to subdomains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .harmonics import ShCoefficients, sh_curl_eval, sh_eval, sh_grad_eval
from .kernels import (
    KIND_DIRICHLET,
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
)
from .solvers import _chunks, default_scale

_SQRT_SING_FLOOR = 1e-300


@dataclass(frozen=True)
class HelmholtzScalars:
    """Radial, curl-free, and divergence-free scalars of one field.

    normalization records which gauge fixed the free constants (demeaned
    scalars, boundary data used for the divergence-free part on caps).
    """

    f1: FieldSamples
    f2: FieldSamples
    f3: FieldSamples
    normalization: dict


@dataclass(frozen=True)
class HardyHodgeScalars:
    """Scalars of the inner/outer/surface source split of a field."""

    f1: FieldSamples
    f2: FieldSamples
    f3: FieldSamples
    normalization: dict


def helmholtz_compose(
    f1: ShCoefficients, f2: ShCoefficients, f3: ShCoefficients, xi
) -> np.ndarray:
    """xi F1(xi) + grad F2(xi) + curl-grad F3(xi) from spectral scalars."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi[None, :] if single else xi
    out = pts * sh_eval(f1, pts)[:, None]
    out = out + sh_grad_eval(f2, pts)
    out = out + sh_curl_eval(f3, pts)
    return out[0] if single else out


def _grad_convolution(
    samples: FieldSamples,
    spec: KernelSpec,
    points: np.ndarray,
    curl: bool,
) -> np.ndarray:
    """-sum_j w_j (D_eta K(xi_i, eta_j)) . f_j, chunked over points."""
    grid = samples.grid
    out = np.empty(points.shape[0])
    w = grid.weights
    for i0, i1 in _chunks(points.shape[0], len(grid)):
        rows = kernel_grad_dot(spec, points[i0:i1], grid.nodes, samples.values, curl=curl)
        out[i0:i1] = -np.sum(w[None, :] * rows, axis=1)
    return out


def _demean(grid: QuadratureGrid, values: np.ndarray) -> np.ndarray:
    return values - np.sum(grid.weights * values) / np.sum(grid.weights)


def helmholtz_decompose_sphere(
    samples: FieldSamples, scale: int | None = None
) -> HelmholtzScalars:
    """Global decomposition; scalars are produced at the field's own nodes.

    F2 and F3 are gradient/curl convolutions with the fundamental solution,
    regularized at the given scale, and are demeaned (the global split fixes
    them only up to constants). F1 is the pointwise radial part.
    """
    grid = samples.grid
    if grid.kind != KIND_SPHERE:
        raise ValueError("helmholtz_decompose_sphere needs a sphere grid")
    if scale is None:
        scale = default_scale(grid)
    spec = KernelSpec(KIND_FUNDAMENTAL, scale=scale)
    f1 = np.sum(samples.values * grid.nodes, axis=1)
    f2 = _demean(grid, _grad_convolution(samples, spec, grid.nodes, curl=False))
    f3 = _demean(grid, _grad_convolution(samples, spec, grid.nodes, curl=True))
    return HelmholtzScalars(
        FieldSamples(grid, f1),
        FieldSamples(grid, f2),
        FieldSamples(grid, f3),
        normalization={"mean_f2": 0.0, "mean_f3": 0.0, "scale": scale},
    )


def helmholtz_decompose_cap(
    samples: FieldSamples,
    boundary_f3=None,
    scale: int | None = None,
    m: int = 512,
    boundary_field=None,
) -> HelmholtzScalars:
    """Cap decomposition with Dirichlet data for the divergence-free scalar.

    boundary_f3 gives the boundary trace of F3 (callable on stacked boundary
    nodes, an array of trace values, or None for the zero trace). F2
    convolves the Neumann cap kernel and carries a boundary correction
    weighted by the trace; F3 convolves the Dirichlet cap kernel plus its
    two boundary terms. F2 is demeaned over the cap. Scalars are returned
    at the grid nodes; decompose_cap_at evaluates at other interior points.
    boundary_field, when given, supplies exact field values on the boundary
    for the tangential boundary term (otherwise nearest-node transfer).
    """
    grid = samples.grid
    cap = grid.cap
    if cap is None or grid.kind == KIND_BOUNDARY:
        raise ValueError("helmholtz_decompose_cap needs a cap area grid")
    if scale is None:
        scale = default_scale(grid)
    f1 = np.sum(samples.values * grid.nodes, axis=1)
    f2, f3 = decompose_cap_at(
        samples,
        grid.nodes,
        boundary_field=boundary_field,
        boundary_f3=boundary_f3,
        scale=scale,
        m=m,
    )
    return HelmholtzScalars(
        FieldSamples(grid, f1),
        FieldSamples(grid, f2),
        FieldSamples(grid, f3),
        normalization={"mean_f2": 0.0, "boundary_m": m, "scale": scale},
    )


def samples_on_boundary(samples: FieldSamples, bgrid: QuadratureGrid) -> np.ndarray:
    """Nearest-node transfer of a sampled field onto boundary nodes.

    The boundary terms of the cap decomposition need tau . f on the curve;
    sampled fields carry no off-node evaluator, so the transfer uses the
    value at the nearest grid node. Callers with an analytic field should
    prefer decompose_cap_at and pass exact boundary values.
    """
    idx = np.argmax(samples.grid.nodes @ bgrid.nodes.T, axis=0)
    return samples.values[idx]


def decompose_cap_at(
    samples: FieldSamples,
    points: np.ndarray,
    boundary_field=None,
    boundary_f3=None,
    scale: int | None = None,
    m: int = 512,
    demean: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """(F2, F3) of the cap decomposition at interior evaluation points.

    boundary_field, when given, evaluates the vector field on stacked
    boundary nodes exactly (used for the tau . f boundary term); otherwise
    the field is transferred from the nearest grid nodes. With demean, F2 is
    shifted by its cap mean computed on the sample grid, which costs one
    evaluation pass over all grid nodes; callers fixing the constant gauge
    themselves can skip it.
    """
    grid = samples.grid
    cap = grid.cap
    if scale is None:
        scale = default_scale(grid)
    bgrid = build_boundary_grid(cap, m)
    trace = (
        np.zeros(m)
        if boundary_f3 is None
        else np.asarray(
            boundary_f3(bgrid.nodes) if callable(boundary_f3) else boundary_f3,
            dtype=float,
        )
    )
    f_bnd = (
        samples_on_boundary(samples, bgrid)
        if boundary_field is None
        else np.asarray(boundary_field(bgrid.nodes), dtype=float)
    )
    tau_f = np.sum(bgrid.tangents * f_bnd, axis=1)

    pts = np.atleast_2d(np.asarray(points, dtype=float))
    spec_n = KernelSpec(KIND_NEUMANN_REG, cap=cap, scale=scale)
    spec_d = KernelSpec(KIND_DIRICHLET, cap=cap, scale=scale)

    def evaluate(target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        f2 = _grad_convolution(samples, spec_n, target, curl=False)
        f3 = _grad_convolution(samples, spec_d, target, curl=True)
        w = bgrid.weights
        rows_n = kernel_grad_dot(spec_n, target, bgrid.nodes, bgrid.tangents)
        f2 = f2 + np.sum(w[None, :] * rows_n * trace[None, :], axis=1)
        gd_vals = kernel_value_matrix(spec_d, target, bgrid.nodes)
        f3 = f3 + np.sum(w[None, :] * gd_vals * tau_f[None, :], axis=1)
        rows_d = kernel_grad_dot(spec_d, target, bgrid.nodes, bgrid.normals)
        f3 = f3 + np.sum(w[None, :] * rows_d * trace[None, :], axis=1)
        return f2, f3

    f2, f3 = evaluate(pts)
    if not demean:
        return f2, f3
    if pts is grid.nodes:
        f2_nodes = f2
    else:
        f2_nodes, _ = evaluate(grid.nodes)
    mean_f2 = float(np.sum(grid.weights * f2_nodes) / np.sum(grid.weights))
    return f2 - mean_f2, f3


def d_apply(c: ShCoefficients, power: int) -> ShCoefficients:
    """Spectral action of the shifted square-root operator: (n + 1/2)^power."""
    if power not in (1, -1):
        raise ValueError("power must be +1 or -1")
    degrees = np.arange(c.l_max + 1, dtype=float) + 0.5
    factors = degrees**power
    return ShCoefficients(c.l_max, c.coeffs * factors[:, None], seed=c.seed)


def d_inv_convolve(samples: FieldSamples, xi) -> float | np.ndarray:
    """Inverse of the shifted square-root operator as a convolution.

    Kernel 1/(2 pi sqrt(2 (1 - xi . eta))); the singularity is subtracted
    against the analytic kernel integral, which equals 2:
    integral k (F - F(xi)) + 2 F(xi). xi must be grid nodes (their values
    feed the subtraction); pass indices or points matching grid nodes.
    """
    grid = samples.grid
    if grid.kind != KIND_SPHERE:
        raise ValueError("the convolution path needs a sphere grid")
    xi = np.asarray(xi)
    if xi.dtype.kind in "iu":
        idx = np.atleast_1d(xi)
        pts = grid.nodes[idx]
        centers = samples.values[idx]
        single = xi.ndim == 0
    else:
        pts = np.atleast_2d(np.asarray(xi, dtype=float))
        single = np.asarray(xi).ndim == 1
        match = np.argmax(pts @ grid.nodes.T, axis=1)
        if np.any(np.sum(pts * grid.nodes[match], axis=1) < 1.0 - 1e-12):
            raise ValueError("evaluation points must coincide with grid nodes")
        centers = samples.values[match]
    w = grid.weights
    out = np.empty(pts.shape[0])
    for i0, i1 in _chunks(pts.shape[0], len(grid)):
        t = pts[i0:i1] @ grid.nodes.T
        u = np.maximum(1.0 - t, _SQRT_SING_FLOOR)
        k = 1.0 / (2.0 * np.pi * np.sqrt(2.0 * u))
        diff = samples.values[None, :] - centers[i0:i1, None]
        diff = np.where(u < 1e-14, 0.0, diff)
        out[i0:i1] = np.sum(w[None, :] * k * diff, axis=1) + 2.0 * centers[i0:i1]
    return float(out[0]) if single else out


def hardy_hodge_combine(f1, f2, f3, d_inv_f1, d_inv_f2):
    """hh recombination: (F1, F2, F3) -> (half D^-1 F1 + quarter D^-1 F2
    -+ half F2, same with +, F3)."""
    tilde1 = 0.5 * d_inv_f1 + 0.25 * d_inv_f2 - 0.5 * f2
    tilde2 = 0.5 * d_inv_f1 + 0.25 * d_inv_f2 + 0.5 * f2
    return tilde1, tilde2, f3


def hardy_hodge_decompose_sphere(
    samples: FieldSamples, scale: int | None = None
) -> HardyHodgeScalars:
    """Global source split via the Helmholtz scalars and the convolution
    inverse of the shifted square-root operator."""
    helm = helmholtz_decompose_sphere(samples, scale=scale)
    grid = samples.grid
    d1 = d_inv_convolve(helm.f1, np.arange(len(grid)))
    d2 = d_inv_convolve(helm.f2, np.arange(len(grid)))
    t1, t2, t3 = hardy_hodge_combine(
        helm.f1.values, helm.f2.values, helm.f3.values, d1, d2
    )
    return HardyHodgeScalars(
        FieldSamples(grid, t1),
        FieldSamples(grid, t2),
        FieldSamples(grid, t3),
        normalization={"mean_f3": 0.0, "mean_f1_minus_f2": 0.0},
    )


def hardy_hodge_compose_spectral(
    t1: ShCoefficients, t2: ShCoefficients, t3: ShCoefficients, xi
) -> np.ndarray:
    """Compose a field from Hardy-Hodge scalars spectrally.

    The inner/outer operators act as xi (D + 1/2) - grad and
    xi (D - 1/2) + grad; on degree n that is (n + 1) and n radial weights.
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi[None, :] if single else xi
    up1 = _shift_spectral(t1, +1.0)
    up2 = _shift_spectral(t2, 0.0)
    out = pts * sh_eval(up1, pts)[:, None] - sh_grad_eval(t1, pts)
    out = out + pts * sh_eval(up2, pts)[:, None] + sh_grad_eval(t2, pts)
    out = out + sh_curl_eval(t3, pts)
    return out[0] if single else out


def _shift_spectral(c: ShCoefficients, offset: float) -> ShCoefficients:
    # multiply degree-n coefficients by (n + offset): D +- 1/2 eigenvalues
    factors = np.arange(c.l_max + 1, dtype=float) + offset
    return ShCoefficients(c.l_max, c.coeffs * factors[:, None], seed=c.seed)
