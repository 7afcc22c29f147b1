"""Fundamental-system bases and least-squares collocation fitting.

Harmonic trial functions anchored at source points outside the target
region: shifted log kernels, their boundary-normal derivatives, the
log-kernel difference that is harmonic inside the region, and cap inner
harmonics. Dense collocation systems are solved by plain interpolation or
Tikhonov-regularized least squares; plain interpolation of near-boundary
sources conditions badly, so the regularized path is the default choice in
the applications.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SphericalCap, boundary_nodes
from .harmonics import InnerHarmonicIndex, inner_harmonic_eval
from .quadrature import KIND_BOUNDARY, QuadratureGrid

FOUR_PI = 4.0 * np.pi

VARIANT_GK = "gk"
VARIANT_GK_NORMAL = "gk-normal"
VARIANT_GK_MOD = "gk-mod"
VARIANT_INNER = "inner-harmonic"
_VARIANTS = (VARIANT_GK, VARIANT_GK_NORMAL, VARIANT_GK_MOD, VARIANT_INNER)


@dataclass(frozen=True)
class FundamentalSystem:
    """Source layout and basis choice of one fitting problem.

    sources are the anchor points (on a circle outside the target cap in the
    standard construction); regularization_point is the fixed exterior point
    of the harmonic-difference variant. include_constant keeps the constant
    1/(4 pi) as the index-0 basis element.
    """

    sources: np.ndarray
    variant: str
    regularization_point: np.ndarray | None = None
    cap: SphericalCap | None = None
    include_constant: bool = True

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown basis variant {self.variant!r}")
        if self.variant == VARIANT_GK_MOD and self.regularization_point is None:
            raise ValueError("gk-mod needs a regularization point")
        if self.variant == VARIANT_INNER and self.cap is None:
            raise ValueError("inner-harmonic basis needs a cap")
        sources = np.atleast_2d(np.asarray(self.sources, dtype=float))
        object.__setattr__(self, "sources", sources)
        sources.setflags(write=False)

    @property
    def size(self) -> int:
        n = self.sources.shape[0] if self.variant != VARIANT_INNER else len(
            self.sources
        )
        return n + (1 if self.include_constant else 0)


def sources_on_circle(
    cap: SphericalCap, count: int, radius_offset: float = 0.005
) -> np.ndarray:
    """count equidistant source points on the boundary of the enlarged cap."""
    outer = SphericalCap(cap.center, cap.radius + radius_offset)
    phis = 2.0 * np.pi * np.arange(count) / count
    pos, _, _ = boundary_nodes(outer, phis)
    return pos


def basis_eval(
    system: FundamentalSystem, k: int, xi, mode: str = "value", normal=None
):
    """Evaluate basis element k at xi.

    Index 0 is the constant when the system includes it; source-anchored
    elements follow. mode "normal-derivative" needs the outward normals at
    xi (same leading shape).
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi[None, :] if single else xi
    if mode == "normal-derivative" and normal is None:
        raise ValueError("normal-derivative mode needs normals")
    nu = None
    if normal is not None:
        nu = np.asarray(normal, dtype=float)
        nu = nu[None, :] if nu.ndim == 1 else nu
    out = _basis_columns(system, pts, mode, nu)[:, k]
    return float(out[0]) if single else out


def _log_part(pts, anchor, mode, nu):
    t = pts @ anchor
    if np.any(1.0 - t < 1e-14):
        raise ValueError("basis evaluated at one of its source points")
    if mode == "value":
        return np.log(1.0 - t) / FOUR_PI
    # normal derivative: -(nu . anchor - t (nu . pts = 0)) / (4 pi (1 - t));
    # nu is tangential at pts, so nu . pts vanishes
    return -(nu @ anchor) / (FOUR_PI * (1.0 - t))


def _basis_columns(system, pts, mode="value", nu=None) -> np.ndarray:
    """Collocation block: basis values (or normal derivatives) at pts."""
    cols = []
    if system.include_constant:
        const = np.full(pts.shape[0], 1.0 / FOUR_PI)
        cols.append(np.zeros(pts.shape[0]) if mode != "value" else const)
    if system.variant == VARIANT_INNER:
        if mode != "value":
            raise NotImplementedError("inner-harmonic collocation is value-only")
        k = 1
        while len(cols) < system.size:
            degree = (k + 1) // 2
            order = 1 if k % 2 == 1 else 2
            idx = InnerHarmonicIndex(system.cap, degree, order)
            cols.append(inner_harmonic_eval(idx, pts))
            k += 1
        return np.column_stack(cols)
    reg = None
    if system.variant == VARIANT_GK_MOD:
        reg = _log_part(pts, system.regularization_point, mode, nu)
    for anchor in system.sources:
        col = _log_part(pts, anchor, mode, nu)
        if system.variant == VARIANT_GK_MOD:
            col = col - reg
        cols.append(col)
    return np.column_stack(cols)


@dataclass(frozen=True)
class MfsSolution:
    """Fitted coefficients with the diagnostics of the collocation solve."""

    system: FundamentalSystem
    coefficients: np.ndarray
    mode: str
    boundary_residual: float
    condition: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("fit produced non-finite coefficients")


def mfs_fit(
    system: FundamentalSystem,
    collocation: QuadratureGrid,
    boundary_values,
    mode: str = "tikhonov",
    ridge: float = 1e-12,
) -> MfsSolution:
    """Fit basis coefficients to boundary data at the collocation nodes.

    mode "interpolation" solves the square system directly (requires as many
    collocation points as basis elements and fails loudly on numerically
    singular systems); "tikhonov" minimizes the residual plus ridge * |a|^2
    through a rank-revealing least-squares factorization.
    """
    if collocation.kind != KIND_BOUNDARY:
        raise ValueError("collocation nodes must come from a boundary grid")
    f = (
        np.asarray(boundary_values(collocation.nodes), dtype=float)
        if callable(boundary_values)
        else np.asarray(boundary_values, dtype=float)
    )
    a_mat = _basis_columns(system, collocation.nodes)
    n_pts, n_basis = a_mat.shape
    if f.shape != (n_pts,):
        raise ValueError("boundary data shape does not match collocation grid")
    if n_pts < n_basis:
        raise ValueError(f"{n_pts} collocation points for {n_basis} basis elements")
    sv = np.linalg.svd(a_mat, compute_uv=False)
    condition = float(sv[0] / sv[-1]) if sv[-1] > 0.0 else np.inf
    if mode == "interpolation":
        if n_pts != n_basis:
            raise ValueError("interpolation needs a square system")
        if sv[-1] <= n_basis * np.finfo(float).eps * sv[0]:
            raise np.linalg.LinAlgError(
                "collocation matrix numerically singular; use tikhonov mode"
            )
        coeffs = np.linalg.solve(a_mat, f)
    elif mode == "tikhonov":
        aug = np.vstack([a_mat, np.sqrt(ridge) * np.eye(n_basis)])
        rhs = np.concatenate([f, np.zeros(n_basis)])
        coeffs, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
    else:
        raise ValueError("mode must be 'interpolation' or 'tikhonov'")
    residual = float(np.abs(a_mat @ coeffs - f).max())
    return MfsSolution(system, coeffs, mode, residual, condition)


def mfs_eval(solution: MfsSolution, xi) -> float | np.ndarray:
    """Evaluate the fitted combination at xi (away from the source points)."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = xi[None, :] if single else xi
    vals = _basis_columns(solution.system, pts) @ solution.coefficients
    return float(vals[0]) if single else vals
