"""Deterministic quadrature grids on caps, the full sphere, and cap boundaries.

Area grids are product rules: Gauss-Legendre in the polar coordinate
t = xi . zeta times a uniform longitude rule, mapped through the cap's
rotation frame. Boundary grids are equispaced in the curve parameter
(trapezoidal rule, spectrally accurate for smooth periodic integrands).
All constructions and reductions are bit-reproducible for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SphericalCap, boundary_nodes, rotation_to_pole

KIND_CAP = "cap-area"
KIND_SPHERE = "sphere-area"
KIND_BOUNDARY = "boundary-line"


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and positive weights of one quadrature rule.

    kind is one of "cap-area", "sphere-area", "boundary-line". Boundary grids
    also carry tangent/normal frames and the curve parameters of their nodes.
    shape records (n_t, n_phi) for area grids and (m,) for boundary grids.
    """

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    shape: tuple
    cap: SphericalCap | None = None
    phis: np.ndarray | None = None
    tangents: np.ndarray | None = None
    normals: np.ndarray | None = None

    def __post_init__(self):
        for arr in (self.nodes, self.weights, self.phis, self.tangents, self.normals):
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self) -> int:
        return self.nodes.shape[0]

    @property
    def polar_spacing(self) -> float:
        """Mean node spacing of the polar (t) coordinate; 0 for boundary grids."""
        if self.kind == KIND_BOUNDARY:
            return 0.0
        span = 2.0 if self.kind == KIND_SPHERE else self.cap.radius
        return span / self.shape[0]


@dataclass(frozen=True)
class FieldSamples:
    """Scalar or 3-vector values co-indexed with a quadrature grid."""

    grid: QuadratureGrid
    values: np.ndarray
    tangential: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape[0] != len(self.grid):
            raise ValueError(
                f"{values.shape[0]} samples for {len(self.grid)} grid nodes"
            )
        if self.tangential:
            if values.ndim != 2 or values.shape[1] != 3:
                raise ValueError("tangential samples must be 3-vectors")
            radial = np.abs(np.sum(values * self.grid.nodes, axis=1))
            if radial.max(initial=0.0) >= 1e-10:
                raise ValueError("samples marked tangential have radial part")
        values.setflags(write=False)


def _polar_product_grid(cap: SphericalCap | None, t_lo: float, n_t: int, n_phi: int):
    """Nodes/weights of the Gauss-Legendre x uniform product rule on [t_lo, 1]."""
    x, w = np.polynomial.legendre.leggauss(n_t)
    half = 0.5 * (1.0 - t_lo)
    t = t_lo + half * (x + 1.0)
    wt = w * half
    phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wphi = 2.0 * np.pi / n_phi
    frame = np.eye(3) if cap is None else rotation_to_pole(cap.center)
    a1, a2, zeta = frame[:, 0], frame[:, 1], frame[:, 2]
    sin_t = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    circ = np.cos(phis)[None, :, None] * a1 + np.sin(phis)[None, :, None] * a2
    nodes = t[:, None, None] * zeta + sin_t[:, None, None] * circ
    weights = np.broadcast_to((wt * wphi)[:, None], (n_t, n_phi))
    return nodes.reshape(-1, 3), np.ascontiguousarray(weights).reshape(-1)


def build_cap_grid(cap: SphericalCap, n_t: int, n_phi: int) -> QuadratureGrid:
    """Product rule over a cap; total weight is the cap area 2 pi rho."""
    if n_t < 2 or n_phi < 4:
        raise ValueError("cap grid needs n_t >= 2 and n_phi >= 4")
    nodes, weights = _polar_product_grid(cap, 1.0 - cap.radius, n_t, n_phi)
    return QuadratureGrid(KIND_CAP, nodes, weights, (n_t, n_phi), cap=cap)


def build_sphere_grid(n_t: int, n_phi: int) -> QuadratureGrid:
    """Product rule over the full sphere; exact for spherical polynomials of
    degree <= min(2 n_t - 1, n_phi - 1)."""
    if n_t < 2 or n_phi < 4:
        raise ValueError("sphere grid needs n_t >= 2 and n_phi >= 4")
    nodes, weights = _polar_product_grid(None, -1.0, n_t, n_phi)
    return QuadratureGrid(KIND_SPHERE, nodes, weights, (n_t, n_phi))


def build_boundary_grid(cap: SphericalCap, m: int) -> QuadratureGrid:
    """Equispaced rule on the cap boundary; total weight 2 pi sqrt(rho (2-rho))."""
    if m < 8:
        raise ValueError("boundary grid needs m >= 8")
    phis = 2.0 * np.pi * np.arange(m) / m
    pos, tan, nor = boundary_nodes(cap, phis)
    weights = np.full(m, 2.0 * np.pi * cap.boundary_sine / m)
    return QuadratureGrid(
        KIND_BOUNDARY, pos, weights, (m,), cap=cap, phis=phis, tangents=tan, normals=nor
    )


def sample(grid: QuadratureGrid, fn, tangential: bool = False) -> FieldSamples:
    """Evaluate a vectorized node function into FieldSamples."""
    return FieldSamples(grid, np.asarray(fn(grid.nodes), dtype=float), tangential)


def integrate(grid: QuadratureGrid, samples: FieldSamples):
    """Weighted sum over the grid in fixed index order (pairwise reduction)."""
    if samples.grid is not grid and len(samples.grid) != len(grid):
        raise ValueError("samples do not belong to this grid")
    v = samples.values
    if v.ndim == 1:
        return float(np.sum(grid.weights * v))
    return np.sum(grid.weights[:, None] * v, axis=0)


def mean_value(samples: FieldSamples) -> float:
    """Quadrature mean of scalar samples over their grid."""
    total = float(np.sum(samples.grid.weights))
    return integrate(samples.grid, samples) / total
