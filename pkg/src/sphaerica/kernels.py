"""Closed-form kernels of the surface Laplacian on the unit sphere.

The fundamental solution G(t) = ln(1-t)/(4 pi) + (1 - ln 2)/(4 pi), its cap
Green functions with Dirichlet or Neumann boundary behavior (built from the
cap reflection), the scale-J regularized Neumann kernel, and closed-form
tangential derivatives of all of them. Derivative formulas are validated
against finite differences in the test suite before anything else relies on
them.

Scalar entry points mirror the public contracts; the _*_many helpers are
vectorized over stacked evaluation points and are what the solver modules
call in their chunked quadrature loops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoundaryPoint, SphericalCap, _reflect_many, reflect

FOUR_PI = 4.0 * np.pi
_SING_TOL = 1e-14

KIND_FUNDAMENTAL = "fundamental"
KIND_DIRICHLET = "dirichlet-cap"
KIND_NEUMANN = "neumann-cap"
KIND_NEUMANN_REG = "neumann-cap-regularized"


class SingularityError(ValueError):
    """Kernel evaluated at (numerically) coincident arguments."""


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to evaluate: kind, owning cap, regularization scale."""

    kind: str
    cap: SphericalCap | None = None
    scale: int | None = None

    def __post_init__(self):
        if self.kind not in (
            KIND_FUNDAMENTAL,
            KIND_DIRICHLET,
            KIND_NEUMANN,
            KIND_NEUMANN_REG,
        ):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind != KIND_FUNDAMENTAL and self.cap is None:
            raise ValueError("cap kernels require a cap")
        if self.kind == KIND_NEUMANN_REG:
            if self.scale is None or self.scale < 0:
                raise ValueError("regularized kernel requires scale J >= 0")


def fundamental(t: float) -> float:
    """Fundamental solution at t = xi . eta, singular as t -> 1."""
    t = float(t)
    if t >= 1.0 - _SING_TOL:
        raise SingularityError("fundamental solution evaluated at its singularity")
    return np.log1p(-t) / FOUR_PI + (1.0 - np.log(2.0)) / FOUR_PI


def _fundamental_many(t: np.ndarray, scale: int | None = None) -> np.ndarray:
    """Vectorized fundamental solution; with a scale, the log branch is
    replaced by its linear continuation inside 1 - t < 2^-scale."""
    t = np.asarray(t, dtype=float)
    u = 1.0 - t
    if scale is None:
        if np.any(u < _SING_TOL):
            raise SingularityError("kernel evaluated at its singularity")
        return np.log(u) / FOUR_PI + (1.0 - np.log(2.0)) / FOUR_PI
    delta = 2.0 ** (-scale)
    with np.errstate(divide="ignore"):
        log_branch = np.log(np.maximum(u, 1e-300)) / FOUR_PI
    lin_branch = (u / delta - scale * np.log(2.0) - 1.0) / FOUR_PI
    return np.where(u >= delta, log_branch, lin_branch) + (
        1.0 - np.log(2.0)
    ) / FOUR_PI


def _grad_factor(t: np.ndarray, scale: int | None) -> np.ndarray:
    """Radial factor of the log-branch gradient: 1/(1-t), capped at 2^scale.

    grad_eta of the log term is -(xi - t eta) * factor / (4 pi); the linear
    regularized branch has the constant factor 2^scale, which matches the log
    branch at the seam.
    """
    t = np.asarray(t, dtype=float)
    u = 1.0 - t
    if scale is None:
        if np.any(u < _SING_TOL):
            raise SingularityError("kernel gradient at its singularity")
        return 1.0 / u
    return np.minimum(1.0 / np.maximum(u, 1e-300), 2.0**scale)


def fundamental_deriv(xi, eta, mode: str = "grad"):
    """Derivative of G(xi . eta) in its second argument.

    mode "grad" returns the tangential gradient at eta, "curl" returns
    eta x grad, and "normal" the normal derivative (eta must then be a
    BoundaryPoint).
    """
    if mode == "normal":
        if not isinstance(eta, BoundaryPoint):
            raise TypeError("normal mode requires a BoundaryPoint")
        nu, eta_vec = eta.normal, eta.position
    else:
        eta_vec = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    t = float(xi @ eta_vec)
    if t >= 1.0 - _SING_TOL:
        raise SingularityError("kernel derivative at its singularity")
    grad = -(xi - t * eta_vec) / (FOUR_PI * (1.0 - t))
    if mode == "grad":
        return grad
    if mode == "curl":
        return np.cross(eta_vec, grad)
    if mode == "normal":
        return float(nu @ grad)
    raise ValueError(f"unknown mode {mode!r}")


def _cap_terms_value(
    cap: SphericalCap, xi: np.ndarray, eta: np.ndarray, sign: float, scale: int | None
) -> np.ndarray:
    """log(1 - xi.eta)/4pi (possibly regularized) + sign * reflected log term.

    xi has shape (P, 3), eta (N, 3); returns (P, N). The reflected term is
    smooth for xi inside the cap and carries no regularization.
    """
    t = xi @ eta.T
    check, scale_arr = _reflect_many(cap, xi)
    t_ref = check @ eta.T
    base = _fundamental_many(t, scale) - (1.0 - np.log(2.0)) / FOUR_PI
    refl = (np.log(scale_arr)[:, None] + np.log(1.0 - t_ref)) / FOUR_PI
    return base + sign * refl


def _neumann_zeta_term(cap: SphericalCap, eta: np.ndarray) -> np.ndarray:
    """(1 - rho) ln(1 + zeta . eta) / (2 pi rho), shape (N,)."""
    c = eta @ cap.center
    if np.any(1.0 + c < _SING_TOL):
        raise SingularityError("Neumann kernel at the antipode of the cap center")
    return (1.0 - cap.radius) / (2.0 * np.pi * cap.radius) * np.log1p(c)


def dirichlet_green(cap: SphericalCap, xi, eta, mode: str = "value"):
    """Cap Green function with zero boundary values, or its eta-derivatives.

    The value is log(1 - xi.eta)/4pi - log(r (1 - check.eta))/4pi with
    (check, r) the reflection of xi. Modes: value, grad, curl, normal
    (normal requires a BoundaryPoint eta).
    """
    xi = np.asarray(xi, dtype=float)
    if not cap.contains(xi):
        raise ValueError("dirichlet_green requires xi inside the cap")
    if mode == "normal":
        if not isinstance(eta, BoundaryPoint):
            raise TypeError("normal mode requires a BoundaryPoint")
        grad = dirichlet_green(cap, xi, eta.position, mode="grad")
        return float(eta.normal @ grad)
    eta_vec = np.asarray(eta, dtype=float)
    t = float(xi @ eta_vec)
    if t >= 1.0 - _SING_TOL:
        raise SingularityError("dirichlet_green at its singularity")
    if mode == "value":
        out = _cap_terms_value(cap, xi[None, :], eta_vec[None, :], -1.0, None)
        return float(out[0, 0])
    ref = reflect(cap, xi)
    t_ref = float(ref.point @ eta_vec)
    grad = -(xi - t * eta_vec) / (FOUR_PI * (1.0 - t)) + (
        ref.point - t_ref * eta_vec
    ) / (FOUR_PI * (1.0 - t_ref))
    if mode == "grad":
        return grad
    if mode == "curl":
        return np.cross(eta_vec, grad)
    raise ValueError(f"unknown mode {mode!r}")


def neumann_green(cap: SphericalCap, xi, eta, mode: str = "value"):
    """Cap Green function with vanishing boundary normal derivative.

    Value: log(1 - xi.eta)/4pi + log(r (1 - check.eta))/4pi
    + (1 - rho) ln(1 + zeta.eta) / (2 pi rho). Modes: value, grad, curl.
    """
    xi = np.asarray(xi, dtype=float)
    eta_vec = np.asarray(eta, dtype=float)
    if not cap.contains(xi):
        raise ValueError("neumann_green requires xi inside the cap")
    t = float(xi @ eta_vec)
    if t >= 1.0 - _SING_TOL:
        raise SingularityError("neumann_green at its singularity")
    if mode == "value":
        out = _cap_terms_value(cap, xi[None, :], eta_vec[None, :], +1.0, None)
        return float(out[0, 0] + _neumann_zeta_term(cap, eta_vec[None, :])[0])
    ref = reflect(cap, xi)
    t_ref = float(ref.point @ eta_vec)
    c = float(cap.center @ eta_vec)
    grad = (
        -(xi - t * eta_vec) / (FOUR_PI * (1.0 - t))
        - (ref.point - t_ref * eta_vec) / (FOUR_PI * (1.0 - t_ref))
        + (1.0 - cap.radius)
        / (2.0 * np.pi * cap.radius)
        * (cap.center - c * eta_vec)
        / (1.0 + c)
    )
    if mode == "grad":
        return grad
    if mode == "curl":
        return np.cross(eta_vec, grad)
    raise ValueError(f"unknown mode {mode!r}")


def neumann_green_regularized(
    cap: SphericalCap, xi, eta, scale: int, mode: str = "value"
):
    """Scale-J regularization of the Neumann cap kernel.

    Inside 1 - xi.eta < 2^-J the singular log term is replaced by its linear
    continuation 2^J (1 - xi.eta)/4pi - J ln2/4pi - 1/4pi; value and gradient
    are continuous across the seam. Other terms are unchanged.
    """
    if scale < 0:
        raise ValueError("scale must be >= 0")
    xi = np.asarray(xi, dtype=float)
    eta_vec = np.asarray(eta, dtype=float)
    if not cap.contains(xi):
        raise ValueError("regularized kernel requires xi inside the cap")
    t = float(xi @ eta_vec)
    ref = reflect(cap, xi)
    t_ref = float(ref.point @ eta_vec)
    c = float(cap.center @ eta_vec)
    if mode == "value":
        u = 1.0 - t
        delta = 2.0**-scale
        if u >= delta:
            first = np.log(u) / FOUR_PI
        else:
            first = (u / delta - scale * np.log(2.0) - 1.0) / FOUR_PI
        return float(
            first
            + (np.log(ref.scale) + np.log(1.0 - t_ref)) / FOUR_PI
            + _neumann_zeta_term(cap, eta_vec[None, :])[0]
        )
    if mode == "grad":
        factor = float(_grad_factor(np.array([t]), scale)[0])
        return (
            -(xi - t * eta_vec) * factor / FOUR_PI
            - (ref.point - t_ref * eta_vec) / (FOUR_PI * (1.0 - t_ref))
            + (1.0 - cap.radius)
            / (2.0 * np.pi * cap.radius)
            * (cap.center - c * eta_vec)
            / (1.0 + c)
        )
    raise ValueError(f"unknown mode {mode!r}")


def kernel_value_matrix(spec: KernelSpec, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Kernel values for stacked xi (P, 3) against stacked eta (N, 3)."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    eta = np.atleast_2d(np.asarray(eta, dtype=float))
    if spec.kind == KIND_FUNDAMENTAL:
        return _fundamental_many(xi @ eta.T, spec.scale)
    sign = -1.0 if spec.kind == KIND_DIRICHLET else 1.0
    out = _cap_terms_value(spec.cap, xi, eta, sign, spec.scale)
    if spec.kind in (KIND_NEUMANN, KIND_NEUMANN_REG):
        out = out + _neumann_zeta_term(spec.cap, eta)[None, :]
    return out


def kernel_grad_dot(
    spec: KernelSpec,
    xi: np.ndarray,
    eta: np.ndarray,
    field: np.ndarray,
    curl: bool = False,
) -> np.ndarray:
    """Rows of sum-ready (D_eta K(xi_i, eta_j)) . field_j, shape (P, N).

    D is the tangential gradient, or the surface curl gradient when curl is
    set (computed by dotting the gradient with field x eta). The log branch
    uses the spec's regularization scale when present. The arithmetic below
    reuses buffers; these products dominate the cost of every convolution
    solver, so the number of (P, N) temporaries matters.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    eta = np.atleast_2d(np.asarray(eta, dtype=float))
    f = np.cross(field, eta) if curl else np.asarray(field, dtype=float)
    radial = np.sum(f * eta, axis=1)

    def block(points: np.ndarray, scale: int | None, log_branch: bool):
        # ((points_i . f_j) - t_ij (eta_j . f_j)) / (1 - t_ij), with the
        # factor capped at 2^scale on the regularized log branch
        t = points @ eta.T
        rows = points @ f.T
        rows -= t * radial[None, :]
        np.subtract(1.0, t, out=t)
        if log_branch:
            np.maximum(t, 1e-300, out=t)
        elif np.any(t < _SING_TOL):
            raise SingularityError("kernel gradient at its singularity")
        np.reciprocal(t, out=t)
        if log_branch and scale is not None:
            np.minimum(t, 2.0**scale, out=t)
        elif log_branch and np.any(t > 1.0 / _SING_TOL):
            raise SingularityError("kernel gradient at its singularity")
        rows *= t
        return rows

    out = block(xi, spec.scale, log_branch=True)
    out *= -1.0 / FOUR_PI
    if spec.kind == KIND_FUNDAMENTAL:
        return out
    check, _ = _reflect_many(spec.cap, xi)
    refl = block(check, None, log_branch=False)
    sign = 1.0 if spec.kind == KIND_DIRICHLET else -1.0
    refl *= sign / FOUR_PI
    out += refl
    if spec.kind in (KIND_NEUMANN, KIND_NEUMANN_REG):
        c = eta @ spec.cap.center
        zeta_dot = (spec.cap.center @ f.T - c * radial) / (1.0 + c)
        coef = (1.0 - spec.cap.radius) / (2.0 * np.pi * spec.cap.radius)
        out += coef * zeta_dot[None, :]
    return out
