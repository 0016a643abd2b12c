"""Pointwise residuals of the frame differential operators.

Jet-level functions evaluate the operator expressions exactly as written
(no regularization), so hand-computed values can be asserted to machine
precision.  Field-level functions plug the discrete gradient/Hessian in
as the jet and regularize the logarithm at flat spots.

Conventions at a vanishing gradient: every residual term carrying a
positive power of the gradient norm is taken at its limit value 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .grid import (FrameField, Grid2D, grad_ln_p, hessian_as_matrix,
                   riemannian_gradient, symmetrized_hessian)

#: log regularization floor for field residuals (never applied to jets)
DELTA_LOG = 1e-12


@dataclass(frozen=True)
class PointJet:
    """First/second-order jet element: vector eta, symmetric matrix H."""

    eta: tuple[float, float]
    H: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self):
        if self.H[0][1] != self.H[1][0]:
            raise ValueError("jet matrix must be symmetric")


@dataclass(frozen=True)
class ExponentData:
    """Exponent information at a point: p(x), k, D_X kp, D_X ln p."""

    p: float
    k: float = 1.0
    grad_kp: tuple[float, float] = (0.0, 0.0)
    grad_ln_p: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValueError(f"need p > 1, got {self.p}")
        if not self.k >= 1.0:
            raise ValueError(f"need k >= 1, got {self.k}")


def _quad(H, eta) -> float:
    return (H[0][0] * eta[0] * eta[0] + 2.0 * H[0][1] * eta[0] * eta[1]
            + H[1][1] * eta[1] * eta[1])


def infinity_residual_at(j: PointJet) -> float:
    """<H eta, eta>: the plain frame infinity-Laplacian at the jet."""
    return _quad(j.H, j.eta)


def infinity_x_residual_at(j: PointJet, e: ExponentData) -> float:
    """-(<H eta, eta> + ||eta||^2 <eta, D_X ln p> ln ||eta||).

    The log term is 0 when ||eta|| = 0 (limit value) or ||eta|| = 1.
    """
    n = math.hypot(*j.eta)
    if n == 0.0:
        return 0.0
    logterm = (n * n
               * (j.eta[0] * e.grad_ln_p[0] + j.eta[1] * e.grad_ln_p[1])
               * math.log(n))
    return -(_quad(j.H, j.eta) + logterm)


def pk_residual_at(j: PointJet, e: ExponentData) -> float:
    """Variable-exponent p-Laplace residual at a jet (non-divergence form).

    -( n^{kp-2} tr H + (kp-2) n^{kp-4} <H eta, eta>
       + n^{kp-2} <eta, D_X kp> ln n )  with n = ||eta||; all three terms
    are 0 at n = 0 (this covers 2 < kp <= 4 by convention).
    """
    n = math.hypot(*j.eta)
    if n == 0.0:
        return 0.0
    kp = e.k * e.p
    tr = j.H[0][0] + j.H[1][1]
    term1 = n ** (kp - 2.0) * tr
    term2 = (kp - 2.0) * n ** (kp - 4.0) * _quad(j.H, j.eta)
    term3 = (n ** (kp - 2.0)
             * (j.eta[0] * e.grad_kp[0] + j.eta[1] * e.grad_kp[1])
             * math.log(n))
    return -(term1 + term2 + term3)


def _field_jets(u, frame: FrameField):
    g = riemannian_gradient(u, frame)
    h = symmetrized_hessian(u, frame)
    n = np.sqrt(g[..., 0] ** 2 + g[..., 1] ** 2)
    return g, h, n


def infinity_x_residual_field(u: np.ndarray, frame: FrameField,
                              p: np.ndarray,
                              delta_log: float = DELTA_LOG) -> np.ndarray:
    """-Delta_{X,infinity(x)} u on interior nodes (boundary entries 0).

    Uses the discrete gradient/Hessian as the jet and regularizes the
    logarithm as ln(max(||D_X u||, delta_log)).
    """
    g, h, n = _field_jets(u, frame)
    glnp = grad_ln_p(p, frame)
    hm = hessian_as_matrix(h)
    quad = np.einsum("...i,...ij,...j->...", g, hm, g)
    dot = g[..., 0] * glnp[..., 0] + g[..., 1] * glnp[..., 1]
    res = -(quad + n * n * dot * np.log(np.maximum(n, delta_log)))
    out = np.zeros_like(res)
    out[1:-1, 1:-1] = res[1:-1, 1:-1]
    return out


def gradient_norm_sq_field(u: np.ndarray, frame: FrameField) -> np.ndarray:
    g = riemannian_gradient(u, frame)
    return g[..., 0] ** 2 + g[..., 1] ** 2


def min_form_residual(u: np.ndarray, frame: FrameField, p: np.ndarray,
                      eps: float) -> np.ndarray:
    """min{ ||D_X u||^2 - eps, -Delta_{X,infinity(x)} u } (interior)."""
    if eps <= 0:
        raise ValueError("min form needs eps > 0")
    r = infinity_x_residual_field(u, frame, p)
    n2 = gradient_norm_sq_field(u, frame)
    out = np.zeros_like(r)
    out[1:-1, 1:-1] = np.minimum(n2[1:-1, 1:-1] - eps, r[1:-1, 1:-1])
    return out


def max_form_residual(u: np.ndarray, frame: FrameField, p: np.ndarray,
                      eps: float) -> np.ndarray:
    """max{ eps - ||D_X u||^2, -Delta_{X,infinity(x)} u } (interior)."""
    if eps <= 0:
        raise ValueError("max form needs eps > 0 (the magnitude of the parameter)")
    r = infinity_x_residual_field(u, frame, p)
    n2 = gradient_norm_sq_field(u, frame)
    out = np.zeros_like(r)
    out[1:-1, 1:-1] = np.maximum(eps - n2[1:-1, 1:-1], r[1:-1, 1:-1])
    return out


def _trapezoid_weights(grid: Grid2D) -> np.ndarray:
    wx = np.ones(grid.nx)
    wx[0] = wx[-1] = 0.5
    wy = np.ones(grid.ny)
    wy[0] = wy[-1] = 0.5
    return np.outer(wy, wx) * grid.hx * grid.hy


def energy_functional(u: np.ndarray, frame: FrameField, p: np.ndarray,
                      k: float, grid: Grid2D | None = None) -> float:
    """( integral ||D_X u||^{kp(x)} / (kp(x)) dx )^{1/k} by trapezoid rule.

    Falls back to a log-space accumulation when the integrand would
    overflow double precision (large k).
    """
    if k < 1:
        raise ValueError("need k >= 1")
    grid = grid or frame.grid
    g = riemannian_gradient(u, frame)
    n = np.sqrt(g[..., 0] ** 2 + g[..., 1] ** 2)
    kp = k * np.asarray(p, dtype=float)
    w = _trapezoid_weights(grid)
    with np.errstate(divide="ignore"):
        logn = np.where(n > 0.0, np.log(np.maximum(n, 1e-300)), -np.inf)
    logterms = kp * logn - np.log(kp) + np.log(w)
    if np.max(kp * logn) > 600.0:
        return float(math.exp(logsumexp(logterms) / k))
    total = float(np.sum(np.where(n > 0.0, np.exp(logterms), 0.0)))
    return total ** (1.0 / k)


def sup_extremal(u: np.ndarray, frame: FrameField, p: np.ndarray) -> float:
    """max over interior nodes of ||D_X u||^{p(x)}."""
    g = riemannian_gradient(u, frame)
    n = np.sqrt(g[..., 0] ** 2 + g[..., 1] ** 2)
    vals = n[1:-1, 1:-1] ** np.asarray(p, dtype=float)[1:-1, 1:-1]
    return float(np.max(vals))
