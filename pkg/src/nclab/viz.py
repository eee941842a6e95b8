"""Analytic loss landscape on a polar 2-plane slice.

With the classifier fixed to a simplex ETF and zero bias, a feature
restricted to the plane spanned by two ETF columns is described by its
norm s and its angle theta to the own-class column.  The classifier
response then has three distinct values (own class, the in-plane
neighbor, and the K-2 remaining classes), which makes the per-sample
MSE and CE losses explicit functions of (s, theta).  The K -> infinity
gradient fields of both losses are also available in closed form.

All formulas need K >= 3; K = 2 degenerates the slice (the neighbor
coefficient divides by sqrt(K^2 - 2K) = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np

__all__ = [
    "PolarPoint",
    "LandscapeGrid",
    "feature_from_polar",
    "classifier_outputs",
    "loss_surface_mse",
    "loss_surface_ce",
    "gradient_mse",
    "gradient_ce",
    "gradient_field_limit",
    "emit_grid",
]


@dataclass(frozen=True)
class PolarPoint:
    s: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.s) and math.isfinite(self.theta)):
            raise ValueError("polar coordinates must be finite")
        if self.s < 0:
            raise ValueError("radial coordinate must be nonnegative")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")


@dataclass(frozen=True)
class LandscapeGrid:
    s_values: np.ndarray
    theta_values: np.ndarray
    surfaces: Dict[str, np.ndarray]  # each |s| x |theta|
    K: int
    alpha: float
    M: float
    limit_mode: bool


def _check_k(K: int):
    if K < 3:
        raise ValueError("polar slice formulas require K >= 3")


def _sincos(theta: float):
    """sin/cos with exact values at the lattice points 0, pi/2, pi.

    Float pi/2 is not a zero of math.cos, which would leave formula
    identities at the axes (own-class response at pi/2, the limit field
    (s, alpha*M*s)) off by ~1e-16; the axes are the documented anchor
    points, so they are evaluated exactly.
    """
    if theta == 0.0:
        return 0.0, 1.0
    if theta == math.pi / 2:
        return 1.0, 0.0
    if theta == math.pi:
        return 0.0, -1.0
    return math.sin(theta), math.cos(theta)


def feature_from_polar(K: int, p: PolarPoint, wk, wkp) -> np.ndarray:
    """Feature with norm s and angle theta to wk, inside span{wk, wkp}."""
    _check_k(K)
    wk = np.asarray(wk, dtype=np.float64)
    wkp = np.asarray(wkp, dtype=np.float64)
    root = math.sqrt(K * K - 2.0 * K)
    sin, cos = _sincos(p.theta)
    return p.s * (sin / root + cos) * wk + p.s * (K - 1.0) * sin / root * wkp


def classifier_outputs(K: int, p: PolarPoint):
    """ETF classifier responses: (own class, in-plane neighbor, all others)."""
    _check_k(K)
    sin, cos = _sincos(p.theta)
    own = p.s * cos
    neighbor = p.s * math.sqrt(K * K - 2.0 * K) / (K - 1.0) * sin - p.s * cos / (K - 1.0)
    others = -p.s * math.sqrt(K / (K - 2.0)) / (K - 1.0) * sin - p.s * cos / (K - 1.0)
    return own, neighbor, others


def loss_surface_mse(K: int, alpha: float, M: float, p: PolarPoint) -> float:
    """Per-sample rescaled MSE on the slice (own-class target M, others 0)."""
    _check_k(K)
    sin, cos = _sincos(p.theta)
    g2 = (math.sqrt(K * K - 2.0 * K) * sin - cos) / (K - 1.0)
    g3 = (math.sqrt(K / (K - 2.0)) * sin + cos) / (K - 1.0)
    return (
        0.5 * alpha * (p.s * cos - M) ** 2
        + 0.5 * p.s ** 2 * g2 ** 2
        + 0.5 * p.s ** 2 * (K - 2.0) * g3 ** 2
    )


def _ce_logits(K: int, p: PolarPoint):
    own, neighbor, others = classifier_outputs(K, p)
    return own, neighbor, others


def loss_surface_ce(K: int, p: PolarPoint) -> float:
    """Per-sample cross entropy on the slice, computed with max-subtraction."""
    z1, z2, z3 = _ce_logits(K, p)
    m = max(z1, z2, z3)
    lse = m + math.log(
        math.exp(z1 - m) + math.exp(z2 - m) + (K - 2.0) * math.exp(z3 - m)
    )
    return lse - z1


def gradient_mse(K: int, alpha: float, M: float, p: PolarPoint):
    """(d/ds, d/dtheta) of loss_surface_mse at finite K."""
    _check_k(K)
    sin, cos = _sincos(p.theta)
    a2 = math.sqrt(K * K - 2.0 * K)
    a3 = math.sqrt(K / (K - 2.0))
    g2 = (a2 * sin - cos) / (K - 1.0)
    g3 = (a3 * sin + cos) / (K - 1.0)
    dg2 = (a2 * cos + sin) / (K - 1.0)
    dg3 = (a3 * cos - sin) / (K - 1.0)
    d_s = alpha * (p.s * cos - M) * cos + p.s * (g2 ** 2 + (K - 2.0) * g3 ** 2)
    d_theta = -alpha * (p.s * cos - M) * p.s * sin + p.s ** 2 * (
        g2 * dg2 + (K - 2.0) * g3 * dg3
    )
    return d_s, d_theta


def gradient_ce(K: int, p: PolarPoint):
    """(d/ds, d/dtheta) of loss_surface_ce at finite K."""
    _check_k(K)
    sin, cos = _sincos(p.theta)
    a2 = math.sqrt(K * K - 2.0 * K)
    a3 = math.sqrt(K / (K - 2.0))
    g2 = (a2 * sin - cos) / (K - 1.0)
    g3 = (a3 * sin + cos) / (K - 1.0)
    dg2 = (a2 * cos + sin) / (K - 1.0)
    dg3 = (a3 * cos - sin) / (K - 1.0)
    z = np.array([p.s * cos, p.s * g2, -p.s * g3])
    weights = np.array([1.0, 1.0, K - 2.0])
    e = weights * np.exp(z - z.max())
    prob = e / e.sum()
    dz_s = np.array([cos, g2, -g3])
    dz_t = np.array([-p.s * sin, p.s * dg2, -p.s * dg3])
    return float(prob @ dz_s - dz_s[0]), float(prob @ dz_t - dz_t[0])


def gradient_field_limit(alpha: float, M: float, p: PolarPoint, which: str):
    """K -> infinity gradient field of the slice loss, (d_s, d_theta)."""
    sin, cos = _sincos(p.theta)
    if which == "mse":
        d_s = p.s + (alpha - 1.0) * p.s * cos ** 2 - alpha * M * cos
        d_theta = alpha * M * p.s * sin - (alpha - 1.0) * p.s ** 2 * sin * cos
        return d_s, d_theta
    if which == "ce":
        denom = math.exp(sin) + math.exp(cos)
        d_s = math.exp(sin) * (sin - cos) / denom
        d_theta = p.s * math.exp(sin) * (sin + cos) / denom
        return d_s, d_theta
    raise ValueError(f"unknown field {which!r}")


def emit_grid(
    K: int,
    alpha: float,
    M: float,
    s_range,
    theta_range,
    resolution,
    limit_mode: bool = False,
) -> LandscapeGrid:
    """Evaluate all four surfaces on a uniform (s, theta) grid.

    ``resolution`` is (n_s, n_theta) or a single count for both axes.
    With ``limit_mode`` the gradient surfaces use the K -> infinity
    fields; otherwise they are the exact finite-K slice gradients.
    """
    _check_k(K)
    if np.isscalar(resolution):
        resolution = (int(resolution), int(resolution))
    ns, nt = resolution
    if ns < 2 or nt < 2:
        raise ValueError("resolution must be at least 2 per axis")
    s_lo, s_hi = map(float, s_range)
    t_lo, t_hi = map(float, theta_range)
    if not (s_lo < s_hi and t_lo < t_hi):
        raise ValueError("ranges must be nonempty")

    s_values = np.linspace(s_lo, s_hi, ns)
    theta_values = np.linspace(t_lo, t_hi, nt)
    names = (
        "loss_mse",
        "loss_ce",
        "grad_s_mse",
        "grad_theta_mse",
        "grad_s_ce",
        "grad_theta_ce",
    )
    surfaces = {name: np.zeros((ns, nt)) for name in names}
    for i, s in enumerate(s_values):
        for j, theta in enumerate(theta_values):
            p = PolarPoint(s=float(s), theta=float(theta))
            surfaces["loss_mse"][i, j] = loss_surface_mse(K, alpha, M, p)
            surfaces["loss_ce"][i, j] = loss_surface_ce(K, p)
            if limit_mode:
                gs, gt = gradient_field_limit(alpha, M, p, "mse")
                cs, ct = gradient_field_limit(alpha, M, p, "ce")
            else:
                gs, gt = gradient_mse(K, alpha, M, p)
                cs, ct = gradient_ce(K, p)
            surfaces["grad_s_mse"][i, j] = gs
            surfaces["grad_theta_mse"][i, j] = gt
            surfaces["grad_s_ce"][i, j] = cs
            surfaces["grad_theta_ce"][i, j] = ct
    return LandscapeGrid(
        s_values=s_values,
        theta_values=theta_values,
        surfaces=surfaces,
        K=K,
        alpha=alpha,
        M=M,
        limit_mode=limit_mode,
    )
