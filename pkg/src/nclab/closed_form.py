"""Exact global minimizers of the vanilla objective.

The vanilla problem factors through a shrinkage problem on the shifted
label matrix Ytil = Y - b 1^T: at any optimal pair, W H equals the
singular-value-shrunk part of Ytil with threshold N*sqrt(lw*lh), the
optimal bias is a multiple of the all-ones vector with a closed-form
scalar, and the class-mean Gram takes a regime-specific analytic shape
(ETF for d = K-1 and for d >= K with small bias penalty, a rank-d ETF
compression for d < K-1, and an ETF-with-shifted-diagonal for d >= K
with large bias penalty).

Everything here is constructed deterministically: the orthonormal basis
pairing the smallest singular value with the all-ones direction is built
by a Householder reflection, never recovered from a numeric SVD, and the
free rotation of the factors is fixed to the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ProblemConfig, Params, build_labels
from .numerics import thin_svd

__all__ = [
    "SpectralSummary",
    "ClosedFormSolution",
    "REGIMES",
    "shrinkage_minimizer",
    "spectrum_shifted_labels",
    "optimal_bias",
    "global_minimizer",
    "etf",
    "ones_complement_basis",
]

REGIMES = (
    "collapsed-zero",
    "d-lt-Km1",
    "d-eq-Km1",
    "d-ge-K-small-lb",
    "d-ge-K-large-lb",
)


@dataclass(frozen=True)
class SpectralSummary:
    """Singular structure of the shifted label matrix Y - b 1^T."""

    singular_values: np.ndarray  # (K,), nonincreasing
    left_vectors: np.ndarray     # (K, K), orthonormal
    bias_used: np.ndarray        # (K,)


@dataclass(frozen=True)
class ClosedFormSolution:
    """Constructed global minimizer with its objective and Gram prediction."""

    W_star: np.ndarray           # (K, d)
    H_star: np.ndarray           # (d, N)
    b_star_scalar: float
    objective_value: float
    predicted_gram: np.ndarray   # (K, K) Gram of the class means
    regime: str
    shrinkage_levels: np.ndarray  # (min(d, K),)

    def params(self) -> Params:
        K = self.W_star.shape[0]
        return Params(
            W=self.W_star.copy(),
            H=self.H_star.copy(),
            b=np.full(K, self.b_star_scalar),
        )


def ones_complement_basis(K: int) -> np.ndarray:
    """Orthonormal K x K basis whose last column is 1/sqrt(K) * ones.

    The first K-1 columns span the orthogonal complement of the all-ones
    vector.  Built from a single Householder reflection, so the result is
    deterministic and exactly orthogonal up to rounding.
    """
    x = np.full(K, 1.0 / math.sqrt(K))
    v = x - np.eye(K)[:, 0]
    q = np.eye(K) - 2.0 * np.outer(v, v) / float(v @ v)
    return np.concatenate([q[:, 1:], q[:, :1]], axis=1)


def shrinkage_minimizer(y_tilde, lambda_w: float, lambda_h: float, d: int):
    """Global minimizer of the unnormalized factored shrinkage problem

        xi(W, H) = 0.5 ||W H - Ytil||_F^2 + (lw/2)||W||_F^2 + (lh/2)||H||_F^2

    Returns ``(W, H, xi_star)`` with W of shape (K, d) and H of shape
    (d, N).  The product W H is the singular-value shrinkage of Ytil at
    threshold sqrt(lw*lh), and the factor amplitudes are split so that
    ||h^i||^2 = (lw/lh) ||w_i||^2 holds exactly (the balance condition at
    critical points).  Shrinkage levels that are exactly zero drop their
    triple from the construction.
    """
    y_tilde = np.asarray(y_tilde, dtype=np.float64)
    if min(lambda_w, lambda_h) <= 0:
        raise ValueError("penalties must be strictly positive")
    if d < 1:
        raise ValueError("d must be at least 1")
    K, N = y_tilde.shape
    tau = math.sqrt(lambda_w * lambda_h)

    svd = thin_svd(y_tilde)
    sigma = svd.singular_values
    m = min(d, sigma.size)
    eta = np.maximum(sigma[:m] - tau, 0.0)

    amp = np.sqrt(eta)
    w_scale = (lambda_h / lambda_w) ** 0.25
    h_scale = (lambda_w / lambda_h) ** 0.25
    W = np.zeros((K, d))
    H = np.zeros((d, N))
    keep = eta > 0.0
    W[:, : m][:, keep] = w_scale * svd.left_vectors[:, :m][:, keep] * amp[keep]
    H[: m][keep] = h_scale * amp[keep, None] * svd.right_vectors[:, :m].T[keep]

    xi_star = float(
        0.5 * np.sum((sigma[:m] - eta) ** 2)
        + tau * np.sum(eta)
        + 0.5 * np.sum(sigma[m:] ** 2)
    )
    return W, H, xi_star


def spectrum_shifted_labels(cfg: ProblemConfig, b) -> SpectralSummary:
    """Singular values and left vectors of Y - b 1_N^T.

    For b = (c/sqrt(K)) * ones with c <= 1/sqrt(K) the spectrum is
    sqrt(n) with multiplicity K-1 and sqrt(n) (1 - sqrt(K) c) paired
    with the all-ones direction.
    """
    b = np.asarray(b, dtype=np.float64).reshape(cfg.K)
    svd = thin_svd(build_labels(cfg) - b[:, None])
    return SpectralSummary(
        singular_values=svd.singular_values,
        left_vectors=svd.left_vectors,
        bias_used=b,
    )


def _coupling(cfg: ProblemConfig) -> float:
    """sqrt(K N lw lh): >= 1 exactly when the factors collapse to zero."""
    return math.sqrt(cfg.K * cfg.N * cfg.lambda_w * cfg.lambda_h)


def optimal_bias(cfg: ProblemConfig):
    """Optimal bias scalar b* (the minimizer has bias b* * ones) and regime.

    For d < K, and whenever the factors collapse to zero, the bias solves
    a single quadratic and equals 1/(K(lb+1)).  For d >= K with active
    factors the objective is piecewise quadratic in b and switches branch
    at lb = s/(1-s) with s = sqrt(K N lw lh); past the threshold
    b* = sqrt(n lw lh)/lb.  The two formulas agree at the threshold.
    """
    s = _coupling(cfg)
    small = 1.0 / (cfg.K * (cfg.lambda_b + 1.0))
    if s >= 1.0:
        # Collapsed factors: every singular term is quadratic in b, and the
        # large-lb branch condition s/(1-s) is vacuous here (s >= 1 is
        # equivalent to lw*lh >= 1/(NK), so the branches never conflict).
        return small, "collapsed-zero"
    if cfg.d < cfg.K - 1:
        return small, "d-lt-Km1"
    if cfg.d == cfg.K - 1:
        return small, "d-eq-Km1"
    threshold = s / (1.0 - s)
    if cfg.lambda_b <= threshold:
        return small, "d-ge-K-small-lb"
    return math.sqrt(cfg.n * cfg.lambda_w * cfg.lambda_h) / cfg.lambda_b, "d-ge-K-large-lb"


def global_minimizer(cfg: ProblemConfig) -> ClosedFormSolution:
    """Closed-form global minimizer of the vanilla objective.

    Only defined for alpha = M = 1; rescaled configurations have no
    closed form here and are rejected.
    """
    if cfg.is_rescaled:
        raise ValueError("closed form requires alpha = M = 1")

    b_star, regime = optimal_bias(cfg)
    assert b_star <= 1.0 / cfg.K + 1e-15

    K, n, d, N = cfg.K, cfg.n, cfg.d, cfg.N
    lam_tilde = N * math.sqrt(cfg.lambda_w * cfg.lambda_h)

    # Spectrum of Y - b* 1^T for a bias aligned with the ones vector:
    # sqrt(n) with multiplicity K-1, then sqrt(n)(1 - K b*) paired with
    # the all-ones left vector, enforced by construction.
    basis = ones_complement_basis(K)
    sigma = np.full(K, math.sqrt(n))
    sigma[K - 1] = math.sqrt(n) * (1.0 - K * b_star)
    eta = np.maximum(sigma - lam_tilde, 0.0)

    m = min(d, K)
    amp = np.sqrt(eta[:m])
    w_scale = (cfg.lambda_h / cfg.lambda_w) ** 0.25
    h_scale = (cfg.lambda_w / cfg.lambda_h) ** 0.25

    W = np.zeros((K, d))
    W[:, :m] = w_scale * basis[:, :m] * amp

    # Right factor: each class repeats its (1/sqrt(n))-scaled basis row.
    vt = np.repeat(basis[:, :m].T, n, axis=1) / math.sqrt(n)
    H = np.zeros((d, cfg.N))
    H[:m] = h_scale * amp[:, None] * vt

    xi_star = float(
        0.5 * np.sum((sigma[:m] - eta[:m]) ** 2)
        + lam_tilde * np.sum(eta[:m])
        + 0.5 * np.sum(sigma[m:] ** 2)
    )
    objective = 0.5 * cfg.lambda_b * K * b_star ** 2 + xi_star / N

    means = h_scale * basis[:, :m] * (amp / math.sqrt(n))  # class means, (K, m) rows
    gram = means @ means.T

    if regime == "collapsed-zero":
        W[:] = 0.0
        H[:] = 0.0

    return ClosedFormSolution(
        W_star=W,
        H_star=H,
        b_star_scalar=b_star,
        objective_value=objective,
        predicted_gram=gram,
        regime=regime,
        shrinkage_levels=eta[:m],
    )


def etf(K: int, d: int) -> np.ndarray:
    """Simplex ETF: K columns in R^d with unit-diagonal Gram and pairwise
    inner products -1/(K-1).  Requires d >= K-1."""
    if d < K - 1:
        raise ValueError(f"simplex ETF needs d >= K-1, got d={d}, K={K}")
    center = np.eye(K) - np.ones((K, K)) / K
    if d >= K:
        p = np.zeros((d, K))
        p[:K, :K] = np.eye(K)
    else:
        p = ones_complement_basis(K)[:, : K - 1].T
    return math.sqrt(K / (K - 1.0)) * (p @ center)
