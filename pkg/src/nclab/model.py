"""Problem instance and (rescaled) MSE objective for the unconstrained
feature model.

A problem is a K-class balanced classification task whose last-layer
features are free variables: the decision variables are the classifier
``W`` (K x d), the feature matrix ``H`` (d x N, class-blocked with n
columns per class), and the bias ``b`` (length K).  The objective is

    (1/2N) || sqrt(Omega) . (W H + b 1^T - M Y) ||_F^2
      + (lw/2)||W||^2 + (lh/2)||H||^2 + (lb/2)||b||^2

where Omega weights the true-class entry of each column by ``alpha`` and
all other entries by 1.  ``alpha = M = 1`` recovers the vanilla loss.
Omega is never materialized; the weighted residual is assembled from the
class-blocked layout in O(KN).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ProblemConfig",
    "Params",
    "ClassStats",
    "build_labels",
    "loss",
    "vanilla_loss",
    "gradient",
    "class_stats",
    "params_norm",
    "params_dot",
]


@dataclass(frozen=True)
class ProblemConfig:
    """Dimensions, penalties, and rescaling of one problem instance."""

    K: int
    n: int
    d: int
    lambda_w: float
    lambda_h: float
    lambda_b: float
    alpha: float = 1.0
    M: float = 1.0

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be at least 1")
        if min(self.lambda_w, self.lambda_h, self.lambda_b) <= 0:
            raise ValueError("all penalties must be strictly positive")
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.M <= 0:
            raise ValueError("M must be positive")

    @property
    def N(self) -> int:
        return self.n * self.K

    @property
    def is_rescaled(self) -> bool:
        return self.alpha != 1.0 or self.M != 1.0

    def vanilla(self) -> "ProblemConfig":
        return replace(self, alpha=1.0, M=1.0)


@dataclass(frozen=True)
class Params:
    """Optimization state (W, H, b)."""

    W: np.ndarray  # (K, d)
    H: np.ndarray  # (d, N)
    b: np.ndarray  # (K,)

    @staticmethod
    def zeros(cfg: ProblemConfig) -> "Params":
        return Params(
            W=np.zeros((cfg.K, cfg.d)),
            H=np.zeros((cfg.d, cfg.N)),
            b=np.zeros(cfg.K),
        )

    def check_shapes(self, cfg: ProblemConfig):
        if self.W.shape != (cfg.K, cfg.d):
            raise ValueError(f"W has shape {self.W.shape}, expected {(cfg.K, cfg.d)}")
        if self.H.shape != (cfg.d, cfg.N):
            raise ValueError(f"H has shape {self.H.shape}, expected {(cfg.d, cfg.N)}")
        if self.b.shape != (cfg.K,):
            raise ValueError(f"b has shape {self.b.shape}, expected {(cfg.K,)}")


@dataclass(frozen=True)
class ClassStats:
    """Per-class feature means and the centered class-mean matrix."""

    class_means: np.ndarray           # (d, K)
    global_mean: np.ndarray           # (d,)
    classifier_mean: np.ndarray       # (d,) mean of the rows of W
    centered_class_means: np.ndarray  # (d, K), columns sum to zero


def build_labels(cfg: ProblemConfig) -> np.ndarray:
    """Class-blocked one-hot label matrix Y of shape (K, N)."""
    return np.kron(np.eye(cfg.K), np.ones((1, cfg.n)))


def _column_classes(cfg: ProblemConfig) -> np.ndarray:
    return np.repeat(np.arange(cfg.K), cfg.n)


def _residual(cfg: ProblemConfig, params: Params) -> np.ndarray:
    """Unweighted residual W H + b 1^T - M Y."""
    r = params.W @ params.H + params.b[:, None]
    cols = _column_classes(cfg)
    r[cols, np.arange(cfg.N)] -= cfg.M
    return r


def loss(cfg: ProblemConfig, params: Params) -> float:
    """Rescaled MSE objective; alpha = M = 1 gives the vanilla loss."""
    params.check_shapes(cfg)
    r = _residual(cfg, params)
    fit = float(np.sum(r * r))
    if cfg.alpha != 1.0:
        true = r[_column_classes(cfg), np.arange(cfg.N)]
        fit += (cfg.alpha - 1.0) * float(np.sum(true * true))
    return (
        fit / (2.0 * cfg.N)
        + 0.5 * cfg.lambda_w * float(np.sum(params.W * params.W))
        + 0.5 * cfg.lambda_h * float(np.sum(params.H * params.H))
        + 0.5 * cfg.lambda_b * float(np.sum(params.b * params.b))
    )


def vanilla_loss(cfg: ProblemConfig, params: Params) -> float:
    """Plain (alpha = M = 1) objective, coded without the Omega machinery."""
    params.check_shapes(cfg)
    r = params.W @ params.H + params.b[:, None]
    r[_column_classes(cfg), np.arange(cfg.N)] -= 1.0
    return (
        float(np.sum(r * r)) / (2.0 * cfg.N)
        + 0.5 * cfg.lambda_w * float(np.sum(params.W * params.W))
        + 0.5 * cfg.lambda_h * float(np.sum(params.H * params.H))
        + 0.5 * cfg.lambda_b * float(np.sum(params.b * params.b))
    )


def _weighted_residual(cfg: ProblemConfig, params: Params) -> np.ndarray:
    """Omega-weighted residual: alpha on each column's true-class entry."""
    r = _residual(cfg, params)
    if cfg.alpha != 1.0:
        cols = _column_classes(cfg)
        r[cols, np.arange(cfg.N)] *= cfg.alpha
    return r


def gradient(cfg: ProblemConfig, params: Params) -> Params:
    """Exact gradient of :func:`loss` with respect to (W, H, b)."""
    params.check_shapes(cfg)
    r = _weighted_residual(cfg, params)
    gw = r @ params.H.T / cfg.N + cfg.lambda_w * params.W
    gh = params.W.T @ r / cfg.N + cfg.lambda_h * params.H
    gb = r.sum(axis=1) / cfg.N + cfg.lambda_b * params.b
    return Params(W=gw, H=gh, b=gb)


def class_stats(cfg: ProblemConfig, params: Params) -> ClassStats:
    """Class means, global mean, classifier mean, and centered class means."""
    params.check_shapes(cfg)
    means = params.H.reshape(cfg.d, cfg.K, cfg.n).mean(axis=2)
    global_mean = means.mean(axis=1)
    return ClassStats(
        class_means=means,
        global_mean=global_mean,
        classifier_mean=params.W.mean(axis=0),
        centered_class_means=means - global_mean[:, None],
    )


def params_norm(p: Params) -> float:
    """Euclidean norm over the stacked (W, H, b) coordinates."""
    return float(
        np.sqrt(np.sum(p.W * p.W) + np.sum(p.H * p.H) + np.sum(p.b * p.b))
    )


def params_dot(a: Params, b: Params) -> float:
    return float(
        np.sum(a.W * b.W) + np.sum(a.H * b.H) + np.sum(a.b * b.b)
    )
