"""Neural-collapse measurement suite.

nc1 measures within-class variability against between-class spread,
nc2 compares the classifier Gram to the simplex-ETF Gram, nc3 measures
self-duality between the classifier and the centered class means, and
the remaining metrics characterize per-class feature dimensionality,
per-sample margins, and agreement between the linear decision rule and
the nearest-class-center rule.

nc2/nc3 are only defined for d >= K-1; for narrower feature spaces they
are reported as absent rather than redefined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ClassStats, Params, ProblemConfig, class_stats
from .numerics import nuclear_norm, pinv

__all__ = [
    "MetricsReport",
    "DegenerateInputError",
    "UnsupportedDimensionError",
    "nc1",
    "nc2",
    "nc3",
    "numerical_rank",
    "cosine_margins",
    "ncc_agreement",
    "compute_report",
]

_ZERO_TOL = 1e-14


class DegenerateInputError(ValueError):
    pass


class UnsupportedDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    nc1: float
    nc2: Optional[float]  # None when d < K-1
    nc3: Optional[float]  # None when d < K-1
    numerical_rank: float
    cosine_margins: np.ndarray  # (N,), ascending
    ncc_agreement: float
    balance_residual: float


def _covariances(cfg: ProblemConfig, params: Params, stats: ClassStats):
    centered = params.H - np.repeat(stats.class_means, cfg.n, axis=1)
    sigma_w = centered @ centered.T / cfg.N
    dev = stats.centered_class_means
    sigma_b = dev @ dev.T / cfg.K
    return sigma_w, sigma_b


def nc1(cfg: ProblemConfig, params: Params) -> float:
    """(1/K) trace(Sigma_W pinv(Sigma_B)).

    When the between-class covariance vanishes this is 0/0; by convention
    the result is 0 if the within-class covariance also vanishes and +inf
    otherwise.
    """
    params.check_shapes(cfg)
    sigma_w, sigma_b = _covariances(cfg, params, class_stats(cfg, params))
    if float(np.linalg.norm(sigma_b)) <= _ZERO_TOL:
        return 0.0 if float(np.linalg.norm(sigma_w)) <= _ZERO_TOL else math.inf
    return float(np.trace(sigma_w @ pinv(sigma_b))) / cfg.K


def _etf_gram(K: int) -> np.ndarray:
    return (np.eye(K) - np.ones((K, K)) / K) / math.sqrt(K - 1.0)


def nc2(cfg: ProblemConfig, params: Params) -> float:
    """Distance of the unit-energy classifier Gram from the ETF Gram."""
    params.check_shapes(cfg)
    if cfg.d < cfg.K - 1:
        raise UnsupportedDimensionError("nc2 requires d >= K-1")
    gram = params.W @ params.W.T
    scale = float(np.linalg.norm(gram))
    if scale == 0.0:
        raise DegenerateInputError("classifier Gram is zero")
    return float(np.linalg.norm(gram / scale - _etf_gram(cfg.K)))


def nc3(cfg: ProblemConfig, params: Params) -> float:
    """Distance of the unit-energy W Hbar from the ETF Gram (self-duality)."""
    params.check_shapes(cfg)
    if cfg.d < cfg.K - 1:
        raise UnsupportedDimensionError("nc3 requires d >= K-1")
    product = params.W @ class_stats(cfg, params).centered_class_means
    scale = float(np.linalg.norm(product))
    if scale == 0.0:
        raise DegenerateInputError("W Hbar is zero")
    return float(np.linalg.norm(product / scale - _etf_gram(cfg.K)))


def numerical_rank(cfg: ProblemConfig, params: Params) -> float:
    """Average over classes of (nuclear norm)^2 / (Frobenius norm)^2 of H_k."""
    params.check_shapes(cfg)
    total = 0.0
    for k in range(cfg.K):
        block = params.H[:, k * cfg.n : (k + 1) * cfg.n]
        fro2 = float(np.sum(block * block))
        if fro2 <= 0.0:
            raise DegenerateInputError(f"class block {k} is zero")
        total += nuclear_norm(block) ** 2 / fro2
    return total / cfg.K


def cosine_margins(cfg: ProblemConfig, params: Params) -> np.ndarray:
    """Per-sample centered cosine margins, sorted ascending.

    The margin of sample (k, i) is the cosine to its own centered
    classifier row minus the best rival cosine.  Samples for which any
    centered vector degenerates to zero get a margin of 0 so the
    distribution always has N entries.
    """
    params.check_shapes(cfg)
    stats = class_stats(cfg, params)
    rows = params.W - stats.classifier_mean  # (K, d), centered rows
    feats = params.H - stats.global_mean[:, None]  # (d, N)
    row_norms = np.linalg.norm(rows, axis=1)
    feat_norms = np.linalg.norm(feats, axis=0)
    labels = np.repeat(np.arange(cfg.K), cfg.n)

    margins = np.zeros(cfg.N)
    if np.all(row_norms > _ZERO_TOL):
        defined = feat_norms > _ZERO_TOL
        safe = np.where(defined, feat_norms, 1.0)
        cosines = (rows @ feats) / np.outer(row_norms, safe)
        own = cosines[labels, np.arange(cfg.N)]
        rivals = cosines.copy()
        rivals[labels, np.arange(cfg.N)] = -math.inf
        margins[defined] = (own - rivals.max(axis=0))[defined]
    return np.sort(margins)


def ncc_agreement(cfg: ProblemConfig, params: Params) -> float:
    """Fraction of samples where the linear rule argmax_j <w^j, h> + b_j
    agrees with the nearest-class-center rule (ties to the lowest index)."""
    params.check_shapes(cfg)
    stats = class_stats(cfg, params)
    scores = params.W @ params.H + params.b[:, None]
    linear_pick = scores.argmax(axis=0)
    diffs = params.H[:, None, :] - stats.class_means[:, :, None]  # (d, K, N)
    dists = np.linalg.norm(diffs, axis=0)
    center_pick = dists.argmin(axis=0)
    return float(np.mean(linear_pick == center_pick))


def compute_report(cfg: ProblemConfig, params: Params) -> MetricsReport:
    """All metrics in one pass; absent/degenerate entries become None/nan."""
    from .landscape import balance_residual  # local import to avoid a cycle

    has_etf_metrics = cfg.d >= cfg.K - 1
    try:
        rank = numerical_rank(cfg, params)
    except DegenerateInputError:
        rank = math.nan

    def _guarded(fn):
        if not has_etf_metrics:
            return None
        try:
            return fn(cfg, params)
        except DegenerateInputError:
            return math.nan

    return MetricsReport(
        nc1=nc1(cfg, params),
        nc2=_guarded(nc2),
        nc3=_guarded(nc3),
        numerical_rank=rank,
        cosine_margins=cosine_margins(cfg, params),
        ncc_agreement=ncc_agreement(cfg, params),
        balance_residual=balance_residual(cfg, params),
    )
