"""Deterministic full-batch trainers driving Params to the global optimum.

Three methods: plain gradient descent with monotone step halving,
heavy-ball momentum, and perturbed gradient descent (pgd) which kicks
the iterate off strict saddles with a small uniform-ball perturbation
whenever the gradient is tiny but the point does not match the
closed-form optimum.  Every run is seeded and bitwise reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import metrics as metrics_mod
from .landscape import classify_critical_point
from .model import Params, ProblemConfig, build_labels, params_norm
from .numerics import make_rng, thin_svd

__all__ = [
    "TrainConfig",
    "TraceRecord",
    "DivergenceError",
    "default_step_size",
    "init_params",
    "train",
    "multistart_oracle",
]

_DIVERGENCE_LIMIT = 1e12


class DivergenceError(RuntimeError):
    """Loss blew past the divergence limit; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(frozen=True)
class TrainConfig:
    method: str = "gd"  # gd | momentum | pgd
    step_size: float = 0.0  # <= 0 selects default_step_size(cfg)
    momentum_coeff: float = 0.0
    max_iters: int = 200_000
    grad_tol: float = 1e-8
    perturb_radius: Optional[float] = None  # pgd only
    perturb_patience: Optional[int] = None  # pgd only
    seed: int = 0
    trace_every: int = 100

    def __post_init__(self):
        if self.method not in ("gd", "momentum", "pgd"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 <= self.momentum_coeff < 1.0:
            raise ValueError("momentum_coeff must lie in [0, 1)")
        if self.max_iters < 1 or self.trace_every < 1:
            raise ValueError("max_iters and trace_every must be positive")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.method == "pgd":
            if self.perturb_radius is None or self.perturb_patience is None:
                object.__setattr__(self, "perturb_radius", self.perturb_radius or 1e-3)
                object.__setattr__(self, "perturb_patience", self.perturb_patience or 1)
            if self.perturb_radius <= 0 or self.perturb_patience < 1:
                raise ValueError("pgd needs positive perturb_radius and patience")
        elif self.perturb_radius is not None or self.perturb_patience is not None:
            raise ValueError("perturb fields are pgd-only")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    loss: float
    gradient_norm: float
    nc1: float
    nc2: float
    nc3: float
    numerical_rank: float
    balance_residual: float


def default_step_size(cfg: ProblemConfig) -> float:
    """0.2 / (1 + sigma_1(Y)^2 / N), a crude curvature bound for the fit term."""
    sigma1 = float(thin_svd(build_labels(cfg)).singular_values[0])
    return 0.2 / (1.0 + sigma1 ** 2 / cfg.N)


def init_params(cfg: ProblemConfig, scale: float, rng) -> Params:
    """Gaussian init: std scale/sqrt(d) for W and H entries, scale for b."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    sd = scale / math.sqrt(cfg.d)
    return Params(
        W=sd * rng.standard_normal((cfg.K, cfg.d)),
        H=sd * rng.standard_normal((cfg.d, cfg.N)),
        b=scale * rng.standard_normal(cfg.K),
    )


def _loss_and_gradient(cfg: ProblemConfig, p: Params):
    """Loss and gradient sharing one residual evaluation."""
    cols = np.repeat(np.arange(cfg.K), cfg.n)
    idx = np.arange(cfg.N)
    r = p.W @ p.H + p.b[:, None]
    r[cols, idx] -= cfg.M
    fit = float(np.sum(r * r))
    if cfg.alpha != 1.0:
        true = r[cols, idx]
        fit += (cfg.alpha - 1.0) * float(np.sum(true * true))
        r[cols, idx] *= cfg.alpha
    value = (
        fit / (2.0 * cfg.N)
        + 0.5 * cfg.lambda_w * float(np.sum(p.W * p.W))
        + 0.5 * cfg.lambda_h * float(np.sum(p.H * p.H))
        + 0.5 * cfg.lambda_b * float(np.sum(p.b * p.b))
    )
    grad = Params(
        W=r @ p.H.T / cfg.N + cfg.lambda_w * p.W,
        H=p.W.T @ r / cfg.N + cfg.lambda_h * p.H,
        b=r.sum(axis=1) / cfg.N + cfg.lambda_b * p.b,
    )
    return value, grad


def _trace_record(cfg, it, value, gn, p: Params) -> TraceRecord:
    rep = metrics_mod.compute_report(cfg, p)
    return TraceRecord(
        iteration=it,
        loss=value,
        gradient_norm=gn,
        nc1=rep.nc1,
        nc2=math.nan if rep.nc2 is None else rep.nc2,
        nc3=math.nan if rep.nc3 is None else rep.nc3,
        numerical_rank=rep.numerical_rank,
        balance_residual=rep.balance_residual,
    )


def train(cfg: ProblemConfig, tcfg: TrainConfig, init: Params):
    """Run one full-batch training loop.

    Returns ``(final_params, trace)``.  Raises :class:`DivergenceError`
    when the loss exceeds 1e12.
    """
    init.check_shapes(cfg)
    step = tcfg.step_size if tcfg.step_size > 0 else default_step_size(cfg)
    rng = make_rng(tcfg.seed)
    x = Params(W=init.W.copy(), H=init.H.copy(), b=init.b.copy())
    vel = Params(W=np.zeros_like(x.W), H=np.zeros_like(x.H), b=np.zeros_like(x.b))
    trace: list[TraceRecord] = []
    saddle_checks = 0

    it = 0
    while it < tcfg.max_iters:
        value, grad = _loss_and_gradient(cfg, x)
        gn = params_norm(grad)
        if it % tcfg.trace_every == 0:
            trace.append(_trace_record(cfg, it, value, gn, x))
        if value > _DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"loss exceeded {_DIVERGENCE_LIMIT:g} at iteration {it} "
                f"with step size {step:g}",
                trace=trace,
            )

        if gn <= tcfg.grad_tol * (1.0 + params_norm(x)):
            if tcfg.method != "pgd":
                break
            report = classify_critical_point(cfg, x)
            if report.classification == "global-minimum":
                break
            saddle_checks += 1
            if saddle_checks >= tcfg.perturb_patience:
                radius = tcfg.perturb_radius * (1.0 + params_norm(x))
                x = _perturb(x, radius, rng)
                saddle_checks = 0
            it += 1
            continue

        if tcfg.method == "momentum":
            vel = Params(
                W=tcfg.momentum_coeff * vel.W - step * grad.W,
                H=tcfg.momentum_coeff * vel.H - step * grad.H,
                b=tcfg.momentum_coeff * vel.b - step * grad.b,
            )
            x = Params(W=x.W + vel.W, H=x.H + vel.H, b=x.b + vel.b)
        else:
            # gd / pgd descent step: halve the step until the loss does not
            # increase beyond rounding noise, keeping the trace monotone.
            # (Near the optimum true per-step improvements drop below the
            # evaluation noise, so a strict comparison would stall.)
            slack = 1e-14 * (1.0 + abs(value))
            while True:
                cand = Params(
                    W=x.W - step * grad.W,
                    H=x.H - step * grad.H,
                    b=x.b - step * grad.b,
                )
                cand_value, _ = _loss_and_gradient(cfg, cand)
                if cand_value <= value + slack or step < 1e-18:
                    break
                step *= 0.5
            x = cand
        it += 1

    value, grad = _loss_and_gradient(cfg, x)
    gn = params_norm(grad)
    if not trace or trace[-1].iteration != it:
        trace.append(_trace_record(cfg, it, value, gn, x))
    return x, trace


def _perturb(x: Params, radius: float, rng) -> Params:
    """Uniform draw from the radius-ball over the stacked coordinates."""
    dW = rng.standard_normal(x.W.shape)
    dH = rng.standard_normal(x.H.shape)
    db = rng.standard_normal(x.b.shape)
    norm = math.sqrt(np.sum(dW * dW) + np.sum(dH * dH) + np.sum(db * db))
    dim = x.W.size + x.H.size + x.b.size
    r = radius * rng.uniform() ** (1.0 / dim) / norm
    return Params(W=x.W + r * dW, H=x.H + r * dH, b=x.b + r * db)


def multistart_oracle(cfg: ProblemConfig, starts: int, tcfg: TrainConfig, rng):
    """Best-of-N trained parameters by final loss, with derived seeds."""
    if starts < 1:
        raise ValueError("starts must be at least 1")
    best, best_value = None, math.inf
    for _ in range(starts):
        child_seed = int(rng.integers(2 ** 62))
        init = init_params(cfg, 1.0, make_rng(child_seed))
        final, _ = train(cfg, replace(tcfg, seed=child_seed), init)
        value, _ = _loss_and_gradient(cfg, final)
        if value < best_value:
            best, best_value = final, value
    return best
