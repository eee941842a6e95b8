import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import benchmark_config, random_params
from nclab.closed_form import global_minimizer
from nclab.landscape import classify_critical_point
from nclab.model import Params, ProblemConfig, params_norm
from nclab.numerics import make_rng
from nclab.optimize import (
    DivergenceError,
    TrainConfig,
    default_step_size,
    init_params,
    multistart_oracle,
    train,
)


class TestTrainConfig:
    def test_defaults(self):
        tcfg = TrainConfig()
        assert tcfg.method == "gd"

    def test_pgd_defaults_filled(self):
        tcfg = TrainConfig(method="pgd")
        assert tcfg.perturb_radius == 1e-3
        assert tcfg.perturb_patience == 1

    def test_pgd_fields_rejected_for_gd(self):
        with pytest.raises(ValueError):
            TrainConfig(method="gd", perturb_radius=0.1)

    def test_bad_method(self):
        with pytest.raises(ValueError):
            TrainConfig(method="adam")


class TestInitParams:
    def test_seed_repeatable(self):
        cfg = benchmark_config()
        a = init_params(cfg, 1.0, make_rng(5))
        b = init_params(cfg, 1.0, make_rng(5))
        assert np.array_equal(a.W, b.W)
        assert np.array_equal(a.H, b.H)
        assert np.array_equal(a.b, b.b)

    def test_zero_scale_rejected(self):
        cfg = benchmark_config()
        with pytest.raises(ValueError):
            init_params(cfg, 0.0, make_rng(0))

    def test_entry_scale(self):
        cfg = ProblemConfig(
            K=40, n=2, d=50, lambda_w=0.1, lambda_h=0.1, lambda_b=0.1
        )
        p = init_params(cfg, 0.7, make_rng(1))
        target = 0.7 / math.sqrt(cfg.d)
        assert abs(p.W.std() - target) <= 0.1 * target
        assert abs(p.H.std() - target) <= 0.1 * target


class TestTrain:
    def test_starts_at_optimum(self):
        cfg = benchmark_config()
        sol = global_minimizer(cfg)
        tcfg = TrainConfig(step_size=0.1, max_iters=100)
        final, trace = train(cfg, tcfg, sol.params())
        assert trace[-1].iteration <= 1
        assert trace[-1].gradient_norm <= tcfg.grad_tol * (
            1.0 + params_norm(final)
        )

    def test_benchmark_reaches_closed_form(self):
        cfg = benchmark_config()  # lambda_w*lambda_h = 0.0025 < 1/80
        sol = global_minimizer(cfg)
        tcfg = TrainConfig(step_size=0.2, max_iters=200_000, trace_every=500)
        init = init_params(cfg, 1.0, make_rng(7))
        final, trace = train(cfg, tcfg, init)
        assert trace[-1].loss == pytest.approx(sol.objective_value, rel=1e-6)
        assert trace[-1].loss >= sol.objective_value - 1e-8

    def test_gd_trace_monotone(self):
        cfg = benchmark_config()
        tcfg = TrainConfig(step_size=0.5, max_iters=2000, trace_every=10)
        _, trace = train(cfg, tcfg, init_params(cfg, 1.0, make_rng(3)))
        losses = [rec.loss for rec in trace]
        assert all(b <= a + 1e-13 * (1 + a) for a, b in zip(losses, losses[1:]))

    def test_momentum_converges(self):
        cfg = benchmark_config()
        sol = global_minimizer(cfg)
        tcfg = TrainConfig(
            method="momentum", step_size=0.1, momentum_coeff=0.9, max_iters=50_000
        )
        final, trace = train(cfg, tcfg, init_params(cfg, 1.0, make_rng(9)))
        assert trace[-1].loss == pytest.approx(sol.objective_value, rel=1e-6)

    def test_pgd_escapes_zero_saddle(self):
        cfg = benchmark_config()
        b0 = 1.0 / (cfg.K * (1.0 + cfg.lambda_b))
        saddle = Params(
            W=np.zeros((cfg.K, cfg.d)),
            H=np.zeros((cfg.d, cfg.N)),
            b=np.full(cfg.K, b0),
        )
        tcfg = TrainConfig(method="pgd", step_size=0.2, max_iters=100_000, seed=13)
        final, _ = train(cfg, tcfg, saddle)
        report = classify_critical_point(cfg, final)
        assert report.classification == "global-minimum"

    def test_divergence_error_names_step(self):
        cfg = benchmark_config()
        tcfg = TrainConfig(method="momentum", step_size=50.0, momentum_coeff=0.95,
                           max_iters=10_000)
        with pytest.raises(DivergenceError, match="step size"):
            train(cfg, tcfg, init_params(cfg, 1.0, make_rng(1)))

    def test_deterministic_traces(self):
        cfg = benchmark_config()
        tcfg = TrainConfig(step_size=0.2, max_iters=500, trace_every=50, seed=21)
        init = init_params(cfg, 1.0, make_rng(21))
        _, t1 = train(cfg, tcfg, init)
        _, t2 = train(cfg, tcfg, init)
        assert t1 == t2

    def test_converged_runs_satisfy_balance(self):
        for seed in range(3):
            cfg = benchmark_config()
            tcfg = TrainConfig(step_size=0.2, max_iters=100_000)
            final, _ = train(cfg, tcfg, init_params(cfg, 1.0, make_rng(seed)))
            from nclab.landscape import balance_residual

            assert balance_residual(cfg, final) <= 1e-6 * cfg.lambda_w * np.sum(
                final.W ** 2
            )

    def test_nc_metrics_collapse_at_convergence(self):
        cfg = benchmark_config(lambda_b=0.01)
        tcfg = TrainConfig(step_size=0.2, max_iters=200_000, grad_tol=1e-9)
        final, trace = train(cfg, tcfg, init_params(cfg, 1.0, make_rng(2)))
        last = trace[-1]
        assert last.nc1 <= 1e-5
        assert last.nc2 <= 1e-5
        assert last.nc3 <= 1e-5


class TestMultistartOracle:
    def test_single_start_reduces_to_train(self):
        cfg = benchmark_config()
        tcfg = TrainConfig(step_size=0.2, max_iters=2000)
        rng = make_rng(77)
        seed = int(make_rng(77).integers(2 ** 62))
        best = multistart_oracle(cfg, 1, tcfg, rng)
        final, _ = train(cfg, replace(tcfg, seed=seed), init_params(cfg, 1.0, make_rng(seed)))
        assert np.array_equal(best.W, final.W)

    def test_best_loss_nonincreasing_in_starts(self):
        from nclab.model import loss

        cfg = benchmark_config(K=3, n=1, d=2)
        tcfg = TrainConfig(step_size=0.2, max_iters=3000, grad_tol=1e-7)
        values = []
        for starts in (1, 2, 4):
            best = multistart_oracle(cfg, starts, tcfg, make_rng(5))
            values.append(loss(cfg, best))
        assert values[1] <= values[0] + 1e-12
        assert values[2] <= values[1] + 1e-12

    def test_matches_closed_form_on_small_configs(self):
        from nclab.model import loss

        tcfg = TrainConfig(step_size=0.0, max_iters=60_000, grad_tol=1e-7,
                           trace_every=10_000)
        for overrides in (dict(K=3, n=1, d=2), dict(K=3, n=2, d=4, lambda_b=1.5)):
            cfg = benchmark_config(**overrides)
            sol = global_minimizer(cfg)
            best = multistart_oracle(cfg, 5, tcfg, make_rng(31))
            assert loss(cfg, best) == pytest.approx(sol.objective_value, rel=1e-6)
