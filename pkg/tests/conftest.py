import numpy as np
import pytest

from nclab.model import Params, ProblemConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_params(cfg: ProblemConfig, rng, scale=1.0) -> Params:
    return Params(
        W=scale * rng.standard_normal((cfg.K, cfg.d)),
        H=scale * rng.standard_normal((cfg.d, cfg.N)),
        b=scale * rng.standard_normal(cfg.K),
    )


def benchmark_config(**overrides) -> ProblemConfig:
    base = dict(K=4, n=5, d=6, lambda_w=0.05, lambda_h=0.05, lambda_b=0.1)
    base.update(overrides)
    return ProblemConfig(**base)
