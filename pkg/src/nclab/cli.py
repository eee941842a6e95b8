"""Command-line front end with reproducible file outputs.

Subcommands: solve (closed-form minimizer), train (iterative run with a
metric trace), probe (critical-point report), landscape (polar slice
grids), and sweep (one-axis parameter scans).  Every run writes the data
files plus a manifest listing them; identical inputs and seeds produce
byte-identical data files.

Config files are flat JSON objects with keys K, n, d, lambda_w,
lambda_h, lambda_b, alpha, M, and optionally seed.  Seed precedence is
command-line flag, then the NC_LAB_SEED environment variable, then the
config file.  Exit codes: 0 success, 2 usage/config error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, landscape as landscape_mod, metrics as metrics_mod, model
from .closed_form import global_minimizer
from .model import Params, ProblemConfig
from .numerics import make_rng
from .optimize import DivergenceError, TrainConfig, init_params, train
from .viz import emit_grid

TRACE_HEADER = "iter,loss,grad_norm,nc1,nc2,nc3,numrank,balance"
LANDSCAPE_HEADER = (
    "s,theta,loss_mse,loss_ce,grad_s_mse,grad_theta_mse,grad_s_ce,grad_theta_ce"
)
SWEEP_HEADER = (
    "param,value,b_star,objective,final_loss,grad_norm,nc1,nc2,nc3,numrank,balance"
)
SWEEP_AXES = ("lambda_b", "alpha", "M", "d")

USAGE_ERROR = 2
NUMERICAL_ERROR = 3

CONFIG_KEYS = ("K", "n", "d", "lambda_w", "lambda_h", "lambda_b", "alpha", "M")


def fmt(x) -> str:
    """Serialize a float with 17 significant digits (bit-faithful)."""
    return f"{float(x):.17g}"


def load_config(path):
    """Parse a flat JSON problem config; returns (ProblemConfig, seed|None)."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("config must be a flat JSON object")
    unknown = set(raw) - set(CONFIG_KEYS) - {"seed"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: raw[k] for k in CONFIG_KEYS if k in raw}
    for key in ("K", "n", "d"):
        if key in kwargs:
            kwargs[key] = int(kwargs[key])
    cfg = ProblemConfig(**kwargs)
    seed = int(raw["seed"]) if "seed" in raw else None
    return cfg, seed


def config_to_json(cfg: ProblemConfig, seed=None) -> str:
    data = {
        "K": cfg.K,
        "n": cfg.n,
        "d": cfg.d,
        "lambda_w": cfg.lambda_w,
        "lambda_h": cfg.lambda_h,
        "lambda_b": cfg.lambda_b,
        "alpha": cfg.alpha,
        "M": cfg.M,
    }
    if seed is not None:
        data["seed"] = seed
    return json.dumps(data, indent=2) + "\n"


def load_train_config(path, seed_override=None) -> TrainConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("train config must be a flat JSON object")
    if seed_override is not None:
        raw["seed"] = seed_override
    return TrainConfig(**raw)


def resolve_seed(flag_seed, config_seed):
    """Precedence: flag > NC_LAB_SEED environment variable > config."""
    if flag_seed is not None:
        return int(flag_seed)
    env = os.environ.get("NC_LAB_SEED")
    if env is not None:
        return int(env)
    if config_seed is not None:
        return int(config_seed)
    return 0


def params_to_json(params: Params) -> str:
    data = {
        "W": params.W.tolist(),
        "H": params.H.tolist(),
        "b": params.b.tolist(),
    }
    return json.dumps(data) + "\n"


def load_params(path) -> Params:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return Params(
        W=np.asarray(raw["W"], dtype=np.float64),
        H=np.asarray(raw["H"], dtype=np.float64),
        b=np.asarray(raw["b"], dtype=np.float64),
    )


class _Run:
    """Collects written artifacts and emits the manifest."""

    def __init__(self, subcommand, out_dir, cfg=None, seed=None):
        self.subcommand = subcommand
        self.out_dir = out_dir
        self.cfg = cfg
        self.seed = seed
        self.artifacts = []
        self.started = time.monotonic()
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def write(self, name, text):
        path = self.path(name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.artifacts.append(name)
        return path

    def finish(self):
        manifest = {
            "subcommand": self.subcommand,
            "config": None if self.cfg is None else json.loads(config_to_json(self.cfg)),
            "seed": self.seed,
            "artifacts": sorted(self.artifacts),
            "version": __version__,
            "duration_seconds": time.monotonic() - self.started,
        }
        with open(self.path("manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")


def _report_lines(report) -> list[str]:
    lines = [
        f"classification={report.classification}",
        f"gradient_norm={fmt(report.gradient_norm)}",
        f"balance_residual={fmt(report.balance_residual)}",
        f"curvature_value={fmt(report.curvature_value)}",
        f"has_certificate={int(report.certificate is not None)}",
    ]
    return lines


def _metric_lines(cfg, params) -> list[str]:
    rep = metrics_mod.compute_report(cfg, params)
    lines = [
        f"nc1={fmt(rep.nc1)}",
        f"nc2={'' if rep.nc2 is None else fmt(rep.nc2)}",
        f"nc3={'' if rep.nc3 is None else fmt(rep.nc3)}",
        f"numerical_rank={fmt(rep.numerical_rank)}",
        f"ncc_agreement={fmt(rep.ncc_agreement)}",
        f"balance_residual={fmt(rep.balance_residual)}",
    ]
    return lines


def _gram_csv(gram: np.ndarray) -> str:
    rows = [",".join(fmt(v) for v in row) for row in gram]
    return "\n".join(rows) + "\n"


def _margins_csv(cfg, params) -> str:
    values = metrics_mod.cosine_margins(cfg, params)
    return "margin\n" + "\n".join(fmt(v) for v in values) + "\n"


def _trace_csv(trace) -> str:
    lines = [TRACE_HEADER]
    for rec in trace:
        lines.append(
            ",".join(
                [
                    str(rec.iteration),
                    fmt(rec.loss),
                    fmt(rec.gradient_norm),
                    fmt(rec.nc1),
                    fmt(rec.nc2),
                    fmt(rec.nc3),
                    fmt(rec.numerical_rank),
                    fmt(rec.balance_residual),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    cfg, config_seed = load_config(args.config)
    seed = resolve_seed(args.seed, config_seed)
    run = _Run("solve", args.out, cfg, seed)
    solution = global_minimizer(cfg)
    params = solution.params()
    lines = [
        f"regime={solution.regime}",
        f"b_star={fmt(solution.b_star_scalar)}",
        f"objective={fmt(solution.objective_value)}",
        f"shrinkage_levels={','.join(fmt(v) for v in solution.shrinkage_levels)}",
        f"W_norm={fmt(np.linalg.norm(solution.W_star))}",
        f"H_norm={fmt(np.linalg.norm(solution.H_star))}",
    ]
    lines += _metric_lines(cfg, params)
    run.write("solution.txt", "\n".join(lines) + "\n")
    run.write("gram.csv", _gram_csv(solution.predicted_gram))
    run.write("margins.csv", _margins_csv(cfg, params))
    run.finish()
    return 0


def cmd_train(args) -> int:
    cfg, config_seed = load_config(args.config)
    seed = resolve_seed(args.seed, config_seed)
    if args.train_config:
        tcfg = load_train_config(args.train_config, seed_override=seed)
    else:
        tcfg = TrainConfig(seed=seed)
    run = _Run("train", args.out, cfg, seed)
    init = init_params(cfg, args.init_scale, make_rng(seed))
    try:
        final, trace = train(cfg, tcfg, init)
    except DivergenceError as err:
        run.write("trace.csv", _trace_csv(err.trace))
        run.finish()
        print(f"error: {err}", file=sys.stderr)
        return NUMERICAL_ERROR

    run.write("trace.csv", _trace_csv(trace))
    run.write("params.json", params_to_json(final))
    run.write("margins.csv", _margins_csv(cfg, final))
    report = landscape_mod.classify_critical_point(cfg, final)
    lines = [
        f"final_loss={fmt(trace[-1].loss)}",
        f"iterations={trace[-1].iteration}",
    ]
    lines += _report_lines(report)
    lines += _metric_lines(cfg, final)
    run.write("summary.txt", "\n".join(lines) + "\n")
    run.finish()
    return 0


def cmd_probe(args) -> int:
    cfg, config_seed = load_config(args.config)
    seed = resolve_seed(args.seed, config_seed)
    if args.zero_saddle:
        b0 = 1.0 / (cfg.K * (1.0 + cfg.lambda_b))
        params = Params(
            W=np.zeros((cfg.K, cfg.d)),
            H=np.zeros((cfg.d, cfg.N)),
            b=np.full(cfg.K, b0),
        )
    elif args.params:
        params = load_params(args.params)
        params.check_shapes(cfg)
    else:
        raise ValueError("probe needs --params FILE or --zero-saddle")
    run = _Run("probe", args.out, cfg, seed)
    report = landscape_mod.classify_critical_point(cfg, params)
    lines = _report_lines(report)
    lines.append(f"objective={fmt(model.loss(cfg, params))}")
    run.write("report.txt", "\n".join(lines) + "\n")
    run.finish()
    return 0


def cmd_landscape(args) -> int:
    run = _Run("landscape", args.out)
    grid = emit_grid(
        K=args.K,
        alpha=args.alpha,
        M=args.M,
        s_range=(args.s_min, args.s_max),
        theta_range=(args.theta_min, args.theta_max),
        resolution=(args.resolution, args.resolution),
        limit_mode=args.limit,
    )
    lines = [LANDSCAPE_HEADER]
    for i, s in enumerate(grid.s_values):
        for j, theta in enumerate(grid.theta_values):
            lines.append(
                ",".join(
                    [fmt(s), fmt(theta)]
                    + [
                        fmt(grid.surfaces[name][i, j])
                        for name in (
                            "loss_mse",
                            "loss_ce",
                            "grad_s_mse",
                            "grad_theta_mse",
                            "grad_s_ce",
                            "grad_theta_ce",
                        )
                    ]
                )
            )
    run.write(args.name, "\n".join(lines) + "\n")
    run.finish()
    return 0


def _sweep_config(cfg: ProblemConfig, param: str, value: float) -> ProblemConfig:
    base = {
        "K": cfg.K,
        "n": cfg.n,
        "d": cfg.d,
        "lambda_w": cfg.lambda_w,
        "lambda_h": cfg.lambda_h,
        "lambda_b": cfg.lambda_b,
        "alpha": cfg.alpha,
        "M": cfg.M,
    }
    base[param] = int(value) if param == "d" else float(value)
    return ProblemConfig(**base)


def cmd_sweep(args) -> int:
    if len(args.param) != 1:
        raise ValueError("sweep supports exactly one axis")
    param = args.param[0]
    if param not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")
    cfg, config_seed = load_config(args.config)
    seed = resolve_seed(args.seed, config_seed)
    if args.train_config:
        tcfg = load_train_config(args.train_config, seed_override=seed)
    else:
        tcfg = TrainConfig(seed=seed)
    values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    if not values:
        raise ValueError("sweep needs at least one value")

    run = _Run("sweep", args.out, cfg, seed)
    lines = [SWEEP_HEADER]
    for value in values:
        point = _sweep_config(cfg, param, value)
        if point.is_rescaled:
            b_star, objective = math.nan, math.nan
        else:
            solution = global_minimizer(point)
            b_star, objective = solution.b_star_scalar, solution.objective_value
        init = init_params(point, args.init_scale, make_rng(seed))
        final, trace = train(point, tcfg, init)
        rep = metrics_mod.compute_report(point, final)
        lines.append(
            ",".join(
                [
                    param,
                    fmt(value),
                    fmt(b_star),
                    fmt(objective),
                    fmt(trace[-1].loss),
                    fmt(trace[-1].gradient_norm),
                    fmt(rep.nc1),
                    fmt(math.nan if rep.nc2 is None else rep.nc2),
                    fmt(math.nan if rep.nc3 is None else rep.nc3),
                    fmt(rep.numerical_rank),
                    fmt(rep.balance_residual),
                ]
            )
        )
    run.write("sweep.csv", "\n".join(lines) + "\n")
    run.finish()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nclab",
        description="Neural-collapse laboratory for the unconstrained feature model",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override seed")

    p = sub.add_parser("solve", help="closed-form global minimizer")
    p.add_argument("config")
    add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("train", help="iterative training with a metric trace")
    p.add_argument("config")
    p.add_argument("--train-config", default=None)
    p.add_argument("--init-scale", type=float, default=1.0)
    add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("probe", help="critical-point report")
    p.add_argument("config")
    p.add_argument("--params", default=None)
    p.add_argument("--zero-saddle", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("landscape", help="polar-slice loss/gradient grids")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--s-min", type=float, default=0.0)
    p.add_argument("--s-max", type=float, default=5.0)
    p.add_argument("--theta-min", type=float, default=0.0)
    p.add_argument("--theta-max", type=float, default=math.pi)
    p.add_argument("--resolution", type=int, default=25)
    p.add_argument("--limit", action="store_true", help="K->infinity gradient fields")
    p.add_argument("--name", default="landscape.csv")
    add_common(p)
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("sweep", help="one-axis parameter sweep")
    p.add_argument("config")
    p.add_argument("--param", action="append", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma-separated grid")
    p.add_argument("--train-config", default=None)
    p.add_argument("--init-scale", type=float, default=1.0)
    add_common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 0 if err.code in (0, None) else USAGE_ERROR
    try:
        return args.func(args)
    except DivergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return NUMERICAL_ERROR
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
