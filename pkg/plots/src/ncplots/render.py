"""Figure rendering for nc-lab CSV outputs.

Five plot kinds: ``heatmap`` (landscape surface over the polar slice),
``quiver`` (gradient vector field, arrows along the negative gradient),
``trace`` (training metrics versus iteration, log scale), ``margin-cdf``
(ascending cosine-margin distribution), and ``sweep`` (final metrics
versus a swept parameter).

Rendering never alters the numbers: every renderer returns the exact
arrays it handed to matplotlib, keyed by series name, so tests can check
them against the CSV byte-for-byte.  Output is deterministic: the Agg
backend, a fixed style, pinned image metadata, and no timestamps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .data import SCHEMAS, PlotData, SchemaError, load_csv, require_columns

__all__ = ["PlotJob", "render", "render_quiver", "KINDS"]

KINDS = ("heatmap", "quiver", "trace", "margin-cdf", "sweep")

_STYLE = {
    "figure.figsize": (6.0, 4.5),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "svg.hashsalt": "ncplots",
}

_METADATA = {"Software": "ncplots"}


@dataclass(frozen=True)
class PlotJob:
    input_path: str
    kind: str
    output_path: str
    title: str = ""
    column: str = "loss_mse"   # heatmap surface
    field: str = "mse"         # quiver gradient field
    series: tuple = ("nc1", "nc2", "nc3")  # trace / sweep curves
    log_y: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}")


def _grid(data: PlotData, name: str):
    """Reshape a row-major (s outer, theta inner) column into a 2-D grid."""
    s = data["s"]
    theta = data["theta"]
    values = data[name]
    if s.size == 0:
        raise SchemaError("empty grid")
    s_axis = np.unique(s)
    t_axis = np.unique(theta)
    if s_axis.size * t_axis.size != values.size:
        raise SchemaError("grid is not a full cartesian product")
    return s_axis, t_axis, values.reshape(s_axis.size, t_axis.size)


def _save(fig, job: PlotJob):
    fig.savefig(job.output_path, metadata=_METADATA)
    plt.close(fig)


def render(job: PlotJob) -> Dict[str, np.ndarray]:
    """Render one job; returns the exact arrays that were plotted."""
    data = load_csv(job.input_path)
    require_columns(data, SCHEMAS[job.kind], job.input_path)
    if job.kind == "quiver":
        return render_quiver(job, data)

    with plt.rc_context(_STYLE):
        if job.kind == "heatmap":
            return _render_heatmap(job, data)
        if job.kind == "trace":
            return _render_trace(job, data)
        if job.kind == "margin-cdf":
            return _render_margin_cdf(job, data)
        return _render_sweep(job, data)


def _render_heatmap(job: PlotJob, data: PlotData):
    s_axis, t_axis, grid = _grid(data, job.column)
    fig, ax = plt.subplots()
    mesh = ax.pcolormesh(s_axis, t_axis, grid.T, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=job.column)
    ax.set_xlabel("s")
    ax.set_ylabel("theta")
    ax.set_title(job.title or job.column)
    _save(fig, job)
    return {"s": data["s"], "theta": data["theta"], job.column: data[job.column]}


def render_quiver(job: PlotJob, data: Optional[PlotData] = None):
    """Gradient vector field: arrows point along the negative gradient.

    Arrow lengths are proportional to the gradient magnitude; the scale
    factor is 10 * max magnitude per axis width, so the largest arrow
    spans one tenth of the axes.
    """
    if data is None:
        data = load_csv(job.input_path)
        require_columns(data, SCHEMAS["quiver"], job.input_path)
    gs_name = f"grad_s_{job.field}"
    gt_name = f"grad_theta_{job.field}"
    require_columns(data, (gs_name, gt_name), job.input_path)
    s, theta = data["s"], data["theta"]
    gs, gt = data[gs_name], data[gt_name]
    if s.size == 0:
        raise SchemaError("empty grid")

    magnitude = np.hypot(gs, gt)
    max_mag = float(magnitude.max())
    scale = 10.0 * max_mag if max_mag > 0 else 1.0
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.quiver(
            s, theta, -gs, -gt, magnitude,
            angles="xy", scale_units="width", scale=scale, cmap="plasma",
        )
        ax.set_xlabel("s")
        ax.set_ylabel("theta")
        ax.set_title(job.title or f"-grad field ({job.field})")
        _save(fig, job)
    return {"s": s, "theta": theta, gs_name: gs, gt_name: gt}


def _render_trace(job: PlotJob, data: PlotData):
    iters = data["iter"]
    fig, ax = plt.subplots()
    plotted = {"iter": iters}
    for name in job.series:
        values = data[name]
        plotted[name] = values
        ax.plot(iters, values, label=name)
    if job.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("metric")
    ax.legend()
    ax.set_title(job.title or "training trace")
    _save(fig, job)
    return plotted


def _render_margin_cdf(job: PlotJob, data: PlotData):
    margins = data["margin"]
    if margins.size == 0:
        raise SchemaError("empty margin list")
    fraction = np.arange(1, margins.size + 1) / margins.size
    fig, ax = plt.subplots()
    ax.step(margins, fraction, where="post")
    ax.set_xlabel("cosine margin")
    ax.set_ylabel("cumulative fraction")
    ax.set_title(job.title or "margin distribution")
    _save(fig, job)
    return {"margin": margins}


def _render_sweep(job: PlotJob, data: PlotData):
    values = data["value"]
    fig, ax = plt.subplots()
    plotted = {"value": values}
    for name in job.series:
        series = data[name]
        plotted[name] = series
        ax.plot(values, series, marker="o", label=name)
    if job.log_y:
        ax.set_yscale("log")
    param = data.text_columns.get("param", ("param",))[0]
    ax.set_xlabel(param)
    ax.legend()
    ax.set_title(job.title or f"sweep over {param}")
    _save(fig, job)
    return plotted
