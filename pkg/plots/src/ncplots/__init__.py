"""Figure rendering for nc-lab CSV outputs."""

__version__ = "0.1.0"

from .data import PlotData, SchemaError, load_csv
from .render import KINDS, PlotJob, render, render_quiver
