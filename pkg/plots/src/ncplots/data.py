"""CSV loading and schema validation for nc-lab outputs.

The plotting layer is a pure consumer: values are parsed once and carried
through to the figures untouched, so a round trip from the loaded data
model back to the CSV text is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

__all__ = ["SchemaError", "PlotData", "load_csv", "require_columns", "SCHEMAS"]

# Columns each plot kind relies on.
SCHEMAS = {
    "heatmap": ("s", "theta"),
    "quiver": ("s", "theta"),
    "trace": ("iter", "loss", "grad_norm", "nc1", "nc2", "nc3"),
    "margin-cdf": ("margin",),
    "sweep": ("param", "value"),
}


class SchemaError(ValueError):
    """Input CSV does not carry the columns a plot kind needs."""


@dataclass(frozen=True)
class PlotData:
    """Parsed CSV: named columns in file order, plus any string columns."""

    columns: Dict[str, np.ndarray]
    text_columns: Dict[str, Tuple[str, ...]]

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise SchemaError(f"missing column {name!r}")
        return self.columns[name]

    @property
    def names(self):
        return tuple(self.columns) + tuple(self.text_columns)


def load_csv(path) -> PlotData:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip() != ""]
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = lines[0].split(",")
    raw = [line.split(",") for line in lines[1:]]
    if any(len(row) != len(header) for row in raw):
        raise SchemaError(f"{path}: ragged rows")

    columns: Dict[str, np.ndarray] = {}
    text_columns: Dict[str, Tuple[str, ...]] = {}
    for j, name in enumerate(header):
        cells = [row[j] for row in raw]
        try:
            columns[name] = np.array([float(c) for c in cells])
        except ValueError:
            text_columns[name] = tuple(cells)
    return PlotData(columns=columns, text_columns=text_columns)


def require_columns(data: PlotData, names, path="input") -> None:
    for name in names:
        if name not in data.columns and name not in data.text_columns:
            raise SchemaError(f"{path}: missing column {name!r}")
