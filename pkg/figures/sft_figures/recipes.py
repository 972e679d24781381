"""Shared input handling and the figure recipe type."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")


class SchemaError(ValueError):
    """An input CSV does not carry the expected columns."""


@dataclass(frozen=True)
class FigureRecipe:
    """What to plot and where to put it.

    kind: 'heatmap+quiver' | 'lines' | 'spectra'.  Styling keys not set
    fall back to the module defaults in style.py.
    """

    inputs: tuple
    kind: str
    output: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("heatmap+quiver", "lines", "spectra"):
            raise ValueError(f"unknown figure kind {self.kind!r}")
        for path in self.inputs:
            if not Path(path).is_file():
                raise FileNotFoundError(f"input file missing: {path}")


def load_csv(path, required):
    """Load a delimited export and check its header."""
    rows = np.genfromtxt(path, delimiter=",", names=True)
    names = rows.dtype.names or ()
    missing = [c for c in required if c not in names]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    return np.atleast_1d(rows)


def load_text_csv(path, required):
    """Loader for mixed text/number tables (sweep files)."""
    rows = np.genfromtxt(path, delimiter=",", names=True, dtype=None,
                         encoding="utf-8")
    names = rows.dtype.names or ()
    missing = [c for c in required if c not in names]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    return np.atleast_1d(rows)


def plane_grid(rows):
    """Reshape flat x,y samples back into the square plane grid."""
    xs = np.unique(rows["x"])
    ys = np.unique(rows["y"])
    if len(xs) * len(ys) != len(rows):
        raise SchemaError("field grid is not a full rectangular sampling")
    order = np.lexsort((rows["y"], rows["x"]))
    shape = (len(xs), len(ys))
    return xs, ys, order, shape


def save(fig, output):
    fig.savefig(output, metadata=_strip_metadata(output))
    return output


def _strip_metadata(output):
    # no dates or tool banners in the bytes: reruns stay identical
    if str(output).endswith(".svg"):
        return {"Date": None, "Creator": None}
    if str(output).endswith(".png"):
        return {"Software": None}
    return None
