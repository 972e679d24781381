"""Averaged-error curves from sweep CSVs.

Radius mode: one panel per frequency, metric vs translation radius.
Band mode (single radius in the file): metric vs frequency.
"""
from __future__ import annotations

import argparse

import matplotlib.pyplot as plt
import numpy as np

from . import style
from .recipes import FigureRecipe, load_text_csv, save

SWEEP_COLS = ("freq_hz", "radius_m", "method", "metric", "value",
              "masked_count")


def _line_kw(method):
    return {"color": style.METHOD_COLORS.get(method, "k"),
            "linestyle": style.METHOD_STYLES.get(method, "-"),
            "label": method}


def plot_curves(recipe: FigureRecipe) -> str:
    rows = load_text_csv(recipe.inputs[0], SWEEP_COLS)
    metric = recipe.options.get("metric", "pe")
    rows = rows[rows["metric"] == metric]
    if len(rows) == 0:
        raise ValueError(f"no '{metric}' rows in {recipe.inputs[0]}")
    methods = recipe.options.get("methods")
    if methods is None:
        methods = sorted(set(rows["method"]))
    radii = np.unique(rows["radius_m"])
    freqs = np.unique(rows["freq_hz"])
    against_radius = len(radii) > 1

    style.apply()
    if against_radius:
        fig, axes = plt.subplots(1, len(freqs),
                                 figsize=(3.0 * len(freqs), 3.0),
                                 sharey=True, constrained_layout=True)
        axes = np.atleast_1d(axes)
        for ax, f in zip(axes, freqs):
            for m in methods:
                sel = (rows["method"] == m) & (rows["freq_hz"] == f)
                if not np.any(sel):
                    continue
                sub = rows[sel]
                order = np.argsort(sub["radius_m"])
                ax.loglog(sub["radius_m"][order], sub["value"][order],
                          **_line_kw(m))
            ax.set_title(f"{f:.0f} Hz")
            ax.set_xlabel("radius (m)")
        axes[0].set_ylabel(style.METRIC_LABELS.get(metric, metric))
        axes[-1].legend(fontsize=7)
    else:
        fig, ax = plt.subplots(figsize=(4.6, 3.2), constrained_layout=True)
        for m in methods:
            sel = rows["method"] == m
            if not np.any(sel):
                continue
            sub = rows[sel]
            order = np.argsort(sub["freq_hz"])
            ax.semilogx(sub["freq_hz"][order], sub["value"][order],
                        **_line_kw(m))
        ax.set_xlabel("frequency (Hz)")
        ax.set_ylabel(style.METRIC_LABELS.get(metric, metric))
        ax.set_title(f"radius {radii[0]:g} m")
        ax.legend(fontsize=7)
    out = save(fig, recipe.output)
    plt.close(fig)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        description="averaged-error curves from an sft sweep CSV")
    ap.add_argument("sweep_csv")
    ap.add_argument("--metric", default="pe", choices=["pe", "ime", "ide"])
    ap.add_argument("--methods", help="comma list; default: all in file")
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)
    methods = args.methods.split(",") if args.methods else None
    try:
        recipe = FigureRecipe(inputs=(args.sweep_csv,), kind="lines",
                              output=args.out,
                              options={"metric": args.metric,
                                       "methods": methods})
        plot_curves(recipe)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}")
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
