"""Field heatmaps with intensity quiver overlays.

Four panels from a field CSV and its error CSV: real pressure, intensity
magnitude with direction arrows, pressure error, intensity direction error.
"""
from __future__ import annotations

import argparse

import matplotlib.pyplot as plt
import numpy as np

from . import style
from .recipes import FigureRecipe, load_csv, plane_grid, save

FIELD_COLS = ("x", "y", "ReP", "ImP", "Ix", "Iy", "Iz", "mask")
ERROR_COLS = ("x", "y", "pe", "ide", "mask")


def _panel(ax, xs, ys, img, title, cmap, vmin=None, vmax=None):
    m = ax.pcolormesh(xs, ys, img.T, cmap=cmap, vmin=vmin, vmax=vmax,
                      shading="nearest")
    ax.set_title(title)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal")
    ax.grid(False)
    return m


def _masked(rows, col, order, shape):
    img = rows[col][order].reshape(shape)
    mask = rows["mask"][order].reshape(shape) > 0
    return np.where(mask, np.nan, img)


def plot_field(recipe: FigureRecipe) -> str:
    """Render the recipe; returns the output path."""
    field_rows = load_csv(recipe.inputs[0], FIELD_COLS)
    xs, ys, order, shape = plane_grid(field_rows)
    re_p = _masked(field_rows, "ReP", order, shape)
    ix = _masked(field_rows, "Ix", order, shape)
    iy = _masked(field_rows, "Iy", order, shape)
    iz = _masked(field_rows, "Iz", order, shape)
    imag = np.sqrt(ix ** 2 + iy ** 2 + iz ** 2)

    error_rows = None
    if len(recipe.inputs) > 1:
        error_rows = load_csv(recipe.inputs[1], ERROR_COLS)

    style.apply()
    ncols = 4 if error_rows is not None else 2
    fig, axes = plt.subplots(1, ncols, figsize=(3.1 * ncols, 3.2),
                             constrained_layout=True)
    title = recipe.options.get("title", "")

    lim = np.nanmax(np.abs(re_p))
    m0 = _panel(axes[0], xs, ys, re_p, f"{title} pressure (Re)".strip(),
                style.FIELD_CMAP, vmin=-lim, vmax=lim)
    fig.colorbar(m0, ax=axes[0], shrink=0.8)

    m1 = _panel(axes[1], xs, ys, imag, "intensity", style.MAG_CMAP, vmin=0.0)
    step = int(recipe.options.get("quiver_step", style.QUIVER_STEP))
    sl = (slice(step // 2, None, step),) * 2
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    norm = np.where(imag > 0, imag, 1.0)
    axes[1].quiver(gx[sl], gy[sl], (ix / norm)[sl], (iy / norm)[sl],
                   color="w", scale=30, width=3e-3)
    fig.colorbar(m1, ax=axes[1], shrink=0.8)

    if error_rows is not None:
        _, _, eorder, eshape = plane_grid(error_rows)
        pe = _masked(error_rows, "pe", eorder, eshape)
        ide = _masked(error_rows, "ide", eorder, eshape)
        m2 = _panel(axes[2], xs, ys, np.clip(pe, 0, style.ERROR_VMAX),
                    "pressure error (%)", style.ERROR_CMAP,
                    vmin=0.0, vmax=style.ERROR_VMAX)
        fig.colorbar(m2, ax=axes[2], shrink=0.8)
        m3 = _panel(axes[3], xs, ys, ide, "direction error (%)",
                    style.ERROR_CMAP, vmin=0.0, vmax=style.ERROR_VMAX)
        fig.colorbar(m3, ax=axes[3], shrink=0.8)

    out = save(fig, recipe.output)
    plt.close(fig)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        description="field heatmap + intensity quiver from sft CSV exports")
    ap.add_argument("field_csv")
    ap.add_argument("--error-csv", help="matching error map for PE/IDE "
                                        "panels")
    ap.add_argument("--out", required=True, help="PNG or SVG path")
    ap.add_argument("--title", default="")
    ap.add_argument("--quiver-step", type=int, default=style.QUIVER_STEP)
    args = ap.parse_args(argv)
    inputs = (args.field_csv,) if not args.error_csv \
        else (args.field_csv, args.error_csv)
    try:
        recipe = FigureRecipe(inputs=inputs, kind="heatmap+quiver",
                              output=args.out,
                              options={"title": args.title,
                                       "quiver_step": args.quiver_step})
        plot_field(recipe)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}")
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
