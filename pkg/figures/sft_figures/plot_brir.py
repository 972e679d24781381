"""BRIR spectral-difference plot: per-ear level difference of each method
against the reference spectra."""
from __future__ import annotations

import argparse
import pathlib

import matplotlib.pyplot as plt
import numpy as np

from . import style
from .recipes import FigureRecipe, load_csv, save

BRIR_COLS = ("freq_hz", "left_db", "right_db")


def plot_brir(recipe: FigureRecipe) -> str:
    """First input: reference CSV; remaining inputs: method CSVs."""
    ref = load_csv(recipe.inputs[0], BRIR_COLS)
    style.apply()
    fig, axes = plt.subplots(2, 1, figsize=(5.0, 4.2), sharex=True,
                             constrained_layout=True)
    for path in recipe.inputs[1:]:
        rows = load_csv(path, BRIR_COLS)
        if len(rows) != len(ref) or np.any(rows["freq_hz"] != ref["freq_hz"]):
            raise ValueError(f"{path}: frequency grid differs from the "
                             f"reference file")
        label = pathlib.Path(path).stem.replace("brir_", "").replace("_", "-")
        kw = {"color": style.METHOD_COLORS.get(label, None), "label": label}
        axes[0].semilogx(ref["freq_hz"], rows["left_db"] - ref["left_db"],
                         **kw)
        axes[1].semilogx(ref["freq_hz"], rows["right_db"] - ref["right_db"],
                         **kw)
    for ax, ear in zip(axes, ("left", "right")):
        ax.set_ylabel(f"{ear} diff (dB)")
        ax.axhline(0.0, color="0.7", lw=0.8)
    axes[1].set_xlabel("frequency (Hz)")
    axes[0].legend(fontsize=7)
    axes[0].set_title(recipe.options.get("title",
                                         "BRIR difference vs reference"))
    out = save(fig, recipe.output)
    plt.close(fig)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        description="BRIR spectral difference against a reference CSV")
    ap.add_argument("reference_csv")
    ap.add_argument("method_csvs", nargs="+")
    ap.add_argument("--out", required=True)
    ap.add_argument("--title", default="BRIR difference vs reference")
    args = ap.parse_args(argv)
    try:
        recipe = FigureRecipe(
            inputs=(args.reference_csv, *args.method_csvs), kind="spectra",
            output=args.out, options={"title": args.title})
        plot_brir(recipe)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}")
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
