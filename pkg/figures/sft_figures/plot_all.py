"""Regenerate every figure from a completed reproduction directory."""
from __future__ import annotations

import argparse
import pathlib

from .plot_brir import plot_brir
from .plot_curves import plot_curves
from .plot_field import plot_field
from .recipes import FigureRecipe

FIELD_LABELS = ("truth", "measured", "pw_cf", "pw_irls", "mw_cf", "mw_irls")
BRIR_METHODS = ("pw_cf", "pw_irls", "mw_cf", "mw_irls", "anchor")


def render_all(repro_dir, out_dir) -> list:
    """Returns the list of written image paths; raises on missing inputs."""
    repro = pathlib.Path(repro_dir)
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    field_files = sorted(repro.glob("field_*.csv"))
    if not field_files:
        raise FileNotFoundError(f"no field_*.csv in {repro}")
    freq_tag = field_files[0].stem.split("_")[-1]
    for label in FIELD_LABELS:
        fpath = repro / f"field_{label}_{freq_tag}.csv"
        epath = repro / f"error_{label}_{freq_tag}.csv"
        if not fpath.exists():
            continue
        inputs = (fpath,) if label == "truth" else (fpath, epath)
        recipe = FigureRecipe(inputs=inputs, kind="heatmap+quiver",
                              output=str(out / f"map_{label}.png"),
                              options={"title": label.replace("_", "-")})
        written.append(plot_field(recipe))

    written.append(plot_curves(FigureRecipe(
        inputs=(repro / "sweep_radius.csv",), kind="lines",
        output=str(out / "sweep_radius_pe.png"), options={"metric": "pe"})))
    for metric in ("pe", "ime", "ide"):
        written.append(plot_curves(FigureRecipe(
            inputs=(repro / "sweep_band.csv",), kind="lines",
            output=str(out / f"sweep_band_{metric}.png"),
            options={"metric": metric})))

    ref = repro / "brir_reference.csv"
    methods = [repro / f"brir_{m}.csv" for m in BRIR_METHODS
               if (repro / f"brir_{m}.csv").exists()]
    written.append(plot_brir(FigureRecipe(
        inputs=(ref, *methods), kind="spectra",
        output=str(out / "brir_difference.png"))))
    return written


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        description="regenerate all figures from an `sft repro` directory")
    ap.add_argument("repro_dir")
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)
    try:
        written = render_all(args.repro_dir, args.out)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}")
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
