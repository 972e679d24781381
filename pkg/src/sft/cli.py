"""Command-line pipeline: capture, expand, fieldmap, sweep, brir, render,
and the full reproduction chain.

Exit codes: 0 success, 1 numerical failure (unconverged solve without
--allow-unconverged), 2 usage or validation errors.
"""
from __future__ import annotations

import argparse
import datetime
import os
import pathlib
import sys


def _set_threads(argv):
    # honor --threads before numpy initializes its thread pools
    for i, arg in enumerate(argv):
        if arg == "--threads" and i + 1 < len(argv):
            n = argv[i + 1]
        elif arg.startswith("--threads="):
            n = arg.split("=", 1)[1]
        else:
            continue
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)
        break


_set_threads(sys.argv)

import numpy as np  # noqa: E402

from . import binaural, capture, expansion, field, fileio, metrics, render  # noqa: E402
from .errors import ConvergenceError, SftError, ValidationError  # noqa: E402
from .scene import load_scene, paper_scene, save_scene  # noqa: E402

METHODS_WITH_MEASURED = ("measured",) + expansion.METHOD_TAGS


def _timestamps():
    return {"started": datetime.datetime.now(datetime.timezone.utc)
            .isoformat()}


def _parse_list(text, cast=float):
    return [cast(v) for v in text.split(",") if v != ""]


def _parse_vec(text):
    vals = _parse_list(text)
    if len(vals) != 3:
        raise ValidationError(f"expected 3 comma-separated values, "
                              f"got {text!r}")
    return np.array(vals)


def _freqs_for(args, scene):
    if getattr(args, "stft_bins", False):
        return binaural.stft_bin_frequencies(scene.sample_rate)
    if getattr(args, "freqs", None):
        return np.array(_parse_list(args.freqs))
    return np.array(scene.analysis.frequencies)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_capture(args) -> int:
    scene = load_scene(args.scene)
    freqs = _freqs_for(args, scene)
    ts = _timestamps()
    rec = capture.record_scene(scene, freqs, n_sim=args.n_sim)
    fileio.write_coefficients(args.out, rec, scene.sample_rate)
    if args.csv:
        fileio.export_coefficients_csv(args.csv, rec)
    fileio.write_manifest(str(args.out) + ".manifest.json", "capture",
                          args.scene,
                          {"freqs": list(map(float, freqs)),
                           "n_sim": args.n_sim},
                          [args.out], ts)
    return 0


def cmd_expand(args) -> int:
    scene = load_scene(args.scene)
    coeffs, _, header = fileio.read_coefficients(args.coeffs)
    ts = _timestamps()
    df = expansion.expand(coeffs, scene, args.method, p=args.p)
    if df.diagnostics and args.diagnostics:
        with open(args.diagnostics, "w") as fh:
            fh.write("freq_hz,iterations,residual,converged\n")
            for i, f in enumerate(df.frequencies):
                fh.write(f"{float(f)!r},{int(df.diagnostics['iterations'][i])},"
                         f"{float(df.diagnostics['residual'][i])!r},"
                         f"{int(df.diagnostics['converged'][i])}\n")
    if df.diagnostics and not bool(np.all(df.diagnostics["converged"])):
        if not args.allow_unconverged:
            raise ConvergenceError(
                "IRLS did not converge on every bin "
                "(rerun with --allow-unconverged to keep the result)")
    fileio.write_driving(args.out, df, header["sample_rate"])
    if args.csv:
        fileio.export_driving_csv(args.csv, df)
    fileio.write_manifest(str(args.out) + ".manifest.json", "expand",
                          args.scene,
                          {"method": args.method, "p": args.p,
                           "coeffs": str(args.coeffs)},
                          [args.out], ts)
    return 0


def _field_values(scene, label, freq, spec, coeffs=None, driving=None):
    k = float(scene.wavenumber(freq))
    if label == "truth":
        return field.compute_field_grid(field.true_evaluator(scene, k), spec,
                                        {"method": "truth",
                                         "frequency": freq})
    if label == "measured":
        if coeffs is None:
            rec = capture.record_scene(scene, [freq])
        else:
            rec = coeffs
        idx = int(np.argmin(np.abs(rec.frequencies - freq)))
        return field.compute_field_grid(
            field.truncated_evaluator(rec.data[idx], k), spec,
            {"method": "measured", "frequency": freq})
    if driving is None:
        rec = capture.record_scene(scene, [freq]) if coeffs is None else coeffs
        driving = expansion.expand(rec, scene, label)
    idx = int(np.argmin(np.abs(driving.frequencies - freq)))
    return field.compute_field_grid(
        field.distribution_evaluator(driving, k, f_index=idx), spec,
        {"method": label, "frequency": freq})


def cmd_fieldmap(args) -> int:
    scene = load_scene(args.scene)
    ts = _timestamps()
    if args.truth:
        label = "truth"
    elif args.measured:
        label = "measured"
    elif args.method:
        label = args.method
    else:
        raise ValidationError("choose one of --truth, --measured, --method")
    half_extent = (scene.analysis.field_half_extent
                   if args.half_extent is None else args.half_extent)
    resolution = (scene.analysis.field_resolution
                  if args.resolution is None else args.resolution)
    spec = field.PlaneGridSpec(half_extent=half_extent,
                               resolution=resolution, plane=args.plane)
    coeffs = None
    if args.coeffs:
        coeffs, _, _ = fileio.read_coefficients(args.coeffs)
    driving = None
    if args.driving:
        driving, _ = fileio.read_driving(args.driving)
    outdir = pathlib.Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = _field_values(scene, label, args.freq, spec, coeffs, driving)
    truth = _field_values(scene, "truth", args.freq, spec)
    outputs = []
    stem = f"{label.replace('-', '_')}_{int(round(args.freq))}"
    fpath = outdir / f"field_{stem}.csv"
    fileio.export_field_grid_csv(fpath, grid)
    outputs.append(fpath)
    epath = outdir / f"error_{stem}.csv"
    fileio.export_error_map_csv(epath, truth.values, grid.values)
    outputs.append(epath)
    meta = dict(grid.metadata)
    meta.update({"half_extent": spec.half_extent,
                 "resolution": spec.resolution, "plane": spec.plane,
                 "scene_hash": fileio.scene_hash(args.scene)})
    mpath = outdir / f"field_{stem}.json"
    fileio.export_field_metadata(mpath, meta)
    outputs.append(mpath)
    fileio.write_manifest(outdir / f"fieldmap_{stem}.manifest.json",
                          "fieldmap", args.scene,
                          {"label": label, "freq": args.freq}, outputs, ts)
    return 0


def _sweep_rows(scene, methods, radii, freqs, which_metrics):
    rows = []
    freqs = np.asarray(freqs, dtype=float)
    rec = capture.record_scene(scene, freqs)
    dfs = {}
    for m in methods:
        if m != "measured":
            dfs[m] = expansion.expand(rec, scene, m)
    for fi, f in enumerate(freqs):
        k = float(scene.wavenumber(f))
        true_ev = field.true_evaluator(scene, k)
        for method in methods:
            if method == "measured":
                test_ev = field.truncated_evaluator(rec.data[fi], k)
            else:
                test_ev = field.distribution_evaluator(dfs[method], k,
                                                       f_index=fi)
            for radius in radii:
                for metric in which_metrics:
                    avg = metrics.sphere_average(
                        metric, radius, true_ev, test_ev,
                        n_points=scene.analysis.sphere_points)
                    rows.append((f, radius, method, metric, avg.value,
                                 avg.masked_count))
    return rows


def cmd_sweep(args) -> int:
    scene = load_scene(args.scene)
    ts = _timestamps()
    methods = (list(METHODS_WITH_MEASURED) if args.methods is None
               else _parse_list(args.methods, str))
    if not methods:
        raise ValidationError("empty method list")
    for m in methods:
        if m not in METHODS_WITH_MEASURED:
            raise ValidationError(f"unknown method {m!r}")
    if args.band:
        freqs = scene.analysis.band_frequencies()
        radii = [args.radius or scene.analysis.average_radius]
    else:
        freqs = _freqs_for(args, scene)
        radii = (_parse_list(args.radii) if args.radii
                 else list(scene.analysis.sweep_radii))
    which = _parse_list(args.metrics, str) if args.metrics else ["pe"]
    rows = _sweep_rows(scene, methods, radii, freqs, which)
    fileio.export_sweep_csv(args.out, rows)
    fileio.write_manifest(str(args.out) + ".manifest.json", "sweep",
                          args.scene,
                          {"methods": methods, "radii": list(map(float, radii)),
                           "freqs": list(map(float, freqs)),
                           "metrics": which}, [args.out], ts)
    return 0


def cmd_brir(args) -> int:
    scene = load_scene(args.scene)
    ts = _timestamps()
    methods = (_parse_list(args.methods, str) if args.methods
               else list(binaural.ALL_METHODS))
    for m in methods:
        if m not in binaural.ALL_METHODS:
            raise ValidationError(f"unknown method {m!r}")
    d = _parse_vec(args.position) if args.position else \
        np.array(scene.analysis.translation)
    freqs = (np.array(_parse_list(args.freqs)) if args.freqs
             else binaural.stft_bin_frequencies(scene.sample_rate))
    bank = binaural.MethodBank(scene, freqs)
    outdir = pathlib.Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for m in methods:
        spec = bank.brir(m, d)
        path = outdir / f"brir_{m.replace('-', '_')}.csv"
        fileio.export_brir_csv(path, spec)
        outputs.append(path)
    fileio.write_manifest(outdir / "brir.manifest.json", "brir", args.scene,
                          {"methods": methods,
                           "position": list(map(float, d))}, outputs, ts)
    return 0


def cmd_render(args) -> int:
    scene = load_scene(args.scene)
    ts = _timestamps()
    audio = fileio.read_wav(args.audio)
    if audio.samples.ndim != 1:
        raise ValidationError("input audio must be mono")
    if args.trajectory:
        traj = fileio.read_trajectory(args.trajectory)
    elif args.position:
        traj = render.Trajectory.static(_parse_vec(args.position))
    else:
        traj = render.Trajectory.static((0.0, 0.0, 0.0))
    if args.method not in binaural.ALL_METHODS:
        raise ValidationError(f"unknown method {args.method!r}")
    out = render.render_trajectory(scene, args.method, traj, audio)
    fileio.write_wav(args.out, out)
    fileio.write_manifest(str(args.out) + ".manifest.json", "render",
                          args.scene,
                          {"method": args.method, "audio": str(args.audio)},
                          [args.out], ts)
    return 0


def cmd_repro(args) -> int:
    outdir = pathlib.Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    ts = _timestamps()
    if args.scene:
        scene_path = pathlib.Path(args.scene)
        scene = load_scene(scene_path)
    else:
        scene_path = outdir / "scene.json"
        save_scene(paper_scene(), scene_path)
        scene = load_scene(scene_path)
    outputs = [scene_path]

    freqs = np.array(scene.analysis.frequencies)
    rec = capture.record_scene(scene, freqs)
    coeff_path = outdir / "coefficients.sfc"
    fileio.write_coefficients(coeff_path, rec, scene.sample_rate)
    outputs.append(coeff_path)

    spec = field.PlaneGridSpec(scene.analysis.field_half_extent,
                               scene.analysis.field_resolution)
    f0 = float(freqs[0])
    k0 = float(scene.wavenumber(f0))
    truth = field.compute_field_grid(field.true_evaluator(scene, k0), spec,
                                     {"method": "truth", "frequency": f0})
    labels = {"truth": truth,
              "measured": field.compute_field_grid(
                  field.truncated_evaluator(rec.data[0], k0), spec,
                  {"method": "measured", "frequency": f0})}
    for m in expansion.METHOD_TAGS:
        df = expansion.expand(rec, scene, m)
        dpath = outdir / f"driving_{m.replace('-', '_')}.sfd"
        fileio.write_driving(dpath, df, scene.sample_rate)
        outputs.append(dpath)
        labels[m] = field.compute_field_grid(
            field.distribution_evaluator(df, k0, f_index=0), spec,
            {"method": m, "frequency": f0})
    for label, grid in labels.items():
        stem = f"{label.replace('-', '_')}_{int(round(f0))}"
        fpath = outdir / f"field_{stem}.csv"
        fileio.export_field_grid_csv(fpath, grid)
        outputs.append(fpath)
        epath = outdir / f"error_{stem}.csv"
        fileio.export_error_map_csv(epath, truth.values, grid.values)
        outputs.append(epath)
        mpath = outdir / f"field_{stem}.json"
        meta = dict(grid.metadata)
        meta.update({"half_extent": spec.half_extent,
                     "resolution": spec.resolution, "plane": spec.plane,
                     "scene_hash": fileio.scene_hash(scene_path)})
        fileio.export_field_metadata(mpath, meta)
        outputs.append(mpath)

    radius_rows = _sweep_rows(scene, METHODS_WITH_MEASURED,
                              scene.analysis.sweep_radii, freqs, ["pe"])
    rpath = outdir / "sweep_radius.csv"
    fileio.export_sweep_csv(rpath, radius_rows)
    outputs.append(rpath)

    band_rows = _sweep_rows(scene, METHODS_WITH_MEASURED,
                            [scene.analysis.average_radius],
                            scene.analysis.band_frequencies(),
                            ["pe", "ime", "ide"])
    bpath = outdir / "sweep_band.csv"
    fileio.export_sweep_csv(bpath, band_rows)
    outputs.append(bpath)

    bank = binaural.MethodBank(
        scene, binaural.stft_bin_frequencies(scene.sample_rate))
    d = np.array(scene.analysis.translation)
    for m in binaural.ALL_METHODS:
        spec_b = bank.brir(m, d)
        path = outdir / f"brir_{m.replace('-', '_')}.csv"
        fileio.export_brir_csv(path, spec_b)
        outputs.append(path)

    fileio.write_manifest(outdir / "repro.manifest.json", "repro", scene_path,
                          {"frequencies": list(map(float, freqs))},
                          outputs, ts)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sft",
        description="Sound field translation pipeline: record a scene with "
                    "a rigid-sphere microphone, expand it into virtual "
                    "planewave or mixed near/far-field sources, translate "
                    "the listener, and export fields, error metrics, BRIRs, "
                    "and binaural audio.")
    ap.add_argument("--threads", type=int, default=None,
                    help="BLAS/OpenMP thread cap for internal parallelism")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capture", help="record a scene into coefficients")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--freqs", help="comma-separated Hz list")
    p.add_argument("--stft-bins", action="store_true",
                   help="use the 4096-frame STFT bin grid")
    p.add_argument("--n-sim", type=int, default=None,
                   help="forward simulation order (default mic order + 8)")
    p.add_argument("--csv", help="also export coefficients as CSV")
    p.set_defaults(func=cmd_capture)

    p = sub.add_parser("expand", help="expand coefficients into a driving "
                                      "function")
    p.add_argument("--scene", required=True)
    p.add_argument("--coeffs", required=True)
    p.add_argument("--method", required=True,
                   choices=list(expansion.METHOD_TAGS))
    p.add_argument("--out", required=True)
    p.add_argument("--p", type=float, default=1.0,
                   help="sparsity exponent for IRLS methods")
    p.add_argument("--diagnostics", help="write per-bin IRLS diagnostics CSV")
    p.add_argument("--allow-unconverged", action="store_true")
    p.add_argument("--csv", help="also export driving function as CSV")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("fieldmap", help="sample a field and its error map "
                                        "over a plane")
    p.add_argument("--scene", required=True)
    p.add_argument("--freq", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", action="store_true")
    p.add_argument("--measured", action="store_true")
    p.add_argument("--method", choices=list(expansion.METHOD_TAGS))
    p.add_argument("--coeffs", help="reuse a captured coefficient file")
    p.add_argument("--driving", help="reuse an expanded driving file")
    p.add_argument("--half-extent", type=float, default=None)
    p.add_argument("--resolution", type=float, default=None)
    p.add_argument("--plane", default="xy", choices=["xy", "xz", "yz"])
    p.set_defaults(func=cmd_fieldmap)

    p = sub.add_parser("sweep", help="sphere-averaged error sweeps")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--methods", help="comma list incl. 'measured'")
    p.add_argument("--radii", help="comma-separated meters")
    p.add_argument("--freqs", help="comma-separated Hz")
    p.add_argument("--band", action="store_true",
                   help="log-spaced band sweep at a fixed radius")
    p.add_argument("--radius", type=float, default=None,
                   help="radius for --band mode")
    p.add_argument("--metrics", help="comma list of pe,ime,ide")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("brir", help="per-method binaural transfer spectra")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--methods", help="comma list")
    p.add_argument("--position", help="listener translation x,y,z")
    p.add_argument("--freqs", help="comma-separated Hz")
    p.set_defaults(func=cmd_brir)

    p = sub.add_parser("render", help="render audio through a method chain")
    p.add_argument("--scene", required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--audio", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trajectory", help="CSV t_sec,x,y,z")
    p.add_argument("--position", help="static listener position x,y,z")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("repro", help="full reproduction chain into a "
                                     "directory")
    p.add_argument("--scene", help="scene file (default: built-in reference "
                                   "scene)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_repro)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SftError, ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
