"""File formats: coefficient and driving-function binaries, CSV exports,
WAV audio, trajectories, and run manifests.

Binary layouts (all little-endian):

SFC1 (recorded coefficients)
    magic 'SFC1' | uint32 order N | uint32 bin_count | uint32 frame_count |
    uint32 frame_size | uint32 hop | float64 sample_rate |
    float64 frequencies[bin_count] |
    complex64 data[frame_count][bin_count][(N+1)^2]

SFD1 (driving functions)
    magic 'SFD1' | uint8 method tag | uint32 source_count | uint32 bin_count |
    float64 sample_rate |
    source table: float64 (theta, phi, radius, weight) per source
    (radius = inf for planewave sources) |
    float64 frequencies[bin_count] | complex64 psi[bin_count][source_count]

Numbers in CSV exports are printed with repr-round-trip precision so
repeated runs are byte-identical.
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .capture import SphericalCoefficients
from .errors import ValidationError
from .expansion import METHOD_TAGS, DrivingFunction, VirtualDistribution
from .field import FieldGrid
from .metrics import unit_vector_difference
from .render import AudioBuffer, Trajectory

SFC_MAGIC = b"SFC1"
SFD_MAGIC = b"SFD1"

def _fmt(x) -> str:
    # repr: shortest string that round-trips the double exactly
    return repr(float(x))


# ---------------------------------------------------------------------------
# coefficients (SFC1)
# ---------------------------------------------------------------------------

def write_coefficients(path, coeffs: SphericalCoefficients,
                       sample_rate: float, frame_count: int = 1,
                       frame_size: int = 0, hop: int = 0,
                       frames_data: np.ndarray | None = None):
    """Write a coefficient file; frames_data (T, F, M) overrides the single
    snapshot in ``coeffs.data`` when per-frame data exists."""
    data = frames_data if frames_data is not None else coeffs.data[None]
    t, f, m = data.shape
    if f != len(coeffs.frequencies) or m != coeffs.data.shape[1]:
        raise ValueError("frame data does not match coefficient layout")
    with open(path, "wb") as fh:
        fh.write(SFC_MAGIC)
        fh.write(struct.pack("<IIIII", coeffs.n_max, f, t, frame_size, hop))
        fh.write(struct.pack("<d", float(sample_rate)))
        fh.write(np.asarray(coeffs.frequencies, "<f8").tobytes())
        fh.write(np.ascontiguousarray(data, dtype="<c8").tobytes())


def read_coefficients(path):
    """Returns (SphericalCoefficients of frame 0, frames_data, header dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SFC_MAGIC:
            raise ValidationError(f"{path}: not a coefficient file "
                                  f"(magic {magic!r})")
        n_max, f, t, frame_size, hop = struct.unpack("<IIIII", fh.read(20))
        (fs,) = struct.unpack("<d", fh.read(8))
        freqs = np.frombuffer(fh.read(8 * f), dtype="<f8")
        m = (n_max + 1) ** 2
        data = np.frombuffer(fh.read(8 * t * f * m), dtype="<c8")
        data = data.reshape(t, f, m).astype(complex)
    header = {"n_max": n_max, "bin_count": f, "frame_count": t,
              "frame_size": frame_size, "hop": hop, "sample_rate": fs}
    coeffs = SphericalCoefficients(n_max=n_max, frequencies=freqs,
                                   data=data[0])
    return coeffs, data, header


def export_coefficients_csv(path, coeffs: SphericalCoefficients):
    from .sphmath import index_orders
    n, m = index_orders(coeffs.n_max)
    with open(path, "w") as fh:
        fh.write("freq_hz,n,m,re,im\n")
        for fi, f in enumerate(coeffs.frequencies):
            for j in range(len(n)):
                v = coeffs.data[fi, j]
                fh.write(f"{_fmt(f)},{n[j]},{m[j]},{_fmt(v.real)},"
                         f"{_fmt(v.imag)}\n")


# ---------------------------------------------------------------------------
# driving functions (SFD1)
# ---------------------------------------------------------------------------

def write_driving(path, df: DrivingFunction, sample_rate: float):
    dist = df.distribution
    tag = METHOD_TAGS.index(df.method)
    with open(path, "wb") as fh:
        fh.write(SFD_MAGIC)
        fh.write(struct.pack("<BII", tag, len(dist), len(df.frequencies)))
        fh.write(struct.pack("<d", float(sample_rate)))
        table = np.stack([dist.theta, dist.phi, dist.radii, dist.weights],
                         axis=-1)
        fh.write(np.ascontiguousarray(table, dtype="<f8").tobytes())
        fh.write(np.asarray(df.frequencies, "<f8").tobytes())
        fh.write(np.ascontiguousarray(df.psi, dtype="<c8").tobytes())


def read_driving(path) -> tuple[DrivingFunction, float]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SFD_MAGIC:
            raise ValidationError(f"{path}: not a driving-function file "
                                  f"(magic {magic!r})")
        tag, n_src, n_bins = struct.unpack("<BII", fh.read(9))
        (fs,) = struct.unpack("<d", fh.read(8))
        table = np.frombuffer(fh.read(8 * 4 * n_src), dtype="<f8")
        table = table.reshape(n_src, 4)
        freqs = np.frombuffer(fh.read(8 * n_bins), dtype="<f8")
        psi = np.frombuffer(fh.read(8 * n_bins * n_src), dtype="<c8")
        psi = psi.reshape(n_bins, n_src).astype(complex)
    method = METHOD_TAGS[tag]
    model = "planewave" if method.startswith("pw") else "mixedwave"
    dist = VirtualDistribution(model=model, theta=table[:, 0],
                               phi=table[:, 1], radii=table[:, 2],
                               weights=table[:, 3])
    return DrivingFunction(method=method, distribution=dist,
                           frequencies=freqs, psi=psi), fs


def export_driving_csv(path, df: DrivingFunction):
    dist = df.distribution
    with open(path, "w") as fh:
        fh.write("freq_hz,source,theta,phi,radius,weight,re,im\n")
        for fi, f in enumerate(df.frequencies):
            for l in range(len(dist)):
                v = df.psi[fi, l]
                fh.write(",".join([
                    _fmt(f), str(l), _fmt(dist.theta[l]), _fmt(dist.phi[l]),
                    _fmt(dist.radii[l]), _fmt(dist.weights[l]),
                    _fmt(v.real), _fmt(v.imag)]) + "\n")


# ---------------------------------------------------------------------------
# field grids and error maps
# ---------------------------------------------------------------------------

def export_field_grid_csv(path, grid: FieldGrid):
    v = grid.values
    intensity = v.intensity
    with open(path, "w") as fh:
        fh.write("x,y,z,Re(P),Im(P),Ix,Iy,Iz,mask\n")
        for i in range(len(v.pressure)):
            p = v.pressure[i] if not v.mask[i] else 0j
            ivec = intensity[i] if not v.mask[i] else np.zeros(3)
            fh.write(",".join([
                _fmt(v.points[i, 0]), _fmt(v.points[i, 1]),
                _fmt(v.points[i, 2]), _fmt(p.real), _fmt(p.imag),
                _fmt(ivec[0]), _fmt(ivec[1]), _fmt(ivec[2]),
                str(int(v.mask[i]))]) + "\n")


def export_field_metadata(path, metadata: dict):
    with open(path, "w") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")


def export_error_map_csv(path, true_values, test_values):
    """Per-point PE / IME / IDE and unit-vector difference columns."""
    from .metrics import metric_values
    pe = metric_values("pe", true_values, test_values)
    ime = metric_values("ime", true_values, test_values)
    ide = metric_values("ide", true_values, test_values)
    uvd = unit_vector_difference(true_values.intensity,
                                 test_values.intensity)
    mask = ~np.isfinite(pe) | ~np.isfinite(ide)
    pts = true_values.points
    with open(path, "w") as fh:
        fh.write("x,y,z,pe,ime,ide,udx,udy,udz,mask\n")
        for i in range(len(pe)):
            bad = bool(mask[i])
            row = [_fmt(pts[i, 0]), _fmt(pts[i, 1]), _fmt(pts[i, 2])]
            for val in (pe[i], ime[i], ide[i], uvd[i, 0], uvd[i, 1],
                        uvd[i, 2]):
                row.append("nan" if bad or not np.isfinite(val)
                           else _fmt(val))
            row.append(str(int(bad)))
            fh.write(",".join(row) + "\n")


def export_sweep_csv(path, rows):
    """rows: iterable of (freq_hz, radius_m, method, metric, value,
    masked_count)."""
    with open(path, "w") as fh:
        fh.write("freq_hz,radius_m,method,metric,value,masked_count\n")
        for f, r, method, metric, value, masked in rows:
            fh.write(f"{_fmt(f)},{_fmt(r)},{method},{metric},"
                     f"{_fmt(value)},{int(masked)}\n")


def export_brir_csv(path, spectrum):
    with open(path, "w") as fh:
        fh.write("freq_hz,left_db,right_db,left_phase,right_phase\n")
        for i, f in enumerate(spectrum.frequencies):
            l, r = spectrum.left[i], spectrum.right[i]
            fh.write(",".join([
                _fmt(f),
                _fmt(20.0 * np.log10(max(abs(l), 1e-300))),
                _fmt(20.0 * np.log10(max(abs(r), 1e-300))),
                _fmt(np.angle(l)), _fmt(np.angle(r))]) + "\n")


def read_brir_csv(path):
    rows = np.genfromtxt(path, delimiter=",", names=True)
    return rows


# ---------------------------------------------------------------------------
# audio and trajectories
# ---------------------------------------------------------------------------

def read_wav(path) -> AudioBuffer:
    fs, data = wavfile.read(path)
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    else:
        data = data.astype(np.float64)
    return AudioBuffer(sample_rate=int(fs), samples=data)


def write_wav(path, audio: AudioBuffer):
    wavfile.write(path, audio.sample_rate,
                  audio.samples.astype(np.float32))


def read_trajectory(path) -> Trajectory:
    rows = np.genfromtxt(path, delimiter=",", names=True)
    required = ("t_sec", "x", "y", "z")
    names = rows.dtype.names or ()
    for col in required:
        if col not in names:
            raise ValidationError(f"{path}: trajectory missing column "
                                  f"'{col}'")
    rows = np.atleast_1d(rows)
    return Trajectory(times=rows["t_sec"],
                      positions=np.stack([rows["x"], rows["y"], rows["z"]],
                                         axis=-1))


def write_trajectory(path, trajectory: Trajectory):
    with open(path, "w") as fh:
        fh.write("t_sec,x,y,z\n")
        for t, pos in zip(trajectory.times, trajectory.positions):
            fh.write(",".join([_fmt(t), _fmt(pos[0]), _fmt(pos[1]),
                               _fmt(pos[2])]) + "\n")


# ---------------------------------------------------------------------------
# run manifests
# ---------------------------------------------------------------------------

def scene_hash(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def write_manifest(path, command: str, scene_path, parameters: dict,
                   outputs: list, timestamps: dict | None = None):
    from . import __version__
    manifest = {
        "command": command,
        "scene_hash": scene_hash(scene_path) if scene_path else None,
        "parameters": parameters,
        "outputs": sorted(str(o) for o in outputs),
        "tool_version": __version__,
        "timestamps": timestamps or {},
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
