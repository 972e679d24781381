"""Reproduction error metrics and spatial averaging.

All metrics are percentages.  Pressure error compares complex pressures,
intensity magnitude error compares active-intensity vectors, intensity
direction error measures the angle between them (0 aligned, 100
antiparallel).  Points where the reference quantity vanishes are masked, and
a spatial average is only valid while masked points stay below 1 percent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .sphmath import fliege_grid

METRIC_NAMES = ("pe", "ime", "ide")
MAX_MASKED_FRACTION = 0.01


def pressure_error(p_true, p_test):
    """PE = |P - P~|^2 / |P|^2 * 100; nan where the reference is zero."""
    p_true = np.asarray(p_true, dtype=complex)
    p_test = np.asarray(p_test, dtype=complex)
    denom = np.abs(p_true) ** 2
    bad = (denom == 0) | ~np.isfinite(denom)
    denom = np.where(bad, 1.0, denom)
    out = np.abs(p_true - p_test) ** 2 / denom * 100.0
    return np.where(bad, np.nan, out)


def intensity_magnitude_error(i_true, i_test):
    """IME = ||I - I~||^2 / ||I||^2 * 100; nan where the reference is zero."""
    i_true = np.asarray(i_true, dtype=float)
    i_test = np.asarray(i_test, dtype=float)
    denom = np.sum(i_true ** 2, axis=-1)
    bad = (denom == 0) | ~np.isfinite(denom)
    denom = np.where(bad, 1.0, denom)
    out = np.sum((i_true - i_test) ** 2, axis=-1) / denom * 100.0
    return np.where(bad, np.nan, out)


def intensity_direction_error(i_true, i_test):
    """IDE = arccos(I . I~ / (||I|| ||I~||)) / pi * 100, in [0, 100]."""
    i_true = np.asarray(i_true, dtype=float)
    i_test = np.asarray(i_test, dtype=float)
    nt = np.linalg.norm(i_true, axis=-1)
    ns = np.linalg.norm(i_test, axis=-1)
    bad = (nt == 0) | (ns == 0) | ~np.isfinite(nt) | ~np.isfinite(ns)
    dot = np.sum(i_true * i_test, axis=-1)
    denom = np.where(bad, 1.0, nt * ns)
    cosang = np.clip(dot / denom, -1.0, 1.0)
    out = np.arccos(cosang) / np.pi * 100.0
    return np.where(bad, np.nan, out)


def unit_vector_difference(i_true, i_test):
    """I/||I|| - I~/||I~||, nan rows where either vanishes."""
    i_true = np.asarray(i_true, dtype=float)
    i_test = np.asarray(i_test, dtype=float)
    nt = np.linalg.norm(i_true, axis=-1, keepdims=True)
    ns = np.linalg.norm(i_test, axis=-1, keepdims=True)
    bad = (nt == 0) | (ns == 0) | ~np.isfinite(nt) | ~np.isfinite(ns)
    out = (i_true / np.where(bad, 1.0, nt)
           - i_test / np.where(bad, 1.0, ns))
    return np.where(bad, np.nan, out)


_METRIC_FUNCS = {
    "pe": lambda t, s: pressure_error(t.pressure, s.pressure),
    "ime": lambda t, s: intensity_magnitude_error(t.intensity, s.intensity),
    "ide": lambda t, s: intensity_direction_error(t.intensity, s.intensity),
}


def metric_values(metric: str, true_values, test_values) -> np.ndarray:
    """Per-point metric between two FieldValues batches, nan-masked."""
    if metric not in _METRIC_FUNCS:
        raise ValueError(f"unknown metric {metric!r}; "
                         f"choose from {METRIC_NAMES}")
    vals = _METRIC_FUNCS[metric](true_values, test_values)
    shared = true_values.mask | test_values.mask
    return np.where(shared, np.nan, vals)


@dataclass(frozen=True)
class SphereAverage:
    value: float
    masked_count: int
    n_points: int


def sphere_average(metric: str, radius: float, true_evaluator,
                   test_evaluator, n_points: int = 100,
                   center=(0.0, 0.0, 0.0)) -> SphereAverage:
    """Area-weighted mean of a per-point metric over a sphere.

    Uses the bundled n_points node set; masked points are excluded from the
    (re-normalized) weighted mean and counted.  Raises when everything is
    masked or more than 1 percent of the surface is.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    grid = fliege_grid(n_points)
    pts = grid.scaled_points(radius) + np.asarray(center, dtype=float)
    vals = metric_values(metric, true_evaluator(pts), test_evaluator(pts))
    ok = np.isfinite(vals)
    masked = int(np.sum(~ok))
    if masked == len(vals):
        raise ValidationError("sphere average undefined: all points masked")
    if masked > MAX_MASKED_FRACTION * len(vals):
        raise ValidationError(
            f"sphere average invalid: {masked}/{len(vals)} points masked")
    w = grid.weights[ok]
    return SphereAverage(value=float(np.sum(w * vals[ok]) / np.sum(w)),
                         masked_count=masked, n_points=len(vals))
