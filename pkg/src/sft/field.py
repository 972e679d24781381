"""Pressure, velocity, and intensity evaluation in the virtual environment.

Velocity is the rho*c = 1 normalization of Euler's equation with the
exp(-i w t) time convention: V = grad(P) / (i k).  All reported error
metrics are ratios or angles, so the normalization cancels; absolute
intensity is in these normalized units.  Intensity is I = Re(P * conj(V)) / 2
componentwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError, SingularityError
from .expansion import DrivingFunction, VirtualDistribution
from .scene import Scene
from .sphmath import (cart_to_sph, gradient_matrices, index_orders,
                      sh_matrix, sph_bessel_j)

SINGULARITY_RADIUS = 1e-9  # points closer than this to a source are masked


@dataclass(frozen=True)
class FieldValues:
    """Vectorized field samples at a batch of points."""

    points: np.ndarray          # (P, 3)
    pressure: np.ndarray        # complex (P,)
    velocity: np.ndarray        # complex (P, 3)
    mask: np.ndarray            # bool (P,), True = invalid (singular)

    @property
    def intensity(self) -> np.ndarray:
        return 0.5 * np.real(self.pressure[:, None]
                             * np.conj(self.velocity))


def _finish(points, pressure, velocity, mask, allow_masked):
    pressure = np.where(mask, np.nan + 0j, pressure)
    velocity = np.where(mask[:, None], np.nan + 0j, velocity)
    if np.any(mask) and not allow_masked:
        raise SingularityError("evaluation point coincides with a source")
    return FieldValues(points=points, pressure=pressure, velocity=velocity,
                       mask=mask)


def _point_source_field(points, source_pos, k, amplitude):
    """Green kernel s * exp(ikd)/(4 pi d) and its velocity."""
    diff = points - np.asarray(source_pos, dtype=float)[None, :]
    d = np.linalg.norm(diff, axis=-1)
    mask = d < SINGULARITY_RADIUS
    d_safe = np.where(mask, 1.0, d)
    p = amplitude * np.exp(1j * k * d_safe) / (4.0 * np.pi * d_safe)
    v = p[:, None] * (1.0 + 1j / (k * d_safe))[:, None] * (diff / d_safe[:, None])
    return p, v, mask


def eval_true_field(scene: Scene, points, k,
                    allow_masked: bool = False) -> FieldValues:
    """Exact field of all scene sources (unit per-bin gain)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    k = float(k)
    pressure = np.zeros(len(points), dtype=complex)
    velocity = np.zeros((len(points), 3), dtype=complex)
    mask = np.zeros(len(points), dtype=bool)
    for src in scene.sources:
        p, v, m = _point_source_field(points, src.position, k, 1.0)
        pressure += p
        velocity += v
        mask |= m
    return _finish(points, pressure, velocity, mask, allow_masked)


def eval_truncated_field(alpha, points, k,
                         allow_masked: bool = False) -> FieldValues:
    """Field synthesized from an order-limited coefficient vector.

    Valid everywhere; accuracy beyond the sweet spot degrades with the
    truncation, which is exactly what the error maps study.  The velocity
    uses the analytic modal gradient ladder, so it is regular at the origin
    and on the polar axis.
    """
    alpha = np.asarray(alpha, dtype=complex)
    n_max = int(np.sqrt(alpha.shape[-1])) - 1
    points = np.atleast_2d(np.asarray(points, dtype=float))
    k = float(k)
    r, theta, phi = cart_to_sph(points)
    n1, _ = index_orders(n_max + 1)
    basis = sph_bessel_j(n1, k * r[:, None]) * sh_matrix(n_max + 1, theta, phi)
    m_low = (n_max + 1) ** 2
    pressure = basis[:, :m_low] @ alpha
    gx, gy, gz = gradient_matrices(n_max)
    # V = grad(P) / (ik) = -i * sum (G alpha)_nm j_n Y_nm  (k cancels)
    velocity = -1j * np.stack([basis @ (g @ alpha) for g in (gx, gy, gz)],
                              axis=-1)
    mask = np.zeros(len(points), dtype=bool)
    return _finish(points, pressure, velocity, mask, allow_masked)


def eval_distribution_field(df: DrivingFunction, points, k,
                            f_index: int = 0,
                            allow_masked: bool = False) -> FieldValues:
    """Weighted superposition of the virtual sources' kernels.

    Planewave sources contribute psi*w * exp(-ik y^.x)/(4 pi); mixedwave
    sources contribute psi*w * |y| exp(-ik|y|) exp(ik||y-x||) /
    (4 pi ||y-x||).  IRLS driving functions carry unit synthesis weights.
    """
    dist = df.distribution
    points = np.atleast_2d(np.asarray(points, dtype=float))
    k = float(k)
    gains = df.psi[f_index] * df.synthesis_weights
    if dist.model == "planewave":
        units = dist.unit_vectors                       # (L, 3)
        phase = np.exp(-1j * k * (points @ units.T)) / (4.0 * np.pi)
        pressure = phase @ gains
        velocity = -(phase * gains) @ units
        mask = np.zeros(len(points), dtype=bool)
    else:
        pos = dist.positions                            # (L, 3)
        norm = dist.radii * np.exp(-1j * k * dist.radii)
        diff = points[:, None, :] - pos[None, :, :]     # (P, L, 3)
        d = np.linalg.norm(diff, axis=-1)
        mask = np.any(d < SINGULARITY_RADIUS, axis=-1)
        d = np.where(d < SINGULARITY_RADIUS, 1.0, d)
        kernel = np.exp(1j * k * d) / (4.0 * np.pi * d)   # (P, L)
        terms = kernel * (gains * norm)[None, :]
        pressure = np.sum(terms, axis=-1)
        radial = (1.0 + 1j / (k * d))[:, :, None] * diff / d[:, :, None]
        velocity = np.sum(terms[:, :, None] * radial, axis=1)
    return _finish(points, pressure, velocity, mask, allow_masked)


def translate_pw(df: DrivingFunction, d, speed_of_sound: float) -> DrivingFunction:
    """Translate a planewave driving function by the phase shift
    psi(k, y^; d) = psi(k, y^; o) * exp(-ik y^ . d)."""
    if df.distribution.model != "planewave":
        raise ModelError("phase-shift translation applies to planewave "
                         "driving functions; mixedwave translation happens "
                         "in the ear transfers")
    d = np.asarray(d, dtype=float)
    k = 2.0 * np.pi * df.frequencies / speed_of_sound
    proj = df.distribution.unit_vectors @ d              # (L,)
    shift = np.exp(-1j * k[:, None] * proj[None, :])
    return DrivingFunction(method=df.method, distribution=df.distribution,
                           frequencies=df.frequencies, psi=df.psi * shift,
                           diagnostics=dict(df.diagnostics))


# ---------------------------------------------------------------------------
# field grids
# ---------------------------------------------------------------------------

_PLANE_AXES = {"xy": (0, 1, 2), "xz": (0, 2, 1), "yz": (1, 2, 0)}


@dataclass(frozen=True)
class PlaneGridSpec:
    """Square sampling plane through the origin."""

    half_extent: float
    resolution: float
    plane: str = "xy"
    offset: float = 0.0      # coordinate of the remaining axis

    def __post_init__(self):
        if self.plane not in _PLANE_AXES:
            raise ValueError(f"unknown plane {self.plane!r}")
        if self.half_extent <= 0 or self.resolution <= 0:
            raise ValueError("half_extent and resolution must be positive")

    @property
    def axis_values(self) -> np.ndarray:
        n = int(round(2.0 * self.half_extent / self.resolution)) + 1
        return -self.half_extent + self.resolution * np.arange(n)

    def points(self) -> np.ndarray:
        vals = self.axis_values
        a, b = np.meshgrid(vals, vals, indexing="ij")
        i, j, k_ax = _PLANE_AXES[self.plane]
        pts = np.empty((a.size, 3))
        pts[:, i] = a.ravel()
        pts[:, j] = b.ravel()
        pts[:, k_ax] = self.offset
        return pts


@dataclass(frozen=True)
class FieldGrid:
    spec: PlaneGridSpec
    values: FieldValues
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values.pressure)


def compute_field_grid(evaluator, spec: PlaneGridSpec,
                       metadata: dict | None = None) -> FieldGrid:
    """Evaluate a field over a plane; singular points are masked, not fatal.

    ``evaluator`` maps an (P, 3) array of points to FieldValues (see
    eval_* closures in this module)."""
    pts = spec.points()
    values = evaluator(pts)
    return FieldGrid(spec=spec, values=values, metadata=metadata or {})


def true_evaluator(scene: Scene, k):
    return lambda pts: eval_true_field(scene, pts, k, allow_masked=True)


def truncated_evaluator(alpha, k):
    return lambda pts: eval_truncated_field(alpha, pts, k, allow_masked=True)


def distribution_evaluator(df: DrivingFunction, k, f_index: int = 0):
    return lambda pts: eval_distribution_field(df, pts, k, f_index=f_index,
                                               allow_masked=True)
