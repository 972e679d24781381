"""Binaural rendering of the reference, anchor, and expanded methods.

The listener is two ear points at +/- ear_offset on the y-axis of the head
frame (no head scattering, matching the free-field transfer assumption).
Every auralization is the evaluation of its method's sound field at the ear
points:

* reference: exact Green transfer from each real source to each translated
  ear;
* anchor: the truncated recording evaluated at origin-fixed ears, never
  translated;
* planewave methods: origin-anchored ear phases with the driving function
  phase-shifted to the listener position (the head transfer does not
  translate, only the field does);
* mixedwave methods: per-source Green transfers re-drawn from every virtual
  source to the translated ears (the head transfer moves with the listener).

An optional measured HRTF grid can replace the free-field ear factors; it is
interpreted as a far-field transfer relative to the head center with
nearest-direction lookup.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .capture import SphericalCoefficients, record_scene
from .errors import ModelError, SingularityError, ValidationError
from .expansion import (METHOD_TAGS, DrivingFunction, expand)
from .field import eval_distribution_field, eval_true_field, \
    eval_truncated_field, translate_pw
from .scene import Scene
from .sphmath import cart_to_sph, index_orders, sh_matrix, sph_bessel_j

REFERENCE, ANCHOR = "reference", "anchor"
ALL_METHODS = (REFERENCE, ANCHOR) + METHOD_TAGS


@dataclass(frozen=True)
class EarGeometry:
    """Ear points relative to the head center; left is +y."""

    offset: float = 0.09

    def offsets(self) -> np.ndarray:
        return np.array([[0.0, self.offset, 0.0],
                         [0.0, -self.offset, 0.0]])

    def positions(self, listener_pos) -> np.ndarray:
        return np.asarray(listener_pos, dtype=float)[None, :] + self.offsets()


@dataclass(frozen=True)
class BinauralSpectrum:
    method: str
    position: tuple
    frequencies: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frequencies",
                           np.atleast_1d(np.asarray(self.frequencies, float)))
        object.__setattr__(self, "left", np.atleast_1d(np.asarray(self.left)))
        object.__setattr__(self, "right", np.atleast_1d(np.asarray(self.right)))
        if not (len(self.left) == len(self.right) == len(self.frequencies)):
            raise ValueError("per-ear spectra must match the frequency grid")

    def pair(self) -> np.ndarray:
        return np.stack([self.left, self.right], axis=-1)


@dataclass(frozen=True)
class HrtfGrid:
    """Measured far-field head transfers relative to the head center.

    Rows: one direction per (theta, phi); values left/right per frequency.
    Lookup is nearest-direction; frequencies are interpolated linearly.
    """

    theta: np.ndarray            # (D,)
    phi: np.ndarray              # (D,)
    frequencies: np.ndarray      # (Fh,)
    left: np.ndarray             # complex (D, Fh)
    right: np.ndarray            # complex (D, Fh)

    def __post_init__(self):
        for attr in ("theta", "phi", "frequencies"):
            object.__setattr__(self, attr,
                               np.asarray(getattr(self, attr), dtype=float))
        object.__setattr__(self, "left", np.asarray(self.left, complex))
        object.__setattr__(self, "right", np.asarray(self.right, complex))

    @property
    def max_gap(self) -> float:
        """Largest angular distance from any direction to its neighbors."""
        u = _units(self.theta, self.phi)
        cosg = np.clip(u @ u.T, -1, 1)
        np.fill_diagonal(cosg, -1)
        return float(np.max(np.arccos(np.max(cosg, axis=1))))

    def lookup(self, theta, phi, freqs) -> np.ndarray:
        """Nearest-direction transfer, (P, F, 2)."""
        u = _units(self.theta, self.phi)
        q = _units(np.atleast_1d(theta), np.atleast_1d(phi))
        nearest = np.argmax(q @ u.T, axis=-1)
        out = np.empty((len(q), len(np.atleast_1d(freqs)), 2), complex)
        for ear, table in enumerate((self.left, self.right)):
            sel = table[nearest]                      # (P, Fh)
            re = np.array([np.interp(freqs, self.frequencies, row.real)
                           for row in sel])
            im = np.array([np.interp(freqs, self.frequencies, row.imag)
                           for row in sel])
            out[:, :, ear] = re + 1j * im
        return out


def _units(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)],
                    axis=-1)


# ---------------------------------------------------------------------------
# elementary ear transfers
# ---------------------------------------------------------------------------

def ear_transfer_point(source_pos, ear_pos, k):
    """Free-field Green transfer exp(ik r)/(4 pi r) from source to ear."""
    diff = np.asarray(ear_pos, float) - np.asarray(source_pos, float)
    r = np.linalg.norm(diff, axis=-1)
    if np.any(r < 1e-12):
        raise SingularityError("source coincides with the ear point")
    k = np.asarray(k, dtype=float)
    return np.exp(1j * k * r) / (4.0 * np.pi * r)


def ear_transfer_planewave(direction, ear_pos, k):
    """Unit-magnitude phase factor exp(-ik y^ . x_ear) of a plane wave with
    incident direction y^ (arriving from that direction)."""
    u = np.asarray(direction, dtype=float)
    proj = float(np.dot(u / np.linalg.norm(u), np.asarray(ear_pos, float)))
    k = np.asarray(k, dtype=float)
    return np.exp(-1j * k * proj)


# ---------------------------------------------------------------------------
# per-method auralization at a single wavenumber
# ---------------------------------------------------------------------------

def auralize_reference(scene: Scene, d, k, ears: EarGeometry | None = None
                       ) -> np.ndarray:
    """True binaural pair (left, right) at translated position d."""
    ears = ears or EarGeometry(scene.ear_offset)
    return eval_true_field(scene, ears.positions(d), float(k)).pressure


def auralize_anchor(alpha, k, ears: EarGeometry) -> np.ndarray:
    """Truncated recording at origin-fixed ears; translation never applies."""
    return eval_truncated_field(alpha, ears.positions((0.0, 0.0, 0.0)),
                                float(k)).pressure


def auralize_pw(df: DrivingFunction, d, k, speed_of_sound: float,
                ears: EarGeometry, hrtf: HrtfGrid | None = None) -> np.ndarray:
    """Planewave auralization: origin-anchored ear transfers against the
    phase-shifted driving function."""
    if df.distribution.model != "planewave":
        raise ModelError("planewave auralization got a mixedwave driving "
                         "function")
    shifted = translate_pw(df, d, speed_of_sound)
    f_index = int(np.argmin(np.abs(
        df.frequencies - float(k) * speed_of_sound / (2 * np.pi))))
    if hrtf is None:
        return eval_distribution_field(
            shifted, ears.positions((0.0, 0.0, 0.0)), float(k),
            f_index=f_index).pressure
    dist = df.distribution
    gains = shifted.psi[f_index] * shifted.synthesis_weights
    f = float(k) * speed_of_sound / (2 * np.pi)
    h = hrtf.lookup(dist.theta, dist.phi, [f])[:, 0, :]    # (L, 2)
    return (gains @ h) / (4.0 * np.pi)


def auralize_mw(df: DrivingFunction, d, k, ears: EarGeometry,
                hrtf: HrtfGrid | None = None,
                speed_of_sound: float | None = None) -> np.ndarray:
    """Mixedwave auralization: per-source transfers to the translated ears,
    with the |y| exp(-ik|y|) source normalization, so that zero ear offset
    reproduces the distribution field pressure at d exactly."""
    if df.distribution.model != "mixedwave":
        raise ModelError("mixedwave auralization got a planewave driving "
                         "function")
    d = np.asarray(d, dtype=float)
    near = df.distribution.near_radius
    if np.linalg.norm(d) >= near:
        raise ValidationError(
            f"listener translation {np.linalg.norm(d):.3g} m leaves the "
            f"near shell (radius {near:.3g} m)")
    k = float(k)
    f_index = 0
    if len(df.frequencies) > 1 and speed_of_sound is not None:
        f_index = int(np.argmin(np.abs(
            df.frequencies - k * speed_of_sound / (2 * np.pi))))
    if hrtf is None:
        return eval_distribution_field(df, ears.positions(d), k,
                                       f_index=f_index).pressure
    dist = df.distribution
    gains = df.psi[f_index] * df.synthesis_weights
    diff = dist.positions - d[None, :]
    r = np.linalg.norm(diff, axis=-1)
    _, th, ph = cart_to_sph(diff)
    center = np.exp(1j * k * r) / (4.0 * np.pi * r)
    norm = dist.radii * np.exp(-1j * k * dist.radii)
    f = k * (speed_of_sound or 343.0) / (2 * np.pi)
    h = hrtf.lookup(th, ph, [f])[:, 0, :]                  # (L, 2)
    return ((gains * norm * center) @ h)


# ---------------------------------------------------------------------------
# whole-band transfers and BRIRs
# ---------------------------------------------------------------------------

class MethodBank:
    """Caches the recording and expansions of a static scene on a frequency
    grid, so BRIR and trajectory rendering reuse one IRLS solve per bin."""

    def __init__(self, scene: Scene, frequencies, p: float = 1.0):
        self.scene = scene
        self.frequencies = np.atleast_1d(np.asarray(frequencies, float))
        if np.any(self.frequencies <= 0):
            raise ValueError("frequency grid must be positive (no DC bin)")
        self.ears = EarGeometry(scene.ear_offset)
        self.p = p
        self._recording: SphericalCoefficients | None = None
        self._expansions: dict[str, DrivingFunction] = {}

    @property
    def recording(self) -> SphericalCoefficients:
        if self._recording is None:
            self._recording = record_scene(self.scene, self.frequencies)
        return self._recording

    def driving(self, method: str) -> DrivingFunction:
        if method not in self._expansions:
            self._expansions[method] = expand(self.recording, self.scene,
                                              method, p=self.p)
        return self._expansions[method]

    def transfer(self, method: str, d,
                 hrtf: HrtfGrid | None = None) -> np.ndarray:
        """Per-ear transfer over the whole grid, shape (F, 2)."""
        d = np.asarray(d, dtype=float)
        k = self.scene.wavenumber(self.frequencies)
        if method == REFERENCE:
            return self._reference(d, k)
        if method == ANCHOR:
            return self._anchor(k)
        if method not in METHOD_TAGS:
            raise ModelError(f"unknown auralization method {method!r}")
        df = self.driving(method)
        if method.startswith("mw"):
            near = df.distribution.near_radius
            if np.linalg.norm(d) >= near:
                raise ValidationError(
                    f"listener translation {np.linalg.norm(d):.3g} m leaves "
                    f"the near shell (radius {near:.3g} m)")
            return self._mixedwave(df, d, k, hrtf)
        return self._planewave(df, d, k, hrtf)

    def brir(self, method: str, d,
             hrtf: HrtfGrid | None = None) -> BinauralSpectrum:
        pair = self.transfer(method, d, hrtf=hrtf)
        return BinauralSpectrum(method=method, position=tuple(np.asarray(d)),
                                frequencies=self.frequencies,
                                left=pair[:, 0], right=pair[:, 1])

    # -- vectorized per-method math ---------------------------------------

    def _ear_points(self, d) -> np.ndarray:
        return self.ears.positions(d)

    def _reference(self, d, k) -> np.ndarray:
        ears = self._ear_points(d)
        out = np.zeros((len(k), 2), dtype=complex)
        for src in self.scene.sources:
            r = np.linalg.norm(ears - np.asarray(src.position)[None, :],
                               axis=-1)
            out += np.exp(1j * np.outer(k, r)) / (4.0 * np.pi * r[None, :])
        return out

    def _anchor(self, k) -> np.ndarray:
        alpha = self.recording.data                       # (F, M)
        n_max = self.recording.n_max
        ears = self._ear_points((0.0, 0.0, 0.0))
        r, th, ph = cart_to_sph(ears)
        n, _ = index_orders(n_max)
        angular = sh_matrix(n_max, th, ph)                # (2, M)
        radial = sph_bessel_j(n[None, :, None],
                              k[:, None, None] * r[None, None, :])
        return np.einsum("fm,fme,em->fe", alpha, radial, angular)

    def _planewave(self, df, d, k, hrtf) -> np.ndarray:
        dist = df.distribution
        gains = df.psi * df.synthesis_weights[None, :]    # (F, L)
        units = dist.unit_vectors
        shift = np.exp(-1j * np.outer(k, units @ d))      # (F, L)
        if hrtf is None:
            ears = self.ears.offsets()
            earph = np.exp(-1j * k[:, None, None]
                           * (units @ ears.T)[None, :, :])  # (F, L, 2)
        else:
            earph = np.moveaxis(
                hrtf.lookup(dist.theta, dist.phi, self.frequencies), 0, 1)
        return np.einsum("fl,fl,fle->fe", gains, shift, earph) / (4.0 * np.pi)

    def _mixedwave(self, df, d, k, hrtf) -> np.ndarray:
        dist = df.distribution
        gains = df.psi * df.synthesis_weights[None, :]    # (F, L)
        norm = dist.radii * np.exp(-1j * np.outer(k, dist.radii))  # (F, L)
        if hrtf is None:
            ears = self._ear_points(d)                    # (2, 3)
            diff = ears[None, :, :] - dist.positions[:, None, :]   # (L, 2, 3)
            r = np.linalg.norm(diff, axis=-1)             # (L, 2)
            kern = np.exp(1j * k[:, None, None] * r[None, :, :]) \
                / (4.0 * np.pi * r[None, :, :])           # (F, L, 2)
        else:
            diff = dist.positions - np.asarray(d, float)[None, :]
            rc = np.linalg.norm(diff, axis=-1)
            _, th, ph = cart_to_sph(diff)
            center = np.exp(1j * k[:, None] * rc[None, :]) \
                / (4.0 * np.pi * rc[None, :])             # (F, L)
            h = np.moveaxis(hrtf.lookup(th, ph, self.frequencies), 0, 1)
            kern = center[:, :, None] * h
        return np.einsum("fl,fl,fle->fe", gains, norm, kern)


def compute_brir(scene: Scene, method: str, d, frequencies=None,
                 bank: MethodBank | None = None,
                 hrtf: HrtfGrid | None = None) -> BinauralSpectrum:
    """Per-bin BRIR transfer of a method chain at listener position d.

    The chain is linear and time-invariant per bin, so the per-bin transfer
    equals what a swept-sine measurement would deconvolve; the render module
    carries the block-STFT cross-check.  Default frequency grid: the STFT
    bin centers (frame 4096) up to Nyquist, DC excluded.
    """
    if frequencies is None:
        frequencies = stft_bin_frequencies(scene.sample_rate)
    if bank is None or not np.array_equal(bank.frequencies,
                                          np.atleast_1d(frequencies)):
        bank = MethodBank(scene, frequencies)
    return bank.brir(method, d, hrtf=hrtf)


def stft_bin_frequencies(sample_rate: int, frame_size: int = 4096
                         ) -> np.ndarray:
    """Positive rfft bin centers of the processing frame (DC excluded)."""
    return np.arange(1, frame_size // 2 + 1) * sample_rate / frame_size
