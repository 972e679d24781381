"""Rigid-sphere microphone simulation and coefficient estimation.

The "recording" of a scene is the set of truncated spherical harmonic
coefficients estimated from simulated sensor pressures on the rigid baffle.
The forward simulation runs at a higher order than the microphone
(``scene.forward_order``, default N + 8) so that the estimate carries the
spatial-aliasing and truncation artifacts a real array would produce.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularityError
from .scene import MicrophoneSpec, Scene
from .sphmath import (QuadratureGrid, cart_to_sph, index_orders, order_count,
                      rigid_baffle_b, sh_matrix, sph_bessel_j, sph_hankel1)

B_FLOOR_RATIO = 1e-5  # |b_n| floor, relative to max_n |b_n| at the same ka


@dataclass(frozen=True)
class SphericalCoefficients:
    """Order-limited sound field coefficients per frequency.

    data[f, j] is the coefficient for frequency bin f and flat harmonic
    index j = n^2 + n + m; data has shape (len(frequencies), (N+1)^2).
    ill_conditioned marks (f, n) cells where the rigid-baffle inversion hit
    the regularization floor.
    """

    n_max: int
    frequencies: np.ndarray        # Hz, shape (F,)
    data: np.ndarray               # complex, shape (F, (N+1)^2)
    ill_conditioned: np.ndarray | None = None   # bool, shape (F, N+1)

    def __post_init__(self):
        object.__setattr__(self, "frequencies",
                           np.atleast_1d(np.asarray(self.frequencies,
                                                    dtype=float)))
        data = np.asarray(self.data, dtype=complex)
        if data.ndim == 1:
            data = data[None, :]
        object.__setattr__(self, "data", data)
        if data.shape != (len(self.frequencies), order_count(self.n_max)):
            raise ValueError(
                f"coefficient array shape {data.shape} does not match "
                f"{len(self.frequencies)} bins x order {self.n_max}")
        if not np.all(np.isfinite(data)):
            raise ValueError("coefficients must be finite")

    def __len__(self) -> int:
        return len(self.frequencies)

    def single(self, f_index: int = 0) -> np.ndarray:
        return self.data[f_index]


def analytic_source_coefficients(position, k, n_max: int,
                                 amplitude=1.0) -> np.ndarray:
    """Exact interior expansion of a point source: alpha_nm = i k h_n(k|z|)
    conj(Y_nm(z^)) s(k), valid for field points with |x| < |z|.

    ``k`` may be scalar or an array of wavenumbers; returns shape
    (..., (n_max+1)^2).
    """
    position = np.asarray(position, dtype=float)
    r, theta, phi = cart_to_sph(position)
    if r == 0:
        raise SingularityError("point source at the expansion origin")
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise SingularityError("wavenumber must be positive")
    n, _ = index_orders(n_max)
    radial = 1j * k[..., None] * sph_hankel1(n, k[..., None] * r)
    angular = np.conj(sh_matrix(n_max, theta, phi)[0])
    return radial * angular * np.asarray(amplitude)[..., None]


def scene_true_coefficients(scene: Scene, k, n_max: int) -> np.ndarray:
    """Superposition of analytic coefficients of all scene sources."""
    total = None
    for src in scene.sources:
        c = analytic_source_coefficients(src.position, k, n_max)
        total = c if total is None else total + c
    return total


def simulate_sensor_pressures(alpha, mic: MicrophoneSpec, k) -> np.ndarray:
    """Pressure at each sensor of the rigid array: P_q = sum alpha_nm
    b_n(ka) Y_nm(x_q^).  The order is taken from the coefficient vector,
    which may exceed the microphone order (that is the point)."""
    alpha = np.asarray(alpha)
    n_max = int(np.sqrt(alpha.shape[-1])) - 1
    k = np.asarray(k, dtype=float)
    ka = k * mic.radius
    if np.any(ka <= 0):
        raise SingularityError("k * a must be positive")
    grid = mic.sensor_grid()
    n, _ = index_orders(n_max)
    bn = rigid_baffle_b(n, ka[..., None])
    basis = sh_matrix(n_max, grid.theta, grid.phi)   # (Q, M)
    return (alpha * bn) @ basis.T


def _regularized_b(mic_order: int, ka: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-order b_n with the small-magnitude floor applied.

    Where |b_n| < B_FLOOR_RATIO * max_n |b_n|, b_n is pushed out to the floor
    along its own phase instead of being dropped.  Returns (b, flagged)."""
    n = np.arange(mic_order + 1)
    b = rigid_baffle_b(n, ka)
    floor = B_FLOOR_RATIO * np.max(np.abs(b))
    flagged = np.abs(b) < floor
    if np.any(flagged):
        phase = np.where(np.abs(b) > 0, b / np.abs(b), 1.0)
        b = np.where(flagged, b + floor * phase, b)
    return b, flagged


def estimate_coefficients(pressures, mic: MicrophoneSpec, k,
                          return_flags: bool = False):
    """Recorded coefficients up to the microphone order via weighted
    quadrature over the sensors and rigid-baffle equalization."""
    pressures = np.asarray(pressures, dtype=complex)
    k = float(k)
    ka = k * mic.radius
    if ka <= 0:
        raise SingularityError("k * a must be positive")
    grid = mic.sensor_grid()
    if pressures.shape[-1] != len(grid):
        raise ValueError(f"expected {len(grid)} sensor pressures, "
                         f"got {pressures.shape[-1]}")
    raw = (pressures * grid.weights) @ np.conj(
        sh_matrix(mic.order, grid.theta, grid.phi))
    b, flagged = _regularized_b(mic.order, ka)
    n, _ = index_orders(mic.order)
    alpha = raw / b[n]
    if return_flags:
        return alpha, flagged
    return alpha


def record_scene(scene: Scene, frequencies,
                 n_sim: int | None = None) -> SphericalCoefficients:
    """Full capture chain at unit source gain: true field -> rigid-sphere
    sensors -> estimated coefficients, one row per frequency.

    Vectorized over the frequency grid; bins are independent."""
    frequencies = np.atleast_1d(np.asarray(frequencies, dtype=float))
    n_sim = scene.forward_order if n_sim is None else n_sim
    mic = scene.microphone
    k = scene.wavenumber(frequencies)
    ka = k * mic.radius
    grid = mic.sensor_grid()

    alpha_true = scene_true_coefficients(scene, k, n_sim)      # (F, Msim)
    n_hi, _ = index_orders(n_sim)
    bn_hi = rigid_baffle_b(n_hi, ka[:, None])
    basis_hi = sh_matrix(n_sim, grid.theta, grid.phi)          # (Q, Msim)
    pressures = (alpha_true * bn_hi) @ basis_hi.T              # (F, Q)

    basis_lo = sh_matrix(mic.order, grid.theta, grid.phi)      # (Q, M)
    raw = (pressures * grid.weights) @ np.conj(basis_lo)       # (F, M)
    n_orders = np.arange(mic.order + 1)
    b = rigid_baffle_b(n_orders, ka[:, None])                  # (F, N+1)
    floor = B_FLOOR_RATIO * np.max(np.abs(b), axis=-1, keepdims=True)
    flags = np.abs(b) < floor
    phase = np.where(np.abs(b) > 0, b / np.where(np.abs(b) > 0, np.abs(b), 1),
                     1.0)
    b = np.where(flags, b + floor * phase, b)
    n_lo, _ = index_orders(mic.order)
    out = raw / b[:, n_lo]
    return SphericalCoefficients(n_max=mic.order, frequencies=frequencies,
                                 data=out, ill_conditioned=flags)


def capture_stft(scene: Scene, samples, frame_size: int = 4096,
                 hop: int | None = None):
    """Per-frame recorded coefficients of a source signal.

    Returns (frequencies, coeffs) with coeffs of shape
    (n_frames, n_bins, (N+1)^2): the per-bin recorded transfer multiplied by
    each frame's spectrum.  Bin 0 (DC) is zeroed; there is no acoustics at
    k = 0.
    """
    from .render import stft_analyze
    spec = stft_analyze(samples, sample_rate=scene.sample_rate,
                        frame_size=frame_size, hop=hop)
    freqs = spec.frequencies
    transfer = np.zeros((len(freqs), order_count(scene.microphone.order)),
                        dtype=complex)
    nonzero = freqs > 0
    rec = record_scene(scene, freqs[nonzero])
    transfer[nonzero] = rec.data
    return freqs, spec.data[:, :, None] * transfer[None, :, :]
