"""Block-STFT engine: source signals through a method chain to stereo audio.

Frames of 4096 samples with 50 percent overlap and a Hann analysis window
(constant overlap-add at that hop).  Per frame the listener position is held
constant; the frame is convolved linearly with the method's per-ear impulse
response (zero-padded FFT, so no circular wrap), then overlap-added.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binaural import MethodBank, stft_bin_frequencies
from .errors import ValidationError
from .scene import Scene

FRAME_SIZE = 4096
HOP = FRAME_SIZE // 2


@dataclass(frozen=True)
class AudioBuffer:
    sample_rate: int
    samples: np.ndarray          # (n,) mono or (n, channels)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if not np.all(np.isfinite(samples)):
            raise ValidationError("audio samples must be finite")
        if self.sample_rate <= 0:
            raise ValidationError("sample rate must be positive")
        object.__setattr__(self, "samples", samples)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate


@dataclass(frozen=True)
class StftFrames:
    data: np.ndarray             # complex (n_frames, n_bins)
    sample_rate: int
    frame_size: int
    hop: int

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def frequencies(self) -> np.ndarray:
        return np.fft.rfftfreq(self.frame_size, d=1.0 / self.sample_rate)

    def frame_centers(self) -> np.ndarray:
        starts = self.hop * np.arange(self.n_frames)
        return (starts + self.frame_size / 2.0) / self.sample_rate


def _window(frame_size: int) -> np.ndarray:
    # periodic Hann: exact COLA at 50% overlap
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(frame_size) / frame_size)


def stft_analyze(samples, sample_rate: int, frame_size: int = FRAME_SIZE,
                 hop: int | None = None) -> StftFrames:
    """Hann-windowed frames; n_frames = floor((n - frame)/hop) + 1."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise ValidationError("stft input must be mono")
    hop = frame_size // 2 if hop is None else hop
    if len(x) < frame_size:
        raise ValidationError(
            f"signal of {len(x)} samples is shorter than one frame "
            f"({frame_size})")
    n_frames = (len(x) - frame_size) // hop + 1
    win = _window(frame_size)
    frames = np.stack([x[i * hop:i * hop + frame_size] * win
                       for i in range(n_frames)])
    return StftFrames(data=np.fft.rfft(frames, axis=-1),
                      sample_rate=sample_rate, frame_size=frame_size, hop=hop)


def stft_synthesize(frames: StftFrames) -> np.ndarray:
    """Overlap-add resynthesis; exact on interior samples for 50% Hann."""
    n = frames.frame_size + frames.hop * (frames.n_frames - 1)
    out = np.zeros(n)
    time_frames = np.fft.irfft(frames.data, n=frames.frame_size, axis=-1)
    for i in range(frames.n_frames):
        out[i * frames.hop:i * frames.hop + frames.frame_size] += time_frames[i]
    return out


@dataclass(frozen=True)
class Trajectory:
    """Timestamped listener positions; linear interpolation between them."""

    times: np.ndarray            # (T,), seconds, increasing
    positions: np.ndarray        # (T, 3)

    def __post_init__(self):
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if len(times) != len(positions):
            raise ValidationError("trajectory times and positions differ "
                                  "in length")
        if np.any(np.diff(times) < 0):
            raise ValidationError("trajectory times must be non-decreasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)

    @classmethod
    def static(cls, position) -> "Trajectory":
        return cls(times=np.array([0.0]),
                   positions=np.atleast_2d(np.asarray(position, float)))

    def at(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((len(t), 3))
        for ax in range(3):
            out[:, ax] = np.interp(t, self.times, self.positions[:, ax])
        return out


def render_trajectory(scene: Scene, method: str, trajectory: Trajectory,
                      audio: AudioBuffer, bank: MethodBank | None = None
                      ) -> AudioBuffer:
    """Render a moving listener: capture -> expand (once, static scene) ->
    per-frame auralization at the frame-center position -> overlap-add.

    Output is stereo (left, right), same length as the input.
    """
    if audio.sample_rate != scene.sample_rate:
        raise ValidationError(
            f"audio sample rate {audio.sample_rate} does not match the "
            f"scene's {scene.sample_rate}")
    x = audio.samples
    if x.ndim != 1:
        raise ValidationError("render input must be mono")
    freqs = stft_bin_frequencies(scene.sample_rate, FRAME_SIZE)
    if bank is None:
        bank = MethodBank(scene, freqs)

    pad = FRAME_SIZE
    padded = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    frames = stft_analyze(padded, scene.sample_rate)
    centers = frames.frame_centers() - pad / scene.sample_rate
    positions = trajectory.at(np.clip(centers, trajectory.times[0],
                                      trajectory.times[-1]))

    if method.startswith("mw"):
        near = scene.mixedwave.near_radius if scene.mixedwave else np.inf
        dist = np.linalg.norm(positions, axis=-1)
        bad = np.nonzero(dist >= near)[0]
        if len(bad):
            raise ValidationError(
                f"trajectory leaves the mixedwave near shell at frame "
                f"{bad[0]} (|d| = {dist[bad[0]]:.3g} m >= {near:.3g} m)")

    # bulk delay keeps anticipatory transfers (listener moving toward a
    # source) causal inside the per-frame impulse response; compensated
    # exactly when slicing the output
    bulk = 256
    phase = np.exp(-2j * np.pi * freqs * bulk / scene.sample_rate)

    fft_size = 2 * FRAME_SIZE
    n_out = len(padded) + fft_size
    out = np.zeros((n_out, 2))
    time_frames = np.fft.irfft(frames.data, n=FRAME_SIZE, axis=-1)

    cache: dict[tuple, np.ndarray] = {}
    for i in range(frames.n_frames):
        key = tuple(np.round(positions[i], 12))
        if key not in cache:
            transfer = np.zeros((FRAME_SIZE // 2 + 1, 2), dtype=complex)
            # conjugate: field transfers use the exp(-i w t) convention,
            # the DFT delay convention is the opposite sign
            transfer[1:] = np.conj(bank.transfer(method, positions[i])) \
                * phase[:, None]
            cache[key] = np.fft.irfft(transfer, n=FRAME_SIZE, axis=0)
        ir = cache[key]
        spec = np.fft.rfft(time_frames[i], n=fft_size)
        for ear in range(2):
            seg = np.fft.irfft(spec * np.fft.rfft(ir[:, ear], n=fft_size),
                               n=fft_size)
            start = i * HOP
            out[start:start + fft_size, ear] += seg

    rendered = out[pad + bulk:pad + bulk + len(x)]
    return AudioBuffer(sample_rate=scene.sample_rate, samples=rendered)


def brir_impulse(spectrum, sample_rate: int,
                 frame_size: int = FRAME_SIZE) -> np.ndarray:
    """Time-domain (frame_size, 2) impulse response of a BRIR spectrum
    sampled on the STFT bin grid; bins not covered (DC included) are zero.
    Conjugation converts from the field convention exp(-i w t) to the DFT
    delay convention."""
    n_bins = frame_size // 2 + 1
    transfer = np.zeros((n_bins, 2), dtype=complex)
    idx = np.rint(spectrum.frequencies * frame_size / sample_rate).astype(int)
    keep = (idx >= 1) & (idx < n_bins)
    transfer[idx[keep]] = np.conj(spectrum.pair()[keep])
    return np.fft.irfft(transfer, n=frame_size, axis=0)
