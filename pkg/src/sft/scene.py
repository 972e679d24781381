"""Scene description: sources, microphone, virtual distributions, analysis.

A scene is a single JSON file (``schema_version`` 1) holding everything an
experiment needs.  Units are meters, Hz, and radians throughout.  The full
schema is documented in the repository README.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ValidationError
from .sphmath import BUNDLED_GRID_SIZES, QuadratureGrid, fliege_grid

DEFAULT_SPEED_OF_SOUND = 343.0
DEFAULT_SAMPLE_RATE = 16000
DEFAULT_EAR_OFFSET = 0.09
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PointSourceSpec:
    """A point source; signal 'unit' means unit gain per frequency bin."""

    position: tuple[float, float, float]
    signal: str = "unit"  # "unit" or a path to a mono sample file

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.position))


@dataclass(frozen=True)
class MicrophoneSpec:
    order: int
    radius: float
    sensor_count: int

    def sensor_grid(self) -> QuadratureGrid:
        return fliege_grid(self.sensor_count)


@dataclass(frozen=True)
class DistributionSpec:
    model: str                      # "planewave" | "mixedwave"
    count: int                      # directions per shell
    near_radius: float | None = None
    far_radius: float | None = None

    def direction_grid(self) -> QuadratureGrid:
        return fliege_grid(self.count)


@dataclass(frozen=True)
class AnalysisSpec:
    frequencies: tuple[float, ...] = (1000.0, 2000.0, 4000.0, 8000.0)
    field_half_extent: float = 1.0
    field_resolution: float = 0.02
    sweep_radii: tuple[float, ...] = (0.01, 0.02, 0.05, 0.1, 0.15, 0.2,
                                      0.3, 0.4, 0.5)
    band_f_min: float = 100.0
    band_f_max: float = 8000.0
    band_bins: int = 50
    sphere_points: int = 100
    average_radius: float = 0.8
    translation: tuple[float, float, float] = (0.0, 0.5, 0.0)

    def band_frequencies(self) -> np.ndarray:
        return np.geomspace(self.band_f_min, self.band_f_max, self.band_bins)


@dataclass(frozen=True)
class Scene:
    sources: tuple[PointSourceSpec, ...]
    microphone: MicrophoneSpec
    planewave: DistributionSpec | None
    mixedwave: DistributionSpec | None
    analysis: AnalysisSpec
    speed_of_sound: float = DEFAULT_SPEED_OF_SOUND
    sample_rate: int = DEFAULT_SAMPLE_RATE
    ear_offset: float = DEFAULT_EAR_OFFSET
    schema_version: int = SCHEMA_VERSION
    simulation_order: int | None = None   # forward order, default N + 8

    @property
    def forward_order(self) -> int:
        if self.simulation_order is not None:
            return self.simulation_order
        return self.microphone.order + 8

    def wavenumber(self, f) -> np.ndarray:
        return 2.0 * np.pi * np.asarray(f, dtype=float) / self.speed_of_sound

    def to_dict(self) -> dict:
        d = {
            "schema_version": self.schema_version,
            "speed_of_sound": self.speed_of_sound,
            "sample_rate": self.sample_rate,
            "sources": [{"position": list(s.position), "signal": s.signal}
                        for s in self.sources],
            "microphone": {"order": self.microphone.order,
                           "radius": self.microphone.radius,
                           "sensor_count": self.microphone.sensor_count},
            "distributions": {},
            "listener": {"ear_offset": self.ear_offset,
                         "translation": list(self.analysis.translation)},
            "analysis": {
                "frequencies": list(self.analysis.frequencies),
                "field_plane": {"half_extent": self.analysis.field_half_extent,
                                "resolution": self.analysis.field_resolution},
                "sweep_radii": list(self.analysis.sweep_radii),
                "band": {"f_min": self.analysis.band_f_min,
                         "f_max": self.analysis.band_f_max,
                         "bins": self.analysis.band_bins},
                "sphere_points": self.analysis.sphere_points,
                "average_radius": self.analysis.average_radius,
            },
        }
        if self.simulation_order is not None:
            d["microphone"]["simulation_order"] = self.simulation_order
        if self.planewave is not None:
            d["distributions"]["planewave"] = {"count": self.planewave.count}
        if self.mixedwave is not None:
            d["distributions"]["mixedwave"] = {
                "count": self.mixedwave.count,
                "near_radius": self.mixedwave.near_radius,
                "far_radius": self.mixedwave.far_radius,
            }
        return d


def paper_scene() -> Scene:
    """The reference virtual environment: one source at (1, 0, 0) m, a 4th
    order 36-sensor rigid sphere of radius 0.042 m, 36-direction planewave
    and 2 m / 20 m mixedwave distributions."""
    return Scene(
        sources=(PointSourceSpec(position=(1.0, 0.0, 0.0)),),
        microphone=MicrophoneSpec(order=4, radius=0.042, sensor_count=36),
        planewave=DistributionSpec(model="planewave", count=36),
        mixedwave=DistributionSpec(model="mixedwave", count=36,
                                   near_radius=2.0, far_radius=20.0),
        analysis=AnalysisSpec(),
    )


def _require(cond: bool, message: str):
    if not cond:
        raise ValidationError(message)


def _get(d: dict, key: str, default=None, required=False, where=""):
    if key not in d:
        if required:
            raise ValidationError(f"missing required field '{where}{key}'")
        return default
    return d[key]


def scene_from_dict(raw: dict) -> Scene:
    version = _get(raw, "schema_version", required=True)
    _require(version == SCHEMA_VERSION,
             f"schema_version: unsupported value {version!r}")

    c = float(_get(raw, "speed_of_sound", DEFAULT_SPEED_OF_SOUND))
    _require(c > 0, "speed_of_sound: must be positive")
    fs = int(_get(raw, "sample_rate", DEFAULT_SAMPLE_RATE))
    _require(fs > 0, "sample_rate: must be positive")

    mic_raw = _get(raw, "microphone", required=True)
    order = int(_get(mic_raw, "order", required=True, where="microphone."))
    radius = float(_get(mic_raw, "radius", required=True, where="microphone."))
    q = int(_get(mic_raw, "sensor_count", required=True, where="microphone."))
    _require(order >= 0, "microphone.order: must be >= 0")
    _require(radius > 0, "microphone.radius: must be positive")
    _require(q >= (order + 1) ** 2,
             f"microphone.sensor_count: {q} sensors cannot support order "
             f"{order}; need at least {(order + 1) ** 2}")
    _require(q in BUNDLED_GRID_SIZES,
             f"microphone.sensor_count: no bundled {q}-node grid")
    sim_order = mic_raw.get("simulation_order")
    if sim_order is not None:
        sim_order = int(sim_order)
        _require(sim_order >= order,
                 "microphone.simulation_order: must be >= microphone.order")
    mic = MicrophoneSpec(order=order, radius=radius, sensor_count=q)

    dist_raw = _get(raw, "distributions", {})
    planewave = mixedwave = None
    if "planewave" in dist_raw:
        pw = dist_raw["planewave"]
        count = int(_get(pw, "count", required=True,
                         where="distributions.planewave."))
        _require(count in BUNDLED_GRID_SIZES,
                 f"distributions.planewave.count: no bundled {count}-node grid")
        planewave = DistributionSpec(model="planewave", count=count)
    if "mixedwave" in dist_raw:
        mw = dist_raw["mixedwave"]
        where = "distributions.mixedwave."
        count = int(_get(mw, "count", required=True, where=where))
        r_nf = float(_get(mw, "near_radius", required=True, where=where))
        r_ff = float(_get(mw, "far_radius", required=True, where=where))
        _require(count in BUNDLED_GRID_SIZES,
                 f"distributions.mixedwave.count: no bundled {count}-node grid")
        _require(0 < r_nf < r_ff,
                 "distributions.mixedwave: require 0 < near_radius < far_radius")
        mixedwave = DistributionSpec(model="mixedwave", count=count,
                                     near_radius=r_nf, far_radius=r_ff)

    sources = []
    for i, s in enumerate(_get(raw, "sources", required=True)):
        pos = _get(s, "position", required=True, where=f"sources[{i}].")
        _require(isinstance(pos, (list, tuple)) and len(pos) == 3,
                 f"sources[{i}].position: must be a 3-vector")
        pos = tuple(float(v) for v in pos)
        signal = _get(s, "signal", "unit")
        src = PointSourceSpec(position=pos, signal=signal)
        _require(src.radius > mic.radius,
                 f"sources[{i}].position: source inside microphone "
                 f"(|z| = {src.radius:.4g} m <= {mic.radius:.4g} m)")
        if mixedwave is not None:
            _require(src.radius < mixedwave.far_radius,
                     f"sources[{i}].position: source outside the far shell "
                     f"(|z| = {src.radius:.4g} m >= "
                     f"{mixedwave.far_radius:.4g} m)")
        sources.append(src)
    _require(len(sources) > 0, "sources: at least one source required")

    listener_raw = _get(raw, "listener", {})
    if "rotation" in listener_raw:
        raise ValidationError(
            "listener.rotation: reserved field, rotation is not supported")
    ear_offset = float(_get(listener_raw, "ear_offset", DEFAULT_EAR_OFFSET))
    _require(ear_offset > 0, "listener.ear_offset: must be positive")
    translation = tuple(float(v) for v in
                        _get(listener_raw, "translation", (0.0, 0.5, 0.0)))
    _require(len(translation) == 3, "listener.translation: must be a 3-vector")

    an_raw = _get(raw, "analysis", {})
    freqs = tuple(float(f) for f in
                  _get(an_raw, "frequencies", AnalysisSpec.frequencies))
    for f in freqs:
        _require(0 < f <= fs / 2,
                 f"analysis.frequencies: {f} Hz outside (0, fs/2] "
                 f"= (0, {fs / 2}]")
    plane_raw = _get(an_raw, "field_plane", {})
    half_extent = float(_get(plane_raw, "half_extent", 1.0))
    resolution = float(_get(plane_raw, "resolution", 0.02))
    _require(half_extent > 0, "analysis.field_plane.half_extent: must be > 0")
    _require(resolution > 0, "analysis.field_plane.resolution: must be > 0")
    radii = tuple(float(r) for r in
                  _get(an_raw, "sweep_radii", AnalysisSpec.sweep_radii))
    for r in radii:
        _require(r > 0, f"analysis.sweep_radii: radius {r} must be > 0")
    band_raw = _get(an_raw, "band", {})
    f_min = float(_get(band_raw, "f_min", 100.0))
    f_max = float(_get(band_raw, "f_max", 8000.0))
    bins = int(_get(band_raw, "bins", 50))
    _require(0 < f_min < f_max <= fs / 2,
             "analysis.band: require 0 < f_min < f_max <= fs/2")
    _require(bins > 1, "analysis.band.bins: must be > 1")
    sphere_points = int(_get(an_raw, "sphere_points", 100))
    _require(sphere_points in BUNDLED_GRID_SIZES,
             f"analysis.sphere_points: no bundled {sphere_points}-node grid")
    avg_radius = float(_get(an_raw, "average_radius", 0.8))
    _require(avg_radius > 0, "analysis.average_radius: must be > 0")

    analysis = AnalysisSpec(frequencies=freqs, field_half_extent=half_extent,
                            field_resolution=resolution, sweep_radii=radii,
                            band_f_min=f_min, band_f_max=f_max,
                            band_bins=bins, sphere_points=sphere_points,
                            average_radius=avg_radius,
                            translation=translation)

    if mixedwave is not None:
        _require(float(np.linalg.norm(translation)) < mixedwave.near_radius,
                 "listener.translation: exceeds the mixedwave near-shell "
                 f"radius {mixedwave.near_radius} m")

    return Scene(sources=tuple(sources), microphone=mic, planewave=planewave,
                 mixedwave=mixedwave, analysis=analysis, speed_of_sound=c,
                 sample_rate=fs, ear_offset=ear_offset,
                 schema_version=SCHEMA_VERSION, simulation_order=sim_order)


def load_scene(path) -> Scene:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scene file {path}: malformed JSON: {exc}")
    return scene_from_dict(raw)


def save_scene(scene: Scene, path):
    with open(path, "w") as fh:
        json.dump(scene.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
