import json

import numpy as np
import pytest

from sft import capture, expansion, field, fileio
from sft.binaural import BinauralSpectrum
from sft.errors import ValidationError
from sft.render import AudioBuffer, Trajectory


@pytest.fixture(scope="module")
def recording(scene):
    return capture.record_scene(scene, [500.0, 1000.0, 2000.0])


def test_coefficient_round_trip(tmp_path, recording):
    path = tmp_path / "c.sfc"
    fileio.write_coefficients(path, recording, 16000)
    back, frames, header = fileio.read_coefficients(path)
    assert header["sample_rate"] == 16000
    assert header["n_max"] == 4
    np.testing.assert_array_equal(back.frequencies, recording.frequencies)
    np.testing.assert_allclose(back.data, recording.data.astype(np.complex64),
                               rtol=0, atol=0)


def test_coefficient_bad_magic(tmp_path):
    path = tmp_path / "bad.sfc"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValidationError, match="magic"):
        fileio.read_coefficients(path)


def test_coefficient_csv_export(tmp_path, recording):
    path = tmp_path / "c.csv"
    fileio.export_coefficients_csv(path, recording)
    rows = np.genfromtxt(path, delimiter=",", names=True)
    assert set(rows.dtype.names) == {"freq_hz", "n", "m", "re", "im"}
    assert len(rows) == 3 * 25


def test_driving_round_trip(tmp_path, scene, recording):
    for method in ("pw-cf", "mw-irls"):
        df = expansion.expand(recording, scene, method)
        path = tmp_path / f"{method}.sfd"
        fileio.write_driving(path, df, 16000)
        back, fs = fileio.read_driving(path)
        assert fs == 16000
        assert back.method == method
        assert back.distribution.model == df.distribution.model
        np.testing.assert_array_equal(back.distribution.radii,
                                      df.distribution.radii)
        np.testing.assert_allclose(back.psi, df.psi.astype(np.complex64),
                                   rtol=0, atol=0)
        np.testing.assert_array_equal(back.synthesis_weights,
                                      df.synthesis_weights)


def test_driving_csv_export(tmp_path, scene, recording):
    df = expansion.expand(recording, scene, "pw-cf")
    path = tmp_path / "d.csv"
    fileio.export_driving_csv(path, df)
    first = open(path).readline().strip()
    assert first == "freq_hz,source,theta,phi,radius,weight,re,im"


def test_field_grid_csv(tmp_path, scene):
    k = float(scene.wavenumber(1000.0))
    spec = field.PlaneGridSpec(half_extent=0.2, resolution=0.1)
    grid = field.compute_field_grid(field.true_evaluator(scene, k), spec)
    path = tmp_path / "f.csv"
    fileio.export_field_grid_csv(path, grid)
    rows = np.genfromtxt(path, delimiter=",", names=True)
    assert set(rows.dtype.names) == {"x", "y", "z", "ReP", "ImP",
                                     "Ix", "Iy", "Iz", "mask"}
    assert len(rows) == 25


def test_error_map_csv(tmp_path, scene):
    k = float(scene.wavenumber(1000.0))
    spec = field.PlaneGridSpec(half_extent=0.2, resolution=0.1)
    truth = field.compute_field_grid(field.true_evaluator(scene, k), spec)
    path = tmp_path / "e.csv"
    fileio.export_error_map_csv(path, truth.values, truth.values)
    rows = np.genfromtxt(path, delimiter=",", names=True)
    assert set(rows.dtype.names) == {"x", "y", "z", "pe", "ime", "ide",
                                     "udx", "udy", "udz", "mask"}
    ok = rows["mask"] == 0
    assert np.all(rows["pe"][ok] == 0.0)


def test_sweep_csv(tmp_path):
    path = tmp_path / "s.csv"
    fileio.export_sweep_csv(path, [(1000.0, 0.1, "pw-cf", "pe", 12.5, 0)])
    text = open(path).read().splitlines()
    assert text[0] == "freq_hz,radius_m,method,metric,value,masked_count"
    assert text[1] == "1000.0,0.1,pw-cf,pe,12.5,0"


def test_brir_csv_round_trip(tmp_path):
    spec = BinauralSpectrum(method="reference", position=(0, 0.5, 0),
                            frequencies=[500.0, 1000.0],
                            left=[0.1 + 0.1j, 0.2], right=[0.05, 0.1j])
    path = tmp_path / "b.csv"
    fileio.export_brir_csv(path, spec)
    rows = fileio.read_brir_csv(path)
    assert set(rows.dtype.names) == {"freq_hz", "left_db", "right_db",
                                     "left_phase", "right_phase"}
    assert rows["left_db"][0] == pytest.approx(20 * np.log10(abs(0.1 + 0.1j)))


def test_wav_round_trip(tmp_path, rng):
    x = (rng.standard_normal((3000, 2)) * 0.1).astype(np.float32)
    buf = AudioBuffer(16000, x)
    path = tmp_path / "a.wav"
    fileio.write_wav(path, buf)
    back = fileio.read_wav(path)
    assert back.sample_rate == 16000
    np.testing.assert_allclose(back.samples, x, atol=1e-7)


def test_wav_int16_scaling(tmp_path):
    from scipy.io import wavfile
    path = tmp_path / "i.wav"
    wavfile.write(path, 16000, (np.ones(100) * 16384).astype(np.int16))
    back = fileio.read_wav(path)
    assert back.samples[0] == pytest.approx(0.5)


def test_trajectory_round_trip(tmp_path):
    traj = Trajectory(times=[0.0, 1.0, 2.0],
                      positions=[[0, 0, 0], [0, 0.5, 0], [0.1, 0.5, 0]])
    path = tmp_path / "t.csv"
    fileio.write_trajectory(path, traj)
    back = fileio.read_trajectory(path)
    np.testing.assert_allclose(back.times, traj.times)
    np.testing.assert_allclose(back.positions, traj.positions)


def test_trajectory_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t_sec,x,y\n0,0,0\n")
    with pytest.raises(ValidationError, match="'z'"):
        fileio.read_trajectory(path)


def test_manifest(tmp_path, scene_file):
    out = tmp_path / "m.json"
    fileio.write_manifest(out, "capture", scene_file, {"freqs": [1000.0]},
                          ["a.sfc"], {"started": "2026-01-01T00:00:00Z"})
    m = json.load(open(out))
    assert m["command"] == "capture"
    assert m["scene_hash"] == fileio.scene_hash(scene_file)
    assert m["outputs"] == ["a.sfc"]
    assert "tool_version" in m and "timestamps" in m
