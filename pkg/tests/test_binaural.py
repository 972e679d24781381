import numpy as np
import pytest

from sft import binaural, capture, expansion, field
from sft import sphmath as sm
from sft.binaural import EarGeometry, HrtfGrid, MethodBank
from sft.errors import ModelError, ValidationError


@pytest.fixture(scope="module")
def setup(scene):
    k = float(scene.wavenumber(1000.0))
    rec = capture.record_scene(scene, [1000.0])
    return k, rec


@pytest.fixture(scope="module")
def ears(scene):
    return EarGeometry(scene.ear_offset)


# ---------------------------------------------------------------------------
# elementary transfers
# ---------------------------------------------------------------------------

def test_point_transfer_magnitude(setup):
    k, _ = setup
    h = binaural.ear_transfer_point([1.0, 0.0, 0.0], [0.0, 0.0, 0.0], k)
    assert abs(h) == pytest.approx(1 / (4 * np.pi), rel=1e-12)


def test_point_transfer_left_right_symmetry(setup, ears):
    k, _ = setup
    left, right = ears.positions([0.0, 0.0, 0.0])
    hl = binaural.ear_transfer_point([1.0, 0.0, 0.0], left, k)
    hr = binaural.ear_transfer_point([1.0, 0.0, 0.0], right, k)
    assert abs(hl) == pytest.approx(abs(hr), rel=1e-12)


def test_itd_within_geometric_bound(scene, ears):
    # delay difference between ears never exceeds the ear-span travel time
    c = scene.speed_of_sound
    src = np.array([1.0, 0.4, -0.2])
    left, right = ears.positions([0.0, 0.0, 0.0])
    delay = abs(np.linalg.norm(src - left) - np.linalg.norm(src - right)) / c
    assert delay < 2 * scene.ear_offset / c
    # the phase slope across frequency reproduces that delay
    f1, f2 = 400.0, 500.0
    k1, k2 = (float(scene.wavenumber(f)) for f in (f1, f2))
    phase = lambda k, ear: np.angle(binaural.ear_transfer_point(src, ear, k))
    dphi = (phase(k2, left) - phase(k1, left)) \
        - (phase(k2, right) - phase(k1, right))
    measured = dphi / (2 * np.pi * (f2 - f1))
    assert abs(abs(measured) - delay) < 1e-9


def test_planewave_transfer_unit_magnitude(setup, ears, rng):
    k, _ = setup
    left, _ = ears.positions([0.0, 0.0, 0.0])
    for _ in range(5):
        u = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        assert abs(binaural.ear_transfer_planewave(u, left, k)) == \
            pytest.approx(1.0, rel=1e-12)


def test_planewave_transfer_symmetry_perpendicular(setup, ears):
    k, _ = setup
    left, right = ears.positions([0.0, 0.0, 0.0])
    for u in ([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]):
        hl = binaural.ear_transfer_planewave(u, left, k)
        hr = binaural.ear_transfer_planewave(u, right, k)
        assert hl == pytest.approx(hr, rel=1e-12)


def test_planewave_limit_of_point_transfer(setup, ears):
    k, _ = setup
    left, _ = ears.positions([0.0, 0.0, 0.0])
    u = np.array([0.6, -0.64, 0.48])
    u /= np.linalg.norm(u)
    big_r = 1e6
    hp = binaural.ear_transfer_point(big_r * u, left, k)
    hpw = binaural.ear_transfer_planewave(u, left, k)
    scale = np.exp(1j * k * big_r) / (4 * np.pi * big_r)
    rel = abs(hp / scale - hpw) / abs(hpw)
    assert rel < 1e-3


# ---------------------------------------------------------------------------
# auralization methods
# ---------------------------------------------------------------------------

def test_reference_symmetric_at_origin(scene, setup, ears):
    k, _ = setup
    pair = binaural.auralize_reference(scene, [0.0, 0.0, 0.0], k, ears)
    assert abs(pair[0]) == pytest.approx(abs(pair[1]), rel=1e-12)


def test_reference_monotonic_approach(scene, setup, ears):
    k, _ = setup
    mags = []
    for t in np.linspace(0.0, 0.6, 7):
        pair = binaural.auralize_reference(scene, [t, 0.0, 0.0], k, ears)
        mags.append(np.abs(pair))
    mags = np.array(mags)
    assert np.all(np.diff(mags[:, 0]) > 0)
    assert np.all(np.diff(mags[:, 1]) > 0)


def test_anchor_matches_truncated_planewave(scene, ears):
    # plane-wave coefficients: the anchor must equal the order-limited
    # planewave ear transfer in the band where k * ear_offset <= N
    f = 1000.0
    k = float(scene.wavenumber(f))
    assert np.ceil(k * scene.ear_offset) <= scene.microphone.order
    u = np.array([1.0, 0.0, 0.0])
    n, _ = sm.index_orders(4)
    _, th, ph = sm.cart_to_sph(u[None, :])
    alpha = 4 * np.pi * (-1j) ** n * np.conj(sm.sh_matrix(4, th, ph))[0]
    got = binaural.auralize_anchor(alpha, k, ears)
    left, right = ears.positions([0.0, 0.0, 0.0])
    for ear_pos, val in zip((left, right), got):
        want = binaural.ear_transfer_planewave(u, ear_pos, k)
        assert abs(val - want) / abs(want) < 1e-3


def test_anchor_zero_recording_is_silent(ears):
    got = binaural.auralize_anchor(np.zeros(25), 10.0, ears)
    assert np.all(got == 0)


def test_anchor_translation_invariant(scene):
    bank = MethodBank(scene, [500.0, 1500.0])
    a1 = bank.transfer("anchor", [0.0, 0.0, 0.0])
    a2 = bank.transfer("anchor", [0.0, 0.4, 0.1])
    np.testing.assert_array_equal(a1, a2)


def test_pw_auralization_at_origin_equals_field_at_ears(scene, setup, ears):
    k, rec = setup
    df = expansion.expand(rec, scene, "pw-cf")
    got = binaural.auralize_pw(df, np.zeros(3), k, scene.speed_of_sound, ears)
    want = field.eval_distribution_field(df, ears.positions(np.zeros(3)),
                                         k).pressure
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_pw_single_source_magnitude_invariant_to_translation(scene, setup,
                                                             ears):
    k, _ = setup
    dist = expansion.distribution_from_scene(scene, "planewave")
    psi = np.zeros((1, 36), complex)
    psi[0, 9] = 1.0
    df = expansion.DrivingFunction(method="pw-cf", distribution=dist,
                                   frequencies=[1000.0], psi=psi)
    p0 = binaural.auralize_pw(df, np.zeros(3), k, scene.speed_of_sound, ears)
    p1 = binaural.auralize_pw(df, [0.3, -0.2, 0.1], k, scene.speed_of_sound,
                              ears)
    np.testing.assert_allclose(np.abs(p1), np.abs(p0), rtol=1e-12)


def test_pw_rejects_mixedwave(scene, setup, ears):
    k, rec = setup
    df = expansion.expand(rec, scene, "mw-cf")
    with pytest.raises(ModelError):
        binaural.auralize_pw(df, np.zeros(3), k, scene.speed_of_sound, ears)


def test_mw_zero_ear_offset_equals_field_pressure(scene, setup):
    k, rec = setup
    df = expansion.expand(rec, scene, "mw-irls")
    d = np.array([0.0, 0.5, 0.0])
    got = binaural.auralize_mw(df, d, k, EarGeometry(offset=0.0))
    want = field.eval_distribution_field(df, d[None, :], k).pressure[0]
    assert abs(got[0] - want) <= 1e-12 * abs(want)
    assert abs(got[1] - want) <= 1e-12 * abs(want)


def test_mw_out_of_shell_rejected(scene, setup, ears):
    k, rec = setup
    df = expansion.expand(rec, scene, "mw-cf")
    with pytest.raises(ValidationError, match="near shell"):
        binaural.auralize_mw(df, [0.0, 2.5, 0.0], k, ears)


def test_mw_rejects_planewave(scene, setup, ears):
    k, rec = setup
    df = expansion.expand(rec, scene, "pw-cf")
    with pytest.raises(ModelError):
        binaural.auralize_mw(df, np.zeros(3), k, ears)


# ---------------------------------------------------------------------------
# MethodBank and BRIR
# ---------------------------------------------------------------------------

def test_bank_matches_single_bin_auralizations(scene, ears):
    freqs = np.array([400.0, 1000.0, 3000.0])
    bank = MethodBank(scene, freqs)
    d = np.array([0.1, 0.2, -0.05])
    rec = bank.recording
    for i, f in enumerate(freqs):
        k = float(scene.wavenumber(f))
        ref = binaural.auralize_reference(scene, d, k, ears)
        np.testing.assert_allclose(bank.transfer("reference", d)[i], ref,
                                   rtol=1e-10)
        anc = binaural.auralize_anchor(rec.data[i], k, ears)
        np.testing.assert_allclose(bank.transfer("anchor", d)[i], anc,
                                   rtol=1e-10)
    for method in ("pw-cf", "mw-cf"):
        df = bank.driving(method)
        tr = bank.transfer(method, d)
        for i, f in enumerate(freqs):
            k = float(scene.wavenumber(f))
            if method.startswith("pw"):
                single = binaural.auralize_pw(df, d, k, scene.speed_of_sound,
                                              ears)
            else:
                single = binaural.auralize_mw(df, d, k, ears,
                                              speed_of_sound=scene.speed_of_sound)
            np.testing.assert_allclose(tr[i], single, rtol=1e-10)


def test_reference_brir_is_flat(scene):
    freqs = binaural.stft_bin_frequencies(scene.sample_rate)[:64]
    bank = MethodBank(scene, freqs)
    spec = bank.brir("reference", np.zeros(3))
    left, _ = EarGeometry(scene.ear_offset).positions(np.zeros(3))
    r = np.linalg.norm(np.array([1.0, 0.0, 0.0]) - left)
    np.testing.assert_allclose(np.abs(spec.left), 1 / (4 * np.pi * r),
                               rtol=1e-12)


def test_brir_self_difference_zero(scene):
    freqs = binaural.stft_bin_frequencies(scene.sample_rate)[:32]
    bank = MethodBank(scene, freqs)
    a = bank.brir("reference", [0.0, 0.5, 0.0])
    b = bank.brir("reference", [0.0, 0.5, 0.0])
    db = 20 * np.log10(np.abs(a.left)) - 20 * np.log10(np.abs(b.left))
    assert np.max(np.abs(db)) == 0.0


def test_brir_method_ordering_below_1khz(scene):
    # the proposed sparse mixed-field method deviates less from the
    # reference than the planewave benchmark below 1 kHz
    freqs = np.linspace(62.5, 996.0, 40)
    bank = MethodBank(scene, freqs)
    d = np.array([0.0, 0.5, 0.0])
    ref = bank.transfer("reference", d)
    means = {}
    for m in ("pw-cf", "mw-irls"):
        tr = bank.transfer(m, d)
        db = 20 * np.log10(np.abs(tr)) - 20 * np.log10(np.abs(ref))
        means[m] = float(np.mean(np.abs(db)))
    assert means["mw-irls"] < means["pw-cf"]


def test_mw_transfer_out_of_shell_in_bank(scene):
    bank = MethodBank(scene, [1000.0])
    with pytest.raises(ValidationError):
        bank.transfer("mw-cf", [2.5, 0.0, 0.0])


def test_unknown_method_rejected(scene):
    bank = MethodBank(scene, [1000.0])
    with pytest.raises(ModelError):
        bank.transfer("fancy", np.zeros(3))


def test_dc_rejected(scene):
    with pytest.raises(ValueError):
        MethodBank(scene, [0.0, 1000.0])


# ---------------------------------------------------------------------------
# measured-HRTF grid
# ---------------------------------------------------------------------------

def _free_field_hrtf_grid(scene, dirs_theta, dirs_phi, freqs):
    ears = EarGeometry(scene.ear_offset)
    left, right = ears.positions(np.zeros(3))
    u = np.stack([np.sin(dirs_theta) * np.cos(dirs_phi),
                  np.sin(dirs_theta) * np.sin(dirs_phi),
                  np.cos(dirs_theta)], axis=-1)
    k = scene.wavenumber(np.asarray(freqs))
    hl = np.exp(-1j * np.outer(u @ left, k)).reshape(len(u), len(freqs))
    hr = np.exp(-1j * np.outer(u @ right, k)).reshape(len(u), len(freqs))
    return HrtfGrid(theta=dirs_theta, phi=dirs_phi,
                    frequencies=np.asarray(freqs), left=hl, right=hr)


def test_hrtf_grid_reproduces_free_field_pw(scene, setup, ears):
    # sampling the free-field transfer on the distribution directions makes
    # the lookup path agree with the analytic path exactly
    k, rec = setup
    df = expansion.expand(rec, scene, "pw-cf")
    dist = df.distribution
    hrtf = _free_field_hrtf_grid(scene, dist.theta, dist.phi,
                                 [500.0, 1000.0, 2000.0])
    d = np.array([0.1, -0.3, 0.0])
    got = binaural.auralize_pw(df, d, k, scene.speed_of_sound, ears,
                               hrtf=hrtf)
    want = binaural.auralize_pw(df, d, k, scene.speed_of_sound, ears)
    np.testing.assert_allclose(got, want, rtol=1e-9)


def test_hrtf_grid_max_gap(scene):
    g = sm.fliege_grid(36)
    hrtf = _free_field_hrtf_grid(scene, g.theta, g.phi, [1000.0])
    gap = hrtf.max_gap
    assert 0.0 < gap < 1.0  # radians; 36 near-uniform directions
