import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sft import field, metrics
from sft.errors import ValidationError


def test_pressure_error_examples():
    assert metrics.pressure_error(1 + 2j, 1 + 2j) == 0.0
    assert metrics.pressure_error(1 + 2j, 0.0) == pytest.approx(100.0)
    assert metrics.pressure_error(1.0, 1.0 + 0.1j) == pytest.approx(1.0)


def test_pressure_error_masks_zero_reference():
    assert np.isnan(metrics.pressure_error(0.0, 1.0))


def test_pressure_error_scale_sensitivity():
    for c in (0.5, 1.0, 1.7, -2.0):
        got = metrics.pressure_error(1.3 + 0.4j, c * (1.3 + 0.4j))
        assert got == pytest.approx(abs(1 - c) ** 2 * 100.0)


def test_intensity_magnitude_error_examples():
    i = np.array([1.0, 2.0, -1.0])
    assert metrics.intensity_magnitude_error(i, i) == 0.0
    assert metrics.intensity_magnitude_error(i, 2 * i) == pytest.approx(100.0)
    assert metrics.intensity_magnitude_error(i, -i) == pytest.approx(400.0)
    assert np.isnan(metrics.intensity_magnitude_error(np.zeros(3), i))


def test_intensity_direction_error_examples():
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([0.0, 1.0, 0.0])
    assert metrics.intensity_direction_error(x, 2 * x) == pytest.approx(0.0)
    assert metrics.intensity_direction_error(x, y) == pytest.approx(50.0)
    assert metrics.intensity_direction_error(x, -x) == pytest.approx(100.0)
    assert np.isnan(metrics.intensity_direction_error(x, np.zeros(3)))


@settings(deadline=None, max_examples=50)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_ide_symmetry(vals):
    a = np.array(vals[:3])
    b = np.array(vals[3:])
    ia = metrics.intensity_direction_error(a, b)
    ib = metrics.intensity_direction_error(b, a)
    if np.isnan(ia):
        assert np.isnan(ib)
    else:
        assert ia == pytest.approx(ib, abs=1e-9)


def test_unit_vector_difference_examples():
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([0.0, 1.0, 0.0])
    np.testing.assert_allclose(metrics.unit_vector_difference(x, x),
                               np.zeros(3), atol=1e-15)
    np.testing.assert_allclose(metrics.unit_vector_difference(x, -x),
                               [2.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(metrics.unit_vector_difference(x, y),
                               [1.0, -1.0, 0.0], atol=1e-15)
    assert np.all(np.isnan(metrics.unit_vector_difference(x, np.zeros(3))))


def test_rotation_invariance(rng):
    # a common rotation of both intensity fields leaves every metric alone
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    a = rng.standard_normal((20, 3))
    b = rng.standard_normal((20, 3))
    for fn in (metrics.intensity_magnitude_error,
               metrics.intensity_direction_error):
        np.testing.assert_allclose(fn(a @ q.T, b @ q.T), fn(a, b), atol=1e-9)


def _constant_evaluator(p_val, v_val):
    def ev(pts):
        n = len(pts)
        return field.FieldValues(points=pts,
                                 pressure=np.full(n, p_val, complex),
                                 velocity=np.tile(v_val, (n, 1)).astype(complex),
                                 mask=np.zeros(n, bool))
    return ev


def test_sphere_average_identical_evaluators():
    ev = _constant_evaluator(1 + 1j, [1.0, 0.0, 0.0])
    for r in (0.05, 0.3, 0.8):
        avg = metrics.sphere_average("pe", r, ev, ev)
        assert avg.value == 0.0
        assert avg.masked_count == 0


def test_sphere_average_of_constant_metric():
    # PE between two constant fields is constant; the weighted mean must
    # return exactly that constant (weights are normalized)
    ev_a = _constant_evaluator(1.0, [1.0, 0.0, 0.0])
    ev_b = _constant_evaluator(1.0 + 0.1j, [1.0, 0.0, 0.0])
    avg = metrics.sphere_average("pe", 0.4, ev_a, ev_b)
    assert avg.value == pytest.approx(1.0, rel=1e-12)


def test_sphere_average_all_masked():
    ev_zero = _constant_evaluator(0.0, [0.0, 0.0, 0.0])
    ev = _constant_evaluator(1.0, [1.0, 0.0, 0.0])
    with pytest.raises(ValidationError, match="masked"):
        metrics.sphere_average("pe", 0.1, ev_zero, ev)


def test_sphere_average_rejects_bad_radius():
    ev = _constant_evaluator(1.0, [1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        metrics.sphere_average("pe", 0.0, ev, ev)


def test_unknown_metric():
    ev = _constant_evaluator(1.0, [1.0, 0.0, 0.0])
    with pytest.raises(ValueError, match="unknown metric"):
        metrics.sphere_average("nope", 0.1, ev, ev)
