import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pourskill.core import (CONSTANTS, ContainerSpec, ErrorStats, TrialRecord, angular_velocity_series, curvature,
                            volume_to_weight, weight_to_volume)
from pourskill.errors import InvalidGeometryError, InvalidMeasurementError, ValidationError

from conftest import make_trial


def _lbf_to_ml(f):
    # independent hand conversion: lbf -> N -> kg -> g -> mL
    return f * 4.4482216152605 / 9.80665 * 1000.0 / 0.997


@pytest.mark.parametrize("d, k", [(60.0, 1 / 30), (2.0, 1.0), (82.0, 0.024390243902439)])
def test_curvature(d, k):
    assert curvature(ContainerSpec("c", 50.0, d)) == pytest.approx(k, rel=1e-12)


@pytest.mark.parametrize("h, d", [(0, 50), (50, 0), (-1, 50), (float("nan"), 50), (50, float("inf"))])
def test_container_rejects_bad_dimensions(h, d):
    with pytest.raises(InvalidGeometryError):
        ContainerSpec("bad", h, d)


def test_weight_to_volume_examples():
    assert weight_to_volume(1.0) == pytest.approx(454.96, abs=0.01)
    assert weight_to_volume(1.0) == pytest.approx(_lbf_to_ml(1.0), rel=1e-12)
    assert weight_to_volume(0.01) == pytest.approx(4.55, abs=0.01)
    assert weight_to_volume(0.0) == 0.0


def test_negative_weight_rejected():
    with pytest.raises(InvalidMeasurementError):
        weight_to_volume(-0.1)
    with pytest.raises(InvalidMeasurementError):
        volume_to_weight(np.array([1.0, -2.0]))


@given(st.floats(0, 1e4, allow_nan=False))
def test_weight_volume_roundtrip(v):
    assert weight_to_volume(volume_to_weight(v)) == pytest.approx(v, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("theta, omega", [([0, 0.5, 1.0], [30, 30]), ([10, 10], [0]), ([0, 1, 0.5], [60, -30])])
def test_angular_velocity(theta, omega):
    np.testing.assert_allclose(angular_velocity_series(theta), omega, atol=1e-12)


def test_sample_rate():
    assert CONSTANTS.sample_rate == 60
    assert CONSTANTS.dt == pytest.approx(1 / 60)


def test_trial_derives_omega(trial):
    assert trial.omega_dps.shape == (trial.length - 1,)
    np.testing.assert_allclose(trial.omega_dps, np.diff(trial.theta_deg) * 60)
    assert trial.duration_s == pytest.approx((trial.length - 1) / 60)


@pytest.mark.parametrize("kw", [dict(f_total=0.2, f_2pour=0.25), dict(f_total=0.5, f_2pour=0.0)])
def test_trial_weight_order(kw):
    with pytest.raises(ValidationError):
        make_trial(**kw)


def test_trial_rejects_decreasing_force(cup):
    theta = np.linspace(0, 40, 50)
    f = np.linspace(0, 0.3, 50)
    f[30:] -= 0.1
    with pytest.raises(ValidationError):
        TrialRecord(cup, 0.6, 0.3, theta, f)


def test_trial_tolerates_sensor_noise(cup):
    rng = np.random.default_rng(0)
    f = np.linspace(0, 0.3, 50) + rng.normal(0, 0.003, 50)
    TrialRecord(cup, 0.6, 0.3, np.linspace(0, 40, 50), f)


def test_trial_length_mismatch(cup):
    with pytest.raises(ValidationError):
        TrialRecord(cup, 0.6, 0.3, np.zeros(10), np.zeros(9))


def test_trial_unknown_tag(cup):
    with pytest.raises(ValidationError):
        make_trial(cup, tag="bogus")


def test_static_features(trial, cup):
    ft, f2, h, k = trial.static_features()
    assert (ft, f2, h) == (0.6, 0.25, 100.0)
    assert k == pytest.approx(2 / 60)


def test_error_stats_absolute_and_population():
    stats = ErrorStats.from_pairs([(100, 110), (100, 90), (50, 56)])
    assert stats.mu_e_ml == pytest.approx((10 + 10 + 6) / 3)
    assert stats.sigma_e_ml == pytest.approx(np.std([10, 10, 6]))
    assert [r[2] for r in stats.per_trial] == [10.0, -10.0, 6.0]
    assert stats.n == 3


def test_error_stats_perfect():
    stats = ErrorStats.from_pairs([(80.0, 80.0)] * 4)
    assert stats.mu_e_ml == 0.0 and stats.sigma_e_ml == 0.0
    assert math.isfinite(stats.mu_e_ml)
