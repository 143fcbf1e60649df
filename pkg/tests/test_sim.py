import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pourskill.core import ContainerSpec, volume_to_weight, weight_to_volume
from pourskill.errors import ValidationError
from pourskill.sim import (FlowModel, ForceSensor, SensorModel, critical_angle, initial_state,
                           max_retained_volume, oracle_max_retained_volume, read_force, run_to_equilibrium, step)
from pourskill.sim.audit import conservation_audit, geometry_audit

C30 = ContainerSpec("r30", 100.0, 60.0)


def regime1(R, H, theta_deg):
    """Hand formula for a tilted cylinder whose liquid still covers the whole base."""
    return math.pi * R * R * (H - R * math.tan(math.radians(theta_deg))) / 1000.0


def test_full_at_zero_tilt():
    assert max_retained_volume(C30, 0.0) == pytest.approx(282.74, abs=0.01)
    assert max_retained_volume(C30, 0.0) == pytest.approx(math.pi * 900 * 100 / 1000, rel=1e-3)


def test_thirty_degrees_matches_hand_formula():
    # pi * 900 * (100 - 30 tan 30) mm^3 = 233.77 mL
    expected = regime1(30.0, 100.0, 30.0)
    assert expected == pytest.approx(233.77, abs=0.01)
    assert max_retained_volume(C30, 30.0) == pytest.approx(expected, rel=1e-12)
    assert oracle_max_retained_volume(C30, 30.0) == pytest.approx(expected, rel=5e-3)


def test_near_vertical_is_nearly_empty():
    assert max_retained_volume(C30, 89.9) < 1.0


def test_angle_outside_range_rejected():
    with pytest.raises(ValidationError):
        max_retained_volume(C30, -1.0)
    with pytest.raises(ValidationError):
        max_retained_volume(C30, 90.0)


def test_closed_form_against_slicing_grid():
    rng = np.random.default_rng(1)
    containers = [ContainerSpec(f"c{k}", rng.uniform(50, 300), rng.uniform(30, 130)) for k in range(20)]
    assert geometry_audit(containers, angles=tuple(range(0, 90, 5))) < 5e-3


@given(st.floats(40, 300), st.floats(30, 130))
@settings(max_examples=40, deadline=None)
def test_monotone_in_angle(h, d):
    c = ContainerSpec("c", h, d)
    vols = [max_retained_volume(c, a) for a in np.arange(0, 90, 5)]
    assert all(b <= a + 1e-9 for a, b in zip(vols, vols[1:]))


def test_critical_angle_example():
    expected = math.degrees(math.atan((282.743 - 200.0) * 1000 / (math.pi * 27000)))
    assert expected == pytest.approx(44.3, abs=0.05)
    assert critical_angle(C30, 200.0) == pytest.approx(expected, abs=0.01)
    assert max_retained_volume(C30, critical_angle(C30, 200.0)) == pytest.approx(200.0, abs=1e-6)


def test_no_flow_fixed_point():
    s0 = initial_state(C30, 150.0, 10.0)
    s1 = step(s0, 0.0)
    assert (s1.theta_deg, s1.v_source_ml, s1.v_transit_ml, s1.v_recv_ml) == (10.0, 150.0, 0.0, 0.0)
    assert s1.t_s == pytest.approx(1 / 60)


def test_angle_clamped():
    s = initial_state(C30, 10.0, 88.5)
    assert step(s, 90.0).theta_deg == 89.0
    assert step(initial_state(C30, 10.0, 0.5), -90.0).theta_deg == 0.0


def test_excess_decays_exponentially_after_stop():
    flow = FlowModel(lag_tau_s=0.15, max_flow_ml_per_s=1e9)
    state = initial_state(C30, 250.0, 0.0)
    # jump past the critical angle in one step, then hold still
    state = step(state, 60 * 60.0, flow)
    e0 = state.excess_ml()
    times, excess = [], []
    while state.excess_ml() > 1e-6 * e0:
        state = step(state, 0.0, flow)
        times.append(state.t_s - 1 / 60)
        excess.append(state.excess_ml())
    times, excess = np.array(times), np.array(excess)
    np.testing.assert_allclose(excess, e0 * np.exp(-times / flow.lag_tau_s), rtol=1e-9)
    t1 = times[np.argmax(excess < 0.01 * e0)]
    # e falls under 1% at tau * ln(100) = 4.6 tau, give or take one sample
    assert t1 == pytest.approx(flow.lag_tau_s * math.log(100), abs=1 / 60)


def test_hold_past_critical_reaches_retained_volume():
    state = initial_state(C30, 200.0, 0.0)
    for _ in range(60):
        state = step(state, 60.0)
    final = run_to_equilibrium(state)
    assert final.v_source_ml == pytest.approx(max_retained_volume(C30, 60.0), abs=0.1)
    assert final.v_recv_ml == pytest.approx(200.0 - final.v_source_ml, abs=1e-6)


def test_zero_lag_limit():
    flow = FlowModel(lag_tau_s=0.0, settle_tau_s=0.0, max_flow_ml_per_s=1e9)
    state = initial_state(C30, 220.0, 0.0)
    thetas = list(np.linspace(0, 70, 90)) + list(np.linspace(70, 0, 60))
    for a, b in zip(thetas, thetas[1:]):
        state = step(state, (b - a) * 60, flow)
    final = run_to_equilibrium(state, flow)
    assert final.v_recv_ml == pytest.approx(220.0 - max_retained_volume(C30, 70.0), abs=0.5)


def test_conservation_and_monotone_receiver():
    worst, monotone = conservation_audit(30, 600, seed=3)
    assert worst < 1e-9
    assert monotone


@given(st.lists(st.floats(-90, 90), min_size=1, max_size=200), st.floats(0.05, 1.0))
@settings(max_examples=50, deadline=None)
def test_conservation_property(omegas, fill):
    state = initial_state(C30, fill * C30.capacity_ml, 0.0)
    total = state.total_ml
    for w in omegas:
        state = step(state, w)
        assert abs(state.total_ml - total) < 1e-9
        assert state.spilled_ml == 0.0


def test_overfull_start_rejected():
    with pytest.raises(ValidationError):
        initial_state(C30, 300.0)


def test_ideal_sensor_reads_weight():
    state = initial_state(C30, 0.0)
    state = type(state)(C30, 0.0, 0.0, 0.0, 454.96)
    reading, _ = read_force(state, SensorModel.ideal(), np.random.default_rng(0))
    assert reading == pytest.approx(1.0, abs=1e-4)
    assert reading == pytest.approx(volume_to_weight(454.96), rel=1e-12)


def test_bias_only_on_empty_receiver():
    model = SensorModel(0.0, 0.0, 0.0, bias=0.003)
    reading, _ = read_force(initial_state(C30, 100.0), model, np.random.default_rng(0))
    assert reading == 0.003


def test_drift_stays_bounded_for_300_seconds():
    sensor = ForceSensor(SensorModel(white_noise_std=0.0), np.random.default_rng(5))
    state = initial_state(C30, 0.0)
    drift = [sensor.read(state) for _ in range(18_000)]
    assert max(abs(d) for d in drift) <= 0.01
    # the walk actually explores the band instead of sitting at zero
    assert max(abs(d) for d in drift) > 0.005
    assert weight_to_volume(0.01) == pytest.approx(4.55, abs=0.01)
