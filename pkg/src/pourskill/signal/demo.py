"""Scripted human-like pourer used to synthesize demonstrations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import CONSTANTS, ContainerSpec, TrialRecord, volume_to_weight
from ..errors import DemoFailureError, ValidationError
from ..sim.plant import FlowModel, ForceSensor, SensorModel, initial_state, run_to_equilibrium, step
from .filters import StreamingForceFilter

MIN_DEMO_S = 2.5
MAX_DEMO_S = 10.0


@dataclass(frozen=True)
class DemonstratorProfile:
    forward_rate_range: tuple[float, float] = (15.0, 30.0)  # deg/s
    anticipation_mean: float = 0.92
    anticipation_std: float = 0.06
    backward_rate_range: tuple[float, float] = (40.0, 70.0)  # deg/s
    noise_std: float = 1.0  # deg/s, smoothed velocity jitter
    hold_range_s: tuple[float, float] = (0.6, 1.0)
    approach_gain: float = 4.0  # 1/s, proportional slow-down near the rest angle
    approach_min_rate: float = 1.5  # deg/s, floor so the return always finishes
    rest_angle_deg: float = 0.0  # the pourer sets the cup back upright, whatever angle it started at
    initial_angle_range: tuple[float, float] = (0.0, 5.0)

    def __post_init__(self):
        if not 0.0 < self.anticipation_mean <= 1.0:
            raise ValidationError("anticipation_mean must lie in (0, 1]")
        for lo, hi in (self.forward_rate_range, self.backward_rate_range):
            if not 0.0 < lo <= hi:
                raise ValidationError("rate ranges must be positive intervals")


@dataclass
class DemoOutcome:
    trial: TrialRecord
    requested_ml: float
    actual_ml: float
    anticipation: float
    attempts: int


def _pour_once(container, v_total, v_req, rate, back_rate, anticipation, hold_s, theta0,
               profile, flow, sensor_model, rng, max_s=20.0):
    dt = CONSTANTS.dt
    state = initial_state(container, v_total, theta0)
    sensor = ForceSensor(sensor_model, rng)
    flt = StreamingForceFilter()
    trigger = anticipation * volume_to_weight(v_req)
    rho = 0.9  # AR(1) coefficient of the velocity jitter
    jitter_scale = profile.noise_std * math.sqrt(1.0 - rho * rho)
    jitter = 0.0
    thetas, forces = [], []
    phase, hold_left = "forward", int(round(hold_s / dt))
    f0 = None
    rest = min(profile.rest_angle_deg, theta0)
    while True:
        f = flt.update(sensor.read(state))
        if f0 is None:
            f0 = f
        thetas.append(state.theta_deg)
        forces.append(f)
        if phase == "forward":
            if f - f0 >= trigger:
                phase = "backward"
            elif state.t_s > max_s:
                raise DemoFailureError(f"target {v_req:.1f} mL unreachable in {container.name}")
        if phase in ("forward", "backward"):
            jitter = rho * jitter + jitter_scale * rng.standard_normal()
        if phase == "forward":
            omega = rate + jitter
        elif phase == "backward":
            # ease into the rest angle instead of stopping dead from full speed
            speed = min(back_rate, max(profile.approach_gain * (state.theta_deg - rest), profile.approach_min_rate))
            omega = -speed + jitter * speed / back_rate
            if state.theta_deg + omega * dt <= rest:
                omega = (rest - state.theta_deg) / dt
                phase = "hold"
        else:
            if hold_left == 0:
                break
            hold_left -= 1
            omega = 0.0
        state = step(state, omega, flow)
    final = run_to_equilibrium(state, flow)
    return np.asarray(thetas), np.asarray(forces), final.v_recv_ml


def generate_demo(container: ContainerSpec, v_total_ml: float, v_2pour_ml: float, rng: np.random.Generator,
                  profile: DemonstratorProfile = DemonstratorProfile(), flow: FlowModel = FlowModel(),
                  sensor: SensorModel = SensorModel(), max_attempts: int = 50) -> DemoOutcome:
    """One synthetic demonstration, relabeled with the volume actually poured."""
    if not v_total_ml > v_2pour_ml > 0:
        raise ValidationError("need v_total > v_2pour > 0")
    anticipation = float(np.clip(rng.normal(profile.anticipation_mean, profile.anticipation_std), 0.5, 1.0))
    theta0 = float(rng.uniform(*profile.initial_angle_range))
    hold_s = float(rng.uniform(*profile.hold_range_s))
    for attempt in range(1, max_attempts + 1):
        rate = float(rng.uniform(*profile.forward_rate_range))
        back_rate = float(rng.uniform(*profile.backward_rate_range))
        thetas, forces, actual = _pour_once(container, v_total_ml, v_2pour_ml, rate, back_rate, anticipation,
                                            hold_s, theta0, profile, flow, sensor, rng)
        duration = (len(thetas) - 1) * CONSTANTS.dt
        if MIN_DEMO_S <= duration <= MAX_DEMO_S and 0 < actual < v_total_ml:
            trial = TrialRecord(
                container=container,
                f_total_lbf=volume_to_weight(v_total_ml),
                f_2pour_lbf=volume_to_weight(actual),
                theta_deg=thetas,
                f_lbf=forces,
                source_tag="synthetic-demo",
                meta={"requested_ml": v_2pour_ml, "actual_ml": actual},
            )
            return DemoOutcome(trial, v_2pour_ml, actual, anticipation, attempt)
    raise DemoFailureError(f"no demo within [{MIN_DEMO_S}, {MAX_DEMO_S}] s after {max_attempts} attempts")
