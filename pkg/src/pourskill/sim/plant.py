"""Quasi-static pouring plant with first-order flow lag and a force sensor."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..core import CONSTANTS, ContainerSpec, PhysicalConstants, volume_to_weight
from ..errors import ValidationError
from .geometry import MAX_TILT_DEG, max_retained_volume


@dataclass(frozen=True)
class FlowModel:
    lag_tau_s: float = 0.15
    max_flow_ml_per_s: float = 400.0
    settle_tau_s: float = 0.10
    viscosity_factor: float = 1.0  # multiplies lag_tau_s

    def __post_init__(self):
        if self.lag_tau_s < 0 or self.settle_tau_s < 0 or self.max_flow_ml_per_s <= 0:
            raise ValidationError("flow parameters must be non-negative (cap positive)")

    @property
    def effective_lag_s(self) -> float:
        return self.lag_tau_s * self.viscosity_factor


def _decay_fraction(dt: float, tau: float) -> float:
    """Fraction of a first-order reservoir released over one step."""
    if tau <= 0.0:
        return 1.0
    return -math.expm1(-dt / tau)


@dataclass(frozen=True)
class SimState:
    container: ContainerSpec
    theta_deg: float
    v_source_ml: float
    v_transit_ml: float = 0.0
    v_recv_ml: float = 0.0
    t_s: float = 0.0
    spilled_ml: float = 0.0

    @property
    def total_ml(self) -> float:
        return self.v_source_ml + self.v_transit_ml + self.v_recv_ml + self.spilled_ml

    def excess_ml(self) -> float:
        return max(0.0, self.v_source_ml - max_retained_volume(self.container, self.theta_deg))


def initial_state(container: ContainerSpec, vol_total_ml: float, theta_deg: float = 0.0) -> SimState:
    if vol_total_ml < 0 or vol_total_ml > container.capacity_ml + 1e-9:
        raise ValidationError(f"initial volume {vol_total_ml} mL does not fit {container.name}")
    return SimState(container, float(theta_deg), float(vol_total_ml))


def step(state: SimState, omega_dps: float, flow: FlowModel = FlowModel(),
         consts: PhysicalConstants = CONSTANTS) -> SimState:
    """Advance the plant by one sample period under commanded velocity ``omega_dps``."""
    dt = consts.dt
    theta = min(max(state.theta_deg + omega_dps * dt, 0.0), MAX_TILT_DEG)
    v_source = state.v_source_ml
    excess = max(0.0, v_source - max_retained_volume(state.container, theta))
    outflow = min(excess * _decay_fraction(dt, flow.effective_lag_s), flow.max_flow_ml_per_s * dt)
    v_source -= outflow
    v_transit = state.v_transit_ml + outflow
    settled = v_transit * _decay_fraction(dt, flow.settle_tau_s)
    v_transit -= settled
    return replace(
        state,
        theta_deg=theta,
        v_source_ml=v_source,
        v_transit_ml=v_transit,
        v_recv_ml=state.v_recv_ml + settled,
        t_s=state.t_s + dt,
    )


def run_to_equilibrium(state: SimState, flow: FlowModel = FlowModel(), min_time_s: float = 1.0,
                       max_time_s: float = 30.0, tol_ml: float = 1e-9,
                       consts: PhysicalConstants = CONSTANTS) -> SimState:
    """Hold the current angle until in-flight liquid has landed."""
    t0 = state.t_s
    while True:
        elapsed = state.t_s - t0
        if elapsed >= max_time_s:
            return state
        if elapsed >= min_time_s and state.v_transit_ml < tol_ml and state.excess_ml() < tol_ml:
            return state
        state = step(state, 0.0, flow, consts)


@dataclass(frozen=True)
class SensorModel:
    white_noise_std: float = 0.002  # lbf
    drift_walk_std: float = 0.0002  # lbf per step
    drift_bound: float = 0.01  # lbf
    bias: float = 0.0  # lbf

    @classmethod
    def ideal(cls) -> "SensorModel":
        return cls(0.0, 0.0, 0.0, 0.0)


class ForceSensor:
    """Stateful sensor stream: clamped random-walk drift plus white noise."""

    def __init__(self, model: SensorModel, rng: np.random.Generator, consts: PhysicalConstants = CONSTANTS):
        self.model = model
        self.rng = rng
        self.consts = consts
        self.drift = 0.0

    def read(self, state: SimState) -> float:
        m = self.model
        if m.drift_walk_std > 0:
            self.drift += self.rng.normal(0.0, m.drift_walk_std)
            self.drift = min(max(self.drift, -m.drift_bound), m.drift_bound)
        noise = self.rng.normal(0.0, m.white_noise_std) if m.white_noise_std > 0 else 0.0
        return volume_to_weight(state.v_recv_ml, self.consts) + self.drift + noise + m.bias


def read_force(state: SimState, sensor: SensorModel, rng: np.random.Generator,
               consts: PhysicalConstants = CONSTANTS, drift: float = 0.0) -> tuple[float, float]:
    """Functional form of one sensor sample. Returns (reading, new_drift)."""
    stream = ForceSensor(sensor, rng, consts)
    stream.drift = drift
    return stream.read(state), stream.drift


def dump_trajectory(path, rows) -> None:
    """Write (t_s, theta_deg, omega_dps, v_source_ml, v_recv_ml, f_meas_lbf) rows as CSV."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "theta_deg", "omega_dps", "v_source_ml", "v_recv_ml", "f_meas_lbf"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
