"""Closed-loop pouring: executor, policies, termination rule, replay."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CONSTANTS, ContainerSpec, TrialRecord, volume_to_weight, weight_to_volume
from .errors import ConfigurationError, ValidationError
from .net.checkpoint import ModelCheckpoint
from .net.lstm import sigm
from .signal.filters import StreamingForceFilter
from .sim.geometry import MAX_TILT_DEG
from .sim.plant import FlowModel, ForceSensor, SensorModel, SimState, initial_state, run_to_equilibrium, step

CONTINUE, SETTLED, TIMEOUT = "continue", "settled", "timeout"


@dataclass(frozen=True)
class PourTask:
    container: ContainerSpec
    vol_total_ml: float
    vol_2pour_ml: float
    seed: int = 0

    def __post_init__(self):
        if not self.vol_total_ml > self.vol_2pour_ml > 0:
            raise ValidationError(f"need vol_total > vol_2pour > 0 ({self.vol_total_ml}, {self.vol_2pour_ml})")
        if self.vol_total_ml > self.container.capacity_ml + 1e-9:
            raise ValidationError(f"{self.vol_total_ml:.1f} mL exceeds capacity of {self.container.name}")


@dataclass(frozen=True)
class Limits:
    max_omega_dps: float = 90.0
    timeout_s: float = 15.0
    min_peak_deg: float = 15.0
    return_tol_deg: float = 2.0
    still_omega_dps: float = 0.5
    still_s: float = 0.5
    initial_angle_range: tuple[float, float] = (0.0, 5.0)


@dataclass(frozen=True)
class PlantConfig:
    """Everything about the simulated world a pour runs in."""
    flow: FlowModel = FlowModel()
    sensor: SensorModel = SensorModel()
    limits: Limits = Limits()


def termination_policy(thetas, omegas, limits: Limits = Limits(), dt: float = CONSTANTS.dt) -> str:
    """Decide whether a pour is finished.

    ``thetas`` are the angles observed so far (the first is the start angle)
    and ``omegas`` the velocities commanded so far.
    """
    if len(thetas) == 0:
        return CONTINUE
    if (len(thetas) - 1) * dt >= limits.timeout_s - 1e-9:
        return TIMEOUT
    n_still = int(round(limits.still_s / dt))
    if (
        max(thetas) >= limits.min_peak_deg
        and thetas[-1] <= thetas[0] + limits.return_tol_deg
        and len(omegas) >= n_still
        and all(abs(w) < limits.still_omega_dps for w in omegas[-n_still:])
    ):
        return SETTLED
    return CONTINUE


class Policy:
    """Maps observations to a commanded angular velocity (deg/s)."""

    def reset(self, task: PourTask, theta0: float) -> None:
        pass

    def act(self, theta: float, f_lbf: float, state: SimState) -> float:
        raise NotImplementedError


class LearnedPolicy(Policy):
    """Streams features through the LSTM one step at a time, dropout off."""

    def __init__(self, ckpt: ModelCheckpoint):
        stats = ckpt.normalizer
        if stats is None or np.shape(stats.input_mean) != (6,) or ckpt.net.d != 6:
            raise ConfigurationError("checkpoint and normalizer disagree on the input layout")
        self.ckpt = ckpt
        self.stats = stats
        self._stacked = [p.stacked() for p in ckpt.net.layers]
        self._peep = [(p.p_i, p.p_f, p.p_o) for p in ckpt.net.layers]
        self.w_y = ckpt.net.head.W_y[0]
        self.b_y = float(ckpt.net.head.b_y[0])

    def reset(self, task: PourTask, theta0: float) -> None:
        c = task.container
        self.static = np.array([volume_to_weight(task.vol_total_ml), volume_to_weight(task.vol_2pour_ml),
                                c.height_mm, c.curvature])
        self.h = [np.zeros(p.n) for p in self.ckpt.net.layers]
        self.c = [np.zeros(p.n) for p in self.ckpt.net.layers]

    def act(self, theta, f_lbf, state=None):
        x = (np.concatenate([[theta, f_lbf], self.static]) - self.stats.input_mean) / self.stats.input_std
        inp = x
        for k, ((Wh, Wx, b), (p_i, p_f, p_o)) in enumerate(zip(self._stacked, self._peep)):
            n = Wh.shape[0]
            z = inp @ Wx + self.h[k] @ Wh + b
            cp = self.c[k]
            i = sigm(z[:n] + p_i * cp)
            f = sigm(z[n:2 * n] + p_f * cp)
            g = np.tanh(z[2 * n:3 * n])
            c = f * cp + i * g
            o = sigm(z[3 * n:] + p_o * c)
            self.c[k] = c
            self.h[k] = o * np.tanh(c)
            inp = self.h[k]
        y = float(inp @ self.w_y) + self.b_y
        return float(self.stats.denormalize_output(y))


class SwitchPolicy(Policy):
    """Constant forward speed until the reading hits the target, then constant return."""

    def __init__(self, omega_fwd: float, omega_back: float):
        if not (omega_fwd > 0 and omega_back < 0):
            raise ValidationError("switch controller needs omega_fwd > 0 > omega_back")
        self.omega_fwd = omega_fwd
        self.omega_back = omega_back

    def reset(self, task, theta0):
        self.target = volume_to_weight(task.vol_2pour_ml)
        self.theta0 = theta0
        self.f0 = None
        self.phase = "forward"

    def act(self, theta, f_lbf, state=None):
        if self.f0 is None:
            self.f0 = f_lbf
        if self.phase == "forward" and f_lbf - self.f0 >= self.target:
            self.phase = "backward"
        if self.phase == "forward":
            return self.omega_fwd
        if self.phase == "backward":
            if theta <= self.theta0:
                self.phase = "done"
                return 0.0
            return max(self.omega_back, (self.theta0 - theta) / CONSTANTS.dt)
        return 0.0


class OraclePolicy(SwitchPolicy):
    """Cheating switch controller that reads the plant's true received volume."""

    def __init__(self, omega_fwd: float = 5.0, omega_back: float = -30.0):
        super().__init__(omega_fwd, omega_back)

    def act(self, theta, f_lbf, state):
        return super().act(theta, volume_to_weight(state.v_recv_ml + state.v_transit_ml), state)


@dataclass
class PourResult:
    trial: TrialRecord | None
    actual_ml: float
    requested_ml: float
    signed_error_ml: float
    duration_s: float
    terminated_by: str
    task: PourTask
    commanded_dps: np.ndarray = field(repr=False, default=None)
    v_recv_ml: np.ndarray = field(repr=False, default=None)
    trajectory: list | None = field(repr=False, default=None)

    @property
    def abs_error_ml(self) -> float:
        return abs(self.signed_error_ml)


def execute(policy: Policy, task: PourTask, flow: FlowModel = FlowModel(), sensor: SensorModel = SensorModel(),
            limits: Limits = Limits(), record_trajectory: bool = False, source_tag: str = "robot-practice") -> PourResult:
    """Run one pour to termination and measure the settled outcome."""
    dt = CONSTANTS.dt
    rng = np.random.default_rng(task.seed)
    theta0 = float(rng.uniform(*limits.initial_angle_range))
    state = initial_state(task.container, task.vol_total_ml, theta0)
    v_init = state.v_recv_ml
    stream = ForceSensor(sensor, rng)
    flt = StreamingForceFilter()
    policy.reset(task, theta0)
    thetas, forces, omegas, recv = [], [], [], []
    traj = [] if record_trajectory else None
    while True:
        f_meas = flt.update(stream.read(state))
        thetas.append(state.theta_deg)
        forces.append(f_meas)
        recv.append(state.v_recv_ml)
        omega = float(np.clip(policy.act(state.theta_deg, f_meas, state), -limits.max_omega_dps, limits.max_omega_dps))
        # the joint stops: a command pushing past 0 or MAX_TILT_DEG only moves the arm up to the stop
        omega = float(np.clip(omega, -state.theta_deg / dt, (MAX_TILT_DEG - state.theta_deg) / dt))
        omegas.append(omega)
        if traj is not None:
            traj.append((state.t_s, state.theta_deg, omega, state.v_source_ml, state.v_recv_ml, f_meas))
        status = termination_policy(thetas, omegas, limits)
        if status != CONTINUE:
            break
        state = step(state, omega, flow)
    duration = (len(thetas) - 1) * dt
    final = run_to_equilibrium(state, flow)
    actual = final.v_recv_ml - v_init
    trial = None
    if 0.0 < actual < task.vol_total_ml and len(thetas) >= 2:
        trial = TrialRecord(
            container=task.container,
            f_total_lbf=volume_to_weight(task.vol_total_ml),
            f_2pour_lbf=volume_to_weight(actual),
            theta_deg=np.asarray(thetas),
            f_lbf=np.asarray(forces),
            source_tag=source_tag,
            meta={"requested_ml": task.vol_2pour_ml, "actual_ml": actual, "seed": task.seed},
        )
    return PourResult(trial, actual, task.vol_2pour_ml, actual - task.vol_2pour_ml, duration, status, task,
                      np.asarray(omegas), np.asarray(recv), traj)


def run_closed_loop(model: ModelCheckpoint, task: PourTask, flow: FlowModel = FlowModel(),
                    sensor: SensorModel = SensorModel(), limits: Limits = Limits(),
                    record_trajectory: bool = False) -> PourResult:
    return execute(LearnedPolicy(model), task, flow, sensor, limits, record_trajectory)


def switch_controller(task: PourTask, omega_fwd: float, omega_back: float, flow: FlowModel = FlowModel(),
                      sensor: SensorModel = SensorModel(), limits: Limits = Limits()) -> PourResult:
    return execute(SwitchPolicy(omega_fwd, omega_back), task, flow, sensor, limits)


def replay(trial: TrialRecord, vol_total_ml: float | None = None, flow: FlowModel = FlowModel()) -> float:
    """Drive the plant open-loop with a recorded trial's velocities; return the settled poured volume.

    The starting volume defaults to the one implied by the trial's ``f_total``.
    """
    if vol_total_ml is None:
        vol_total_ml = weight_to_volume(trial.f_total_lbf)
    state = initial_state(trial.container, vol_total_ml, float(trial.theta_deg[0]))
    for w in trial.omega_dps:
        state = step(state, float(w), flow)
    return run_to_equilibrium(state, flow).v_recv_ml
