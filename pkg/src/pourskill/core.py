"""Units, constants, container geometry and the trial data model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InsufficientDataError, InvalidGeometryError, InvalidMeasurementError, ValidationError

SOURCE_TAGS = ("human-demo", "synthetic-demo", "robot-practice")

# force readings may dip by this much between consecutive samples (sensor noise)
MONOTONE_TOLERANCE_LBF = 0.02


@dataclass(frozen=True)
class PhysicalConstants:
    water_density: float = 0.997  # g/mL
    gravity: float = 9.80665  # m/s^2
    lbf_to_newton: float = 4.4482216152605
    sample_rate: float = 60.0  # Hz

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class ContainerSpec:
    name: str
    height_mm: float
    diameter_mm: float

    def __post_init__(self):
        if not (0 < self.height_mm < math.inf and 0 < self.diameter_mm < math.inf):
            raise InvalidGeometryError(
                f"container {self.name!r}: height and diameter must be positive "
                f"(got H={self.height_mm}, D={self.diameter_mm})"
            )

    @property
    def radius_mm(self) -> float:
        return self.diameter_mm / 2.0

    @property
    def curvature(self) -> float:
        return curvature(self)

    @property
    def capacity_ml(self) -> float:
        return math.pi * self.radius_mm**2 * self.height_mm / 1000.0


def curvature(spec: ContainerSpec) -> float:
    """Body curvature 2/D in 1/mm."""
    if not spec.diameter_mm > 0:
        raise InvalidGeometryError(f"non-positive diameter {spec.diameter_mm}")
    return 2.0 / spec.diameter_mm


def weight_to_volume(f_lbf, consts: PhysicalConstants = CONSTANTS):
    """Convert a weight in lbf to a water volume in mL (v = f / (rho g))."""
    f = np.asarray(f_lbf, dtype=float)
    if np.any(f < 0):
        raise InvalidMeasurementError(f"negative weight {f_lbf}")
    # N / (m/s^2) = kg; kg / (g/mL) * 1000 g/kg = mL
    v = f * consts.lbf_to_newton / consts.gravity * 1000.0 / consts.water_density
    return float(v) if v.ndim == 0 else v


def volume_to_weight(v_ml, consts: PhysicalConstants = CONSTANTS):
    v = np.asarray(v_ml, dtype=float)
    if np.any(v < 0):
        raise InvalidMeasurementError(f"negative volume {v_ml}")
    f = v * consts.water_density / 1000.0 * consts.gravity / consts.lbf_to_newton
    return float(f) if f.ndim == 0 else f


def angular_velocity_series(theta_deg: Sequence[float], consts: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Forward differences of the angle, scaled by the sample rate (deg/s)."""
    theta = np.asarray(theta_deg, dtype=float)
    if theta.ndim != 1 or theta.size < 2:
        raise InsufficientDataError("need at least two angle samples")
    return np.diff(theta) * consts.sample_rate


@dataclass
class TrialRecord:
    """One pouring sequence sampled at 60 Hz.

    ``f_2pour_lbf`` is always the weight actually poured, never the requested
    target. ``omega_dps`` is derived from ``theta_deg`` when omitted.
    """

    container: ContainerSpec
    f_total_lbf: float
    f_2pour_lbf: float
    theta_deg: np.ndarray
    f_lbf: np.ndarray
    omega_dps: np.ndarray | None = None
    source_tag: str = "synthetic-demo"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta_deg = np.asarray(self.theta_deg, dtype=float)
        self.f_lbf = np.asarray(self.f_lbf, dtype=float)
        if self.omega_dps is None:
            self.omega_dps = angular_velocity_series(self.theta_deg)
        else:
            self.omega_dps = np.asarray(self.omega_dps, dtype=float)
        self.validate()

    @property
    def length(self) -> int:
        return int(self.theta_deg.size)

    @property
    def duration_s(self) -> float:
        return (self.length - 1) * CONSTANTS.dt

    def validate(self) -> None:
        if self.source_tag not in SOURCE_TAGS:
            raise ValidationError(f"unknown source tag {self.source_tag!r}")
        if not self.f_total_lbf > self.f_2pour_lbf > 0:
            raise ValidationError(
                f"need f_total > f_2pour > 0, got {self.f_total_lbf} / {self.f_2pour_lbf}"
            )
        T = self.theta_deg.size
        if T < 2:
            raise InsufficientDataError("trial shorter than 2 samples")
        if self.f_lbf.size != T or self.omega_dps.size != T - 1:
            raise ValidationError(
                f"length mismatch: theta {T}, f {self.f_lbf.size}, omega {self.omega_dps.size}"
            )
        if np.any(np.diff(self.f_lbf) < -MONOTONE_TOLERANCE_LBF):
            raise ValidationError("force series decreases beyond sensor tolerance")
        if not (np.all(np.isfinite(self.theta_deg)) and np.all(np.isfinite(self.f_lbf))):
            raise ValidationError("non-finite samples in trial")

    def static_features(self) -> tuple[float, float, float, float]:
        return (self.f_total_lbf, self.f_2pour_lbf, self.container.height_mm, self.container.curvature)


@dataclass(frozen=True)
class ErrorStats:
    mu_e_ml: float
    sigma_e_ml: float
    per_trial: tuple  # of (target_ml, actual_ml, signed_error_ml)

    @classmethod
    def from_pairs(cls, pairs) -> "ErrorStats":
        """Build from (target_ml, actual_ml) pairs; statistics use absolute errors."""
        rows = tuple((float(t), float(a), float(a) - float(t)) for t, a in pairs)
        if not rows:
            raise InsufficientDataError("no trials to summarize")
        abs_err = np.abs([r[2] for r in rows])
        return cls(float(abs_err.mean()), float(abs_err.std()), rows)

    @property
    def n(self) -> int:
        return len(self.per_trial)
