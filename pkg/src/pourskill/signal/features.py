"""Feature assembly and z-score normalization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import TrialRecord
from ..errors import InsufficientDataError

FEATURE_NAMES = ("theta_deg", "f_lbf", "f_total_lbf", "f_2pour_lbf", "height_mm", "curvature")
STD_FLOOR = 1e-6


@dataclass(frozen=True)
class NormalizerStats:
    input_mean: np.ndarray
    input_std: np.ndarray
    output_mean: float
    output_std: float

    def normalize_inputs(self, x):
        return (np.asarray(x, dtype=float) - self.input_mean) / self.input_std

    def denormalize_inputs(self, z):
        return np.asarray(z, dtype=float) * self.input_std + self.input_mean

    def normalize_output(self, y):
        return (np.asarray(y, dtype=float) - self.output_mean) / self.output_std

    def denormalize_output(self, z):
        return np.asarray(z, dtype=float) * self.output_std + self.output_mean

    def to_dict(self) -> dict:
        return {
            "input_mean": [float(v) for v in self.input_mean],
            "input_std": [float(v) for v in self.input_std],
            "output_mean": float(self.output_mean),
            "output_std": float(self.output_std),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizerStats":
        return cls(
            np.asarray(d["input_mean"], dtype=float),
            np.asarray(d["input_std"], dtype=float),
            float(d["output_mean"]),
            float(d["output_std"]),
        )


def raw_inputs(trial: TrialRecord) -> np.ndarray:
    """Unnormalized (T-1, 6) input matrix [theta, f, f_total, f_2pour, H, kappa]."""
    n = trial.length - 1
    x = np.empty((n, 6))
    x[:, 0] = trial.theta_deg[:n]
    x[:, 1] = trial.f_lbf[:n]
    x[:, 2:] = trial.static_features()
    return x


def fit_normalizer(trials) -> NormalizerStats:
    trials = list(trials)
    if len(trials) < 2:
        raise InsufficientDataError("need at least two trials to fit a normalizer")
    x = np.concatenate([raw_inputs(t) for t in trials])
    y = np.concatenate([t.omega_dps for t in trials])
    return NormalizerStats(
        x.mean(axis=0),
        np.maximum(x.std(axis=0), STD_FLOOR),
        float(y.mean()),
        float(max(y.std(), STD_FLOOR)),
    )


def assemble_features(trial: TrialRecord, t: int, stats: NormalizerStats) -> np.ndarray:
    """Normalized input vector at zero-based step ``t`` (0 <= t <= T-2)."""
    if not 0 <= t <= trial.length - 2:
        raise IndexError(f"step {t} outside [0, {trial.length - 2}]")
    raw = np.array([trial.theta_deg[t], trial.f_lbf[t], *trial.static_features()])
    return stats.normalize_inputs(raw)


def trial_arrays(trial: TrialRecord, stats: NormalizerStats) -> tuple[np.ndarray, np.ndarray]:
    """Normalized (inputs, targets) for one trial."""
    return stats.normalize_inputs(raw_inputs(trial)), stats.normalize_output(trial.omega_dps)
