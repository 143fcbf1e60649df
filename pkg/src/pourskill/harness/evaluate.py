"""Evaluation protocol, seed namespaces and experiment reports."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..control import LearnedPolicy, PlantConfig, Policy, PourResult, PourTask, SwitchPolicy, execute
from ..core import ContainerSpec, ErrorStats
from ..net.checkpoint import ModelCheckpoint
from .catalog import generate_practice_tasks

# Spawn-key namespaces under the root seed. Evaluation tasks and practice tasks
# come from different namespaces, so no evaluation pour ever repeats a practice.
NS_DEMOS = 1
NS_SPLIT = 2
NS_TRAIN = 3
NS_EVAL = 4
NS_PRACTICE = 5


def seed_stream(root: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(root), spawn_key=tuple(int(k) for k in key)))


def derived_seed(root: int, *key: int) -> int:
    return int(np.random.SeedSequence(int(root), spawn_key=tuple(int(k) for k in key)).generate_state(1, np.uint64)[0]
               >> np.uint64(1))


@dataclass
class Evaluation:
    container: ContainerSpec
    stats: ErrorStats
    results: list[PourResult]

    @property
    def durations(self) -> list[float]:
        return [r.duration_s for r in self.results]

    @property
    def terminations(self) -> list[str]:
        return [r.terminated_by for r in self.results]


def as_policy(model) -> Policy:
    if isinstance(model, Policy):
        return model
    if isinstance(model, ModelCheckpoint):
        return LearnedPolicy(model)
    raise TypeError(f"cannot pour with {type(model).__name__}")


def evaluate_tasks(model, tasks: list[PourTask], plant: PlantConfig = PlantConfig(),
                   record_trajectories: bool = False) -> Evaluation:
    policy = as_policy(model)
    results = [execute(policy, t, plant.flow, plant.sensor, plant.limits, record_trajectories) for t in tasks]
    stats = ErrorStats.from_pairs((r.requested_ml, r.actual_ml) for r in results)
    return Evaluation(tasks[0].container, stats, results)


def evaluate(model, container: ContainerSpec, n_trials: int = 15, rng: np.random.Generator | None = None,
             plant: PlantConfig = PlantConfig(), record_trajectories: bool = False) -> Evaluation:
    """Pour ``n_trials`` random tasks with ``model`` (a checkpoint or a policy).

    ``evaluate(...).stats`` holds mu_e and sigma_e over the absolute errors.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    tasks = generate_practice_tasks(n_trials, container, rng)
    return evaluate_tasks(model, tasks, plant, record_trajectories)


def switch_policy(omega_fwd: float, omega_back: float) -> SwitchPolicy:
    return SwitchPolicy(omega_fwd, omega_back)


@dataclass
class ExperimentReport:
    experiment_id: str
    container: str
    lineage: list[str]
    stats: ErrorStats
    durations: list[float]
    terminations: list[str]
    config: dict
    seed: int
    extra: dict = field(default_factory=dict)
    trajectories: list = field(default_factory=list, repr=False)  # exported separately, never in the JSON

    @classmethod
    def from_evaluation(cls, experiment_id: str, ev: Evaluation, lineage, config: dict, seed: int,
                        **extra) -> "ExperimentReport":
        trajs = [r.trajectory for r in ev.results if r.trajectory is not None]
        return cls(experiment_id, ev.container.name, list(lineage), ev.stats, ev.durations, ev.terminations,
                   dict(config), int(seed), dict(extra), trajs)

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "container": self.container,
            "lineage": self.lineage,
            "mu_e_ml": self.stats.mu_e_ml,
            "sigma_e_ml": self.stats.sigma_e_ml,
            "trials": [{"target_ml": t, "actual_ml": a, "signed_error_ml": e} for t, a, e in self.stats.per_trial],
            "durations_s": self.durations,
            "terminated_by": self.terminations,
            "config": self.config,
            "seed": self.seed,
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        stats = ErrorStats.from_pairs((t["target_ml"], t["actual_ml"]) for t in d["trials"])
        return cls(d["experiment_id"], d["container"], list(d["lineage"]), stats, list(d["durations_s"]),
                   list(d["terminated_by"]), dict(d["config"]), int(d["seed"]), dict(d.get("extra", {})))

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
