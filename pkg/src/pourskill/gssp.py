"""Generalization by self-supervised practicing.

The model pours with an unfamiliar container, every practice is relabeled
with the volume it actually produced, and the model is fine-tuned on those
practices. Gradual mode repeats small rounds with a growing dataset until the
practice error drops under a threshold; batch mode runs one large round.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .control import TIMEOUT, PlantConfig, PourResult, run_closed_loop
from .core import ContainerSpec, TrialRecord
from .errors import InsufficientDataError, ValidationError
from .harness.catalog import generate_practice_tasks
from .net.checkpoint import Hyper, ModelCheckpoint
from .net.train import run_epochs
from .signal.features import trial_arrays

log = logging.getLogger(__name__)

MODES = ("gradual", "batch", "batch_combined")


@dataclass(frozen=True)
class GsspConfig:
    mode: str = "gradual"
    n_practices: int = 10
    err_threshold_ml: float = 30.0
    max_rounds: int = 8
    fine_tune_epochs: int = 500
    fine_tune_lr: float = 0.001
    reuse_tasks: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown GSSP mode {self.mode!r}")
        if self.mode == "gradual" and not 5 <= self.n_practices <= 15:
            raise ValidationError("gradual fine-tuning uses 5..15 practices per round")
        if self.mode != "gradual" and self.n_practices <= 35:
            raise ValidationError("batch fine-tuning needs more than 35 practices")
        if self.max_rounds < 1:
            raise ValidationError("max_rounds must be at least 1")


@dataclass
class RoundRecord:
    round: int
    n: int
    mean_error_ml: float
    dataset_size: int
    model_label: str


@dataclass
class GsspOutcome:
    model: ModelCheckpoint
    rounds: list[RoundRecord] = field(default_factory=list)
    converged: bool = True
    dataset: list[TrialRecord] = field(default_factory=list)
    practices: list[PourResult] = field(default_factory=list)

    def report(self) -> dict:
        return {
            "rounds": [vars(r) for r in self.rounds],
            "converged": self.converged,
            "lineage": list(self.model.lineage),
        }

    def write_report(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.report(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def practice(model: ModelCheckpoint, tasks, plant: PlantConfig = PlantConfig(), dataset=None):
    """Pour every task once with ``model``.

    Returns (dataset, mean_abs_error_ml, results). Each recorded trial already
    carries its own outcome as the pour goal. Pours that moved no liquid have no
    valid trial, and pours cut off by the timeout never finished their motion;
    neither adds to the dataset, but both still count in the error.
    """
    tasks = list(tasks)
    if not tasks:
        raise InsufficientDataError("practice needs at least one task")
    dataset = [] if dataset is None else dataset
    results = []
    for task in tasks:
        res = run_closed_loop(model, task, plant.flow, plant.sensor, plant.limits)
        results.append(res)
        if res.trial is not None and res.terminated_by != TIMEOUT:
            dataset.append(res.trial)
    mean_error = float(np.mean([r.abs_error_ml for r in results]))
    return dataset, mean_error, results


def fine_tune(model: ModelCheckpoint, dataset, epochs: int = 500, lr: float = 0.001, label: str = "ft",
              seed: int = 0) -> ModelCheckpoint:
    """Continue training from ``model`` with a fresh optimizer.

    Datasets of 10+ trials are split 80/20 and the best-validation epoch is
    kept; smaller ones train on everything and keep the last epoch. The input
    normalizer is inherited unchanged.
    """
    dataset = list(dataset)
    if not dataset:
        raise InsufficientDataError("fine-tuning needs a non-empty dataset")
    rng = np.random.default_rng(seed)
    stats = model.normalizer
    if len(dataset) >= 10:
        order = rng.permutation(len(dataset))
        n_train = int(round(0.8 * len(dataset)))
        train_set = [dataset[i] for i in order[:n_train]]
        val_set = [dataset[i] for i in order[n_train:]]
    else:
        train_set, val_set = dataset, []
    hyper = Hyper(**{**vars(model.hyper), "epochs": epochs, "lr": lr})
    net = model.net.copy()
    if epochs == 0:
        best, curve, best_epoch = net, [], 0
    else:
        best, curve, best_epoch = run_epochs(
            net,
            [trial_arrays(t, stats) for t in train_set],
            [trial_arrays(t, stats) for t in val_set],
            hyper,
            rng,
            select_best=bool(val_set),
        )
    out = model.with_net(best, label)
    out.notes = {**model.notes, "fine_tune": {"epochs": epochs, "lr": lr, "n_trials": len(dataset),
                                               "best_epoch": best_epoch}}
    out.notes["fine_tune_curve"] = [[e, tl, vl] for e, tl, vl in curve[:1] + curve[-1:]]
    return out


def _label(model: ModelCheckpoint, tag: str) -> str:
    return f"{model.label}>{tag}"


def gssp_gradual(model_init: ModelCheckpoint, container: ContainerSpec, config: GsspConfig,
                 plant: PlantConfig = PlantConfig()) -> GsspOutcome:
    """Practice, check the error, fine-tune on everything gathered, repeat."""
    if config.mode != "gradual":
        raise ValidationError("gssp_gradual needs mode='gradual'")
    rng = np.random.default_rng(config.seed)
    model = model_init
    dataset: list[TrialRecord] = []
    rounds: list[RoundRecord] = []
    practices: list[PourResult] = []
    best_model, best_err = model, float("inf")
    tasks = generate_practice_tasks(config.n_practices, container, rng)
    for k in range(1, config.max_rounds + 1):
        dataset, err, results = practice(model, tasks, plant, dataset)
        practices.extend(results)
        rounds.append(RoundRecord(k, len(tasks), err, len(dataset), model.label))
        log.info("gradual round %d: mean error %.2f mL, dataset %d", k, err, len(dataset))
        if err < best_err:
            best_model, best_err = model, err
        if err < config.err_threshold_ml:
            return GsspOutcome(model, rounds, True, dataset, practices)
        if k == config.max_rounds:
            break
        if not dataset:
            # nothing poured yet: the same tasks would fail the same way, so draw new ones
            log.warning("gradual round %d produced no usable trial; keeping %s", k, model.label)
            tasks = generate_practice_tasks(config.n_practices, container, rng)
            continue
        model = fine_tune(model, dataset, config.fine_tune_epochs, config.fine_tune_lr,
                          _label(model_init, f"{container.name}.g{k}"), seed=int(rng.integers(2**63 - 1)))
        if not config.reuse_tasks:
            tasks = generate_practice_tasks(config.n_practices, container, rng)
    return GsspOutcome(best_model, rounds, False, dataset, practices)


def gssp_batch(model_init: ModelCheckpoint, container: ContainerSpec, config: GsspConfig,
               include_demos: bool = False, demos=None, plant: PlantConfig = PlantConfig()) -> GsspOutcome:
    """One large practice round, then a single fine-tune (optionally with the demonstrations)."""
    if config.mode == "gradual":
        raise ValidationError("gssp_batch needs a batch mode")
    include_demos = include_demos or config.mode == "batch_combined"
    if include_demos and not demos:
        raise InsufficientDataError("combined fine-tuning needs the demonstration training split")
    rng = np.random.default_rng(config.seed)
    tasks = generate_practice_tasks(config.n_practices, container, rng)
    dataset, err, results = practice(model_init, tasks, plant)
    train_on = dataset + list(demos) if include_demos else dataset
    tag = f"{container.name}.{'bc' if include_demos else 'b'}"
    rounds = [RoundRecord(1, len(tasks), err, len(dataset), model_init.label)]
    if not train_on:
        log.warning("batch practice on %s produced no usable trial; model unchanged", container.name)
        return GsspOutcome(model_init, rounds, False, dataset, results)
    model = fine_tune(model_init, train_on, config.fine_tune_epochs, config.fine_tune_lr,
                      _label(model_init, tag), seed=int(rng.integers(2**63 - 1)))
    return GsspOutcome(model, rounds, True, dataset, results)
