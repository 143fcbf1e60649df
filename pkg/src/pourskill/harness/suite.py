"""End-to-end experiment suite: demonstrations, training, evaluation, baselines and GSSP.

Every output file is a pure function of the configuration and its root seed.
Wall-clock timings go to the log only, never into reports.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..control import PlantConfig, SwitchPolicy
from ..core import ErrorStats
from ..errors import PourSkillError
from ..gssp import GsspConfig, GsspOutcome, gssp_batch, gssp_gradual
from ..net.checkpoint import Hyper, ModelCheckpoint, dumps
from ..net.train import TrainResult, train
from ..signal.demo import DemoOutcome, generate_demo
from ..signal.split import split_dataset
from ..signal.trialio import write_dataset
from .catalog import DEFAULT_CATALOG, ContainerCatalog, generate_practice_tasks
from .config import SuiteConfig, dump_config
from .evaluate import (NS_DEMOS, NS_EVAL, NS_PRACTICE, NS_SPLIT, NS_TRAIN, Evaluation, ExperimentReport,
                       derived_seed, evaluate_tasks, seed_stream)
from .export import export_plot_data

log = logging.getLogger(__name__)

# practice-namespace slots, one per GSSP experiment
_SLOT = {"batch.wine_bottle": 1, "batch.blue_bottle": 2, "gradual.wine_bottle": 3, "batch_combined.wine_bottle": 4}


def generate_demos(n: int, root_seed: int, catalog: ContainerCatalog = DEFAULT_CATALOG,
                   plant: PlantConfig = PlantConfig()) -> list[DemoOutcome]:
    """Round-robin over the training containers, one random task per demonstration."""
    rng = seed_stream(root_seed, NS_DEMOS)
    demos = []
    for k in range(n):
        c = catalog.training[k % len(catalog.training)]
        task = generate_practice_tasks(1, c, rng)[0]
        demos.append(generate_demo(c, task.vol_total_ml, task.vol_2pour_ml, rng, flow=plant.flow, sensor=plant.sensor))
    return demos


def demonstrator_stats(demos) -> ErrorStats:
    return ErrorStats.from_pairs((d.requested_ml, d.actual_ml) for d in demos)


def train_from_demos(demos, cfg: SuiteConfig) -> tuple[TrainResult, list, list]:
    train_set, val_set = split_dataset([d.trial for d in demos], seed_stream(cfg.seed, NS_SPLIT))
    hyper = Hyper(keep_prob=cfg.keep_prob, lr=cfg.lr, epochs=cfg.epochs, seed=derived_seed(cfg.seed, NS_TRAIN),
                  batch_size=cfg.batch_size, n_units=cfg.n_units, n_layers=cfg.n_layers)
    return train(train_set, val_set, hyper), train_set, val_set


def eval_tasks_for(cfg: SuiteConfig, catalog: ContainerCatalog, container_name: str):
    """The fixed evaluation task set of one container (shared by every model evaluated on it)."""
    names = [c.name for c in catalog.all()]
    idx = names.index(container_name)
    return generate_practice_tasks(cfg.eval_trials, catalog.all()[idx], seed_stream(cfg.seed, NS_EVAL, idx))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _fname(label: str) -> str:
    return label.replace(">", "__")


@dataclass
class SuiteResult:
    out_dir: Path
    config: SuiteConfig
    reports: dict[str, ExperimentReport] = field(default_factory=dict)
    gssp: dict[str, GsspOutcome] = field(default_factory=dict)
    models: dict[str, ModelCheckpoint] = field(default_factory=dict)
    demo_stats: ErrorStats | None = None
    summary: str = ""
    stages: list[str] = field(default_factory=list)

    def mu(self, experiment_id: str) -> float:
        return self.reports[experiment_id].stats.mu_e_ml


class _Suite:
    def __init__(self, cfg: SuiteConfig, out_dir, catalog: ContainerCatalog, plant: PlantConfig):
        self.cfg, self.catalog, self.plant = cfg, catalog, plant
        self.out = Path(out_dir)
        self.res = SuiteResult(self.out, cfg)
        self.files: list[Path] = []

    # -- output helpers -------------------------------------------------
    def write(self, rel: str, text: str) -> Path:
        path = self.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.files.append(path)
        return path

    def save_model(self, ckpt: ModelCheckpoint) -> None:
        self.res.models[ckpt.label] = ckpt
        self.write(f"models/{_fname(ckpt.label)}.json", dumps(ckpt))

    def record(self, exp_id: str, ev: Evaluation, lineage, **extra) -> ExperimentReport:
        rep = ExperimentReport.from_evaluation(exp_id, ev, lineage, self.cfg.echo(), self.cfg.seed, **extra)
        self.res.reports[exp_id] = rep
        self.write(f"reports/{exp_id}.json", rep.to_json())
        self.files.append(export_plot_data(rep, "target_vs_actual", self.out / f"plots/{exp_id}.target_vs_actual.csv"))
        for k in range(len(rep.trajectories)):
            self.files.append(export_plot_data(rep, "trajectory", self.out / f"plots/{exp_id}.trajectory{k:02d}.csv", k))
        return rep

    def evaluate(self, exp_id: str, model, container_name: str, plant: PlantConfig | None = None,
                 lineage=None) -> ExperimentReport:
        tasks = eval_tasks_for(self.cfg, self.catalog, container_name)
        verbose = self.cfg.verbose_trajectories
        ev = evaluate_tasks(model, tasks, plant or self.plant, record_trajectories=True)
        if not verbose:  # keep the first pour's trajectory as an example of the motion
            for r in ev.results[1:]:
                r.trajectory = None
        lineage = lineage if lineage is not None else list(model.lineage)
        return self.record(exp_id, ev, lineage)

    def stage(self, name: str, fn) -> None:
        t0 = time.perf_counter()
        log.info("stage %s ...", name)
        fn()
        self.res.stages.append(name)
        log.info("stage %s done in %.1f s", name, time.perf_counter() - t0)

    def manifest(self, status: str, error: str | None = None) -> None:
        entries = {str(p.relative_to(self.out)): _sha256(p) for p in sorted(set(self.files))}
        doc = {"status": status, "stages_completed": self.res.stages, "files": entries}
        if error:
            doc["error"] = error
        (self.out / "manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")

    # -- stages ---------------------------------------------------------
    def s_demos(self):
        demos = generate_demos(self.cfg.n_demos, self.cfg.seed, self.catalog, self.plant)
        self.demos = demos
        self.res.demo_stats = demonstrator_stats(demos)
        ev = Evaluation(self.catalog.accustomed, self.res.demo_stats, [])
        rep = ExperimentReport.from_evaluation("demonstrator", ev, ["demonstrator"], self.cfg.echo(), self.cfg.seed,
                                               attempts=[d.attempts for d in demos])
        rep.durations = [d.trial.duration_s for d in demos]
        rep.terminations = ["demo"] * len(demos)
        self.res.reports["demonstrator"] = rep
        self.write("reports/demonstrator.json", rep.to_json())

    def s_train(self):
        result, train_set, val_set = train_from_demos(self.demos, self.cfg)
        self.train_set = train_set
        if self.cfg.write_demos:
            manifest = write_dataset(self.out / "demos", train_set, val_set)
            self.files.append(manifest)
        self.m0 = result.checkpoint
        self.save_model(self.m0)
        (self.out / "curves").mkdir(parents=True, exist_ok=True)
        result.write_curve(self.out / "curves/M0.csv")
        self.files.append(self.out / "curves/M0.csv")

    def s_eval(self):
        for c in (self.catalog.accustomed, *self.catalog.similar_test, *self.catalog.unaccustomed):
            self.evaluate(f"eval.M0.{c.name}", self.m0, c.name)

    def s_switch(self):
        plant = replace(self.plant, limits=replace(self.plant.limits, timeout_s=self.cfg.switch_timeout_s))
        acc = self.catalog.accustomed.name
        for tag, fwd, back in (("fast", self.cfg.switch_fast_fwd, self.cfg.switch_fast_back),
                               ("slow", self.cfg.switch_slow_fwd, self.cfg.switch_slow_back)):
            self.evaluate(f"switch.{tag}.{acc}", SwitchPolicy(fwd, back), acc, plant,
                          lineage=[f"switch({fwd:g},{back:g})"])

    def _after_gssp(self, key: str, outcome: GsspOutcome, container: str) -> None:
        self.res.gssp[key] = outcome
        self.write(f"gssp/{key}.json", json.dumps(outcome.report(), indent=1, sort_keys=True) + "\n")
        self.save_model(outcome.model)
        self.evaluate(f"post.{key}", outcome.model, container)
        self.evaluate(f"regress.{key}.{self.catalog.accustomed.name}", outcome.model, self.catalog.accustomed.name)

    def _gssp_config(self, key: str, mode: str, n: int, **kw) -> GsspConfig:
        return GsspConfig(mode=mode, n_practices=n, fine_tune_epochs=self.cfg.ft_epochs, fine_tune_lr=self.cfg.ft_lr,
                          seed=derived_seed(self.cfg.seed, NS_PRACTICE, _SLOT[key]), **kw)

    def s_batch(self):
        for container, n in (("wine_bottle", self.cfg.batch_n_wine), ("blue_bottle", self.cfg.batch_n_blue)):
            key = f"batch.{container}"
            out = gssp_batch(self.m0, self.catalog.get(container), self._gssp_config(key, "batch", n),
                             plant=self.plant)
            self._after_gssp(key, out, container)

    def s_gradual(self):
        key = "gradual.wine_bottle"
        threshold = self.cfg.err_threshold_factor * self.res.demo_stats.mu_e_ml
        cfg = self._gssp_config(key, "gradual", self.cfg.gradual_n, err_threshold_ml=threshold,
                                max_rounds=self.cfg.gradual_max_rounds, reuse_tasks=self.cfg.gradual_reuse_tasks)
        out = gssp_gradual(self.m0, self.catalog.get("wine_bottle"), cfg, plant=self.plant)
        self._after_gssp(key, out, "wine_bottle")

    def s_combined(self):
        key = "batch_combined.wine_bottle"
        cfg = self._gssp_config(key, "batch_combined", self.cfg.batch_n_wine)
        out = gssp_batch(self.m0, self.catalog.get("wine_bottle"), cfg, include_demos=True, demos=self.train_set,
                         plant=self.plant)
        self._after_gssp(key, out, "wine_bottle")

    def s_summary(self):
        self.res.summary = summary_table(self.res, self.catalog)
        self.write("summary.txt", self.res.summary)
        rows = [self.res.reports[k] for k in sorted(self.res.reports) if k != "demonstrator"]
        self.files.append(export_plot_data(rows, "error_bars", self.out / "plots/error_bars.csv"))
        self.write("config.txt", dump_config(self.cfg))

    def run(self) -> SuiteResult:
        self.out.mkdir(parents=True, exist_ok=True)
        stages = [("demos", self.s_demos), ("train", self.s_train), ("evaluate", self.s_eval),
                  ("switch_baseline", self.s_switch), ("gssp_batch", self.s_batch), ("gssp_gradual", self.s_gradual)]
        if self.cfg.include_combined:
            stages.append(("gssp_batch_combined", self.s_combined))
        stages.append(("summary", self.s_summary))
        try:
            for name, fn in stages:
                self.stage(name, fn)
        except PourSkillError as exc:
            self.manifest("failed", f"{type(exc).__name__}: {exc}")
            raise
        self.manifest("complete")
        return self.res


def run_experiment_suite(cfg: SuiteConfig, out_dir, catalog: ContainerCatalog = DEFAULT_CATALOG,
                         plant: PlantConfig = PlantConfig()) -> SuiteResult:
    """Run every stage in order. A failing stage leaves a partial ``manifest.json`` behind."""
    return _Suite(cfg, out_dir, catalog, plant).run()


def _row(name: str, rep: ExperimentReport | None, note: str = "") -> str:
    if rep is None:
        return f"  {name:<34s} {'-':>8s} {'-':>8s}  {note}".rstrip() + "\n"
    return f"  {name:<34s} {rep.stats.mu_e_ml:8.2f} {rep.stats.sigma_e_ml:8.2f}  {note}".rstrip() + "\n"


def summary_table(res: SuiteResult, catalog: ContainerCatalog = DEFAULT_CATALOG) -> str:
    r = res.reports
    acc = catalog.accustomed.name
    head = f"  {'':<34s} {'mu_e':>8s} {'sigma_e':>8s}\n"
    out = [f"seed {res.config.seed}\n\n", "Errors per source container (mL)\n", head]
    groups = (("training", catalog.training[:1]), ("similar", catalog.similar_test),
              ("unaccustomed", catalog.unaccustomed))
    for group, containers in groups:
        for c in containers:
            out.append(_row(f"{c.name} [{group}]", r.get(f"eval.M0.{c.name}")))
    out.append(_row(f"demonstrator (all {len(r['demonstrator'].stats.per_trial)} demos)", r.get("demonstrator")))
    out.append("\nSwitch controller on " + acc + "\n" + head)
    for tag in ("fast", "slow"):
        rep = r.get(f"switch.{tag}.{acc}")
        out.append(_row(f"{tag} {rep.lineage[0] if rep else ''}", rep))
    out.append(_row("learned model", r.get(f"eval.M0.{acc}")))
    if "gradual.wine_bottle" in res.gssp:
        g = res.gssp["gradual.wine_bottle"]
        out.append("\nGradual practicing on wine_bottle\n")
        out.append(f"  {'round':>5s} {'n':>4s} {'mean_err':>9s} {'dataset':>8s}  model\n")
        for rr in g.rounds:
            out.append(f"  {rr.round:5d} {rr.n:4d} {rr.mean_error_ml:9.2f} {rr.dataset_size:8d}  {rr.model_label}\n")
        out.append(f"  converged: {'yes' if g.converged else 'no (max_rounds reached)'}\n")
    batch_keys = [k for k in ("batch.wine_bottle", "batch.blue_bottle", "gradual.wine_bottle",
                              "batch_combined.wine_bottle") if k in res.gssp]
    if batch_keys:
        out.append("\nBefore and after practicing\n")
        out.append(f"  {'experiment':<28s} {'before':>8s} {'after':>8s} {'change':>8s} {acc + ' after':>16s}\n")
        for k in batch_keys:
            container = k.split(".", 1)[1]
            pre, post = r[f"eval.M0.{container}"].stats.mu_e_ml, r[f"post.{k}"].stats.mu_e_ml
            reg = r[f"regress.{k}.{acc}"].stats.mu_e_ml
            out.append(f"  {k:<28s} {pre:8.2f} {post:8.2f} {100 * (post - pre) / pre:7.1f}% {reg:16.2f}\n")
    return "".join(out)
