"""Command-line entry point (``pourskill``)."""
from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from .errors import AcceptanceFailure, PourSkillError, UsageError

MODE_CHOICES = ("gradual", "batch", "batch-combined")


def _handle_errors(fn):
    """Map library exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PourSkillError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)

    return wrapper


def _config(config, seed, **overrides):
    from .harness.config import load_config

    return load_config(config, seed=seed, **overrides)


def _out(out) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _load_model(path):
    from .net.checkpoint import load_checkpoint

    if path is None:
        raise UsageError("--model is required")
    if not Path(path).exists():
        raise UsageError(f"no checkpoint at {path}")
    return load_checkpoint(path)


def _container(name):
    from .harness.catalog import DEFAULT_CATALOG

    if name is None:
        raise UsageError("--container is required")
    return DEFAULT_CATALOG.get(name)


config_opt = click.option("--config", type=click.Path(exists=True, dir_okay=False), help="flat key = value file")
seed_opt = click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="root seed (overrides the config)")
out_opt = click.option("--out", type=click.Path(file_okay=False), required=True, help="output directory")


@click.group()
@click.option("-v", "--verbose", count=True, help="log progress (-vv for debug)")
def main(verbose):
    """Learned accurate pouring in simulation."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command("gen-demos")
@config_opt
@seed_opt
@out_opt
@click.option("--trials", type=click.IntRange(10), help="number of demonstrations")
@_handle_errors
def gen_demos(config, seed, out, trials):
    """Synthesize demonstrations and write them with a train/validation manifest."""
    from .harness.evaluate import NS_SPLIT, seed_stream
    from .harness.suite import demonstrator_stats, generate_demos
    from .signal import split_dataset, write_dataset

    cfg = _config(config, seed, n_demos=trials)
    out = _out(out)
    demos = generate_demos(cfg.n_demos, cfg.seed)
    train_set, val_set = split_dataset([d.trial for d in demos], seed_stream(cfg.seed, NS_SPLIT))
    manifest = write_dataset(out, train_set, val_set)
    stats = demonstrator_stats(demos)
    _write_json(out / "demonstrator.json", {"n": stats.n, "mu_e_ml": stats.mu_e_ml, "sigma_e_ml": stats.sigma_e_ml,
                                            "seed": cfg.seed})
    click.echo(f"{len(demos)} demonstrations -> {manifest}  (demonstrator mu_e {stats.mu_e_ml:.2f} mL)")


@main.command()
@config_opt
@seed_opt
@out_opt
@click.option("--data", type=click.Path(exists=True, dir_okay=False), help="demo manifest.csv (else generated)")
@_handle_errors
def train(config, seed, out, data):
    """Train a model on demonstrations; writes model.json and curve.csv."""
    from .harness.suite import generate_demos, train_from_demos
    from .net.checkpoint import Hyper, save_checkpoint
    from .net.train import train as train_model
    from .signal import read_manifest

    cfg = _config(config, seed)
    out = _out(out)
    if data:
        train_set, val_set = read_manifest(data)
        hyper = Hyper(keep_prob=cfg.keep_prob, lr=cfg.lr, epochs=cfg.epochs, seed=cfg.seed,
                      batch_size=cfg.batch_size, n_units=cfg.n_units, n_layers=cfg.n_layers)
        result = train_model(train_set, val_set, hyper)
    else:
        result = train_from_demos(generate_demos(cfg.n_demos, cfg.seed), cfg)[0]
    save_checkpoint(result.checkpoint, out / "model.json")
    result.write_curve(out / "curve.csv")
    _, tl, vl = result.curve[result.best_epoch]
    click.echo(f"best epoch {result.best_epoch}: train {tl:.5f} val {vl:.5f} -> {out / 'model.json'}")


def _eval_and_write(policy, lineage, container, trials, seed, out, exp_id, verbose, limits=None):
    from .control import PlantConfig
    from .harness.evaluate import NS_EVAL, ExperimentReport, evaluate, seed_stream
    from .harness.export import export_plot_data

    plant = PlantConfig() if limits is None else PlantConfig(limits=limits)
    ev = evaluate(policy, container, trials, seed_stream(seed, NS_EVAL), plant, record_trajectories=True)
    if not verbose:
        for r in ev.results[1:]:
            r.trajectory = None
    rep = ExperimentReport.from_evaluation(exp_id, ev, lineage, {"trials": trials}, seed)
    (out / f"{exp_id}.json").write_text(rep.to_json())
    export_plot_data(rep, "target_vs_actual", out / f"{exp_id}.target_vs_actual.csv")
    for k in range(len(rep.trajectories)):
        export_plot_data(rep, "trajectory", out / f"{exp_id}.trajectory{k:02d}.csv", k)
    settled = sum(t == "settled" for t in rep.terminations)
    click.echo(f"{exp_id}: mu_e {rep.stats.mu_e_ml:.2f} mL  sigma_e {rep.stats.sigma_e_ml:.2f} mL  "
               f"settled {settled}/{rep.stats.n}")
    return rep


@main.command("eval")
@click.option("--model", type=click.Path(dir_okay=False), required=True)
@click.option("--container", required=True)
@click.option("--trials", type=click.IntRange(1), default=15, show_default=True)
@seed_opt
@out_opt
@click.option("--verbose-trajectories", is_flag=True, help="export every pour's trajectory, not just the first")
@_handle_errors
def eval_cmd(model, container, trials, seed, out, verbose_trajectories):
    """Evaluate a checkpoint on random tasks with one container."""
    ckpt = _load_model(model)
    c = _container(container)
    _eval_and_write(ckpt, ckpt.lineage, c, trials, seed or 0, _out(out), f"eval.{c.name}", verbose_trajectories)


@main.command("switch-baseline")
@click.option("--container", default="red_cup", show_default=True)
@click.option("--trials", type=click.IntRange(1), default=15, show_default=True)
@click.option("--forward", "omega_fwd", type=float, default=20.0, show_default=True, help="deg/s")
@click.option("--backward", "omega_back", type=float, default=-30.0, show_default=True, help="deg/s")
@click.option("--timeout", type=float, default=60.0, show_default=True, help="seconds")
@seed_opt
@out_opt
@click.option("--verbose-trajectories", is_flag=True)
@_handle_errors
def switch_baseline(container, trials, omega_fwd, omega_back, timeout, seed, out, verbose_trajectories):
    """Constant-speed forward, constant-speed back once the target weight reads reached."""
    from .control import Limits, SwitchPolicy

    if omega_fwd <= 0 or omega_back >= 0:
        raise UsageError("need --forward > 0 and --backward < 0")
    c = _container(container)
    _eval_and_write(SwitchPolicy(omega_fwd, omega_back), [f"switch({omega_fwd:g},{omega_back:g})"], c, trials,
                    seed or 0, _out(out), f"switch.{c.name}", verbose_trajectories, Limits(timeout_s=timeout))


@main.command()
@config_opt
@seed_opt
@out_opt
@click.option("--model", type=click.Path(dir_okay=False), required=True)
@click.option("--container", required=True)
@click.option("--mode", type=click.Choice(MODE_CHOICES), default="gradual", show_default=True)
@click.option("--trials", type=click.IntRange(1), help="practices per round (default 10 gradual, 36 batch)")
@click.option("--include-demos", is_flag=True, help="fine-tune on practices plus demonstrations")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), help="demo manifest.csv for --include-demos")
@click.option("--threshold", type=float, default=30.0, show_default=True, help="gradual stop error (mL)")
@_handle_errors
def gssp(config, seed, out, model, container, mode, trials, include_demos, data, threshold):
    """Self-supervised practicing on one container."""
    from .gssp import GsspConfig, gssp_batch, gssp_gradual
    from .net.checkpoint import save_checkpoint
    from .signal import read_manifest

    cfg = _config(config, seed if seed is not None else 0)
    ckpt = _load_model(model)
    c = _container(container)
    out = _out(out)
    mode = mode.replace("-", "_")
    if include_demos and mode == "gradual":
        raise UsageError("--include-demos applies to batch modes only")
    n = trials or (cfg.gradual_n if mode == "gradual" else cfg.batch_n_wine)
    gcfg = GsspConfig(mode=mode, n_practices=n, err_threshold_ml=threshold, max_rounds=cfg.gradual_max_rounds,
                      fine_tune_epochs=cfg.ft_epochs, fine_tune_lr=cfg.ft_lr, reuse_tasks=cfg.gradual_reuse_tasks,
                      seed=cfg.seed)
    if mode == "gradual":
        outcome = gssp_gradual(ckpt, c, gcfg)
    else:
        demos = None
        if include_demos or mode == "batch_combined":
            if not data:
                raise UsageError("--data <manifest.csv> is needed to include demonstrations")
            demos = read_manifest(data)[0]
        outcome = gssp_batch(ckpt, c, gcfg, include_demos=include_demos, demos=demos)
    save_checkpoint(outcome.model, out / "model.json")
    outcome.write_report(out / "gssp_report.json")
    for r in outcome.rounds:
        click.echo(f"round {r.round}: n={r.n} mean error {r.mean_error_ml:.2f} mL dataset {r.dataset_size} "
                   f"model {r.model_label}")
    click.echo(f"final model {outcome.model.label} (converged: {outcome.converged})")


@main.command()
@config_opt
@seed_opt
@out_opt
@click.option("--verbose-trajectories", is_flag=True, default=None)
@click.option("--include-demos", is_flag=True, default=None, help="also run the combined batch variant")
@_handle_errors
def suite(config, seed, out, verbose_trajectories, include_demos):
    """Run the full experiment suite and print the summary table."""
    from .harness.suite import run_experiment_suite

    cfg = _config(config, seed, verbose_trajectories=verbose_trajectories, include_combined=include_demos)
    res = run_experiment_suite(cfg, _out(out))
    click.echo(res.summary, nl=False)


@main.command()
@click.option("--report", "reports", type=click.Path(exists=True, dir_okay=False), multiple=True, required=True)
@click.option("--style", type=click.Choice(("target_vs_actual", "trajectory", "error_bars")), required=True)
@out_opt
@_handle_errors
def export(reports, style, out):
    """Turn saved experiment reports into plot-data CSV files."""
    from .harness.evaluate import ExperimentReport
    from .harness.export import export_plot_data

    if style == "trajectory":
        raise UsageError("trajectories are exported while evaluating (see --verbose-trajectories)")
    out = _out(out)
    loaded = [ExperimentReport.load(p) for p in reports]
    if style == "error_bars":
        path = export_plot_data(loaded, style, out / "error_bars.csv")
        click.echo(str(path))
        return
    for rep in loaded:
        click.echo(str(export_plot_data(rep, style, out / f"{rep.experiment_id}.{style}.csv")))


@main.command("grad-check")
@seed_opt
@click.option("--trials", type=click.IntRange(1), default=5, show_default=True, help="random networks")
@click.option("--tol", type=float, default=1e-4, show_default=True)
@_handle_errors
def grad_check(seed, trials, tol):
    """Compare BPTT gradients with central finite differences."""
    from .net.gradcheck import gradient_check

    base = seed or 0
    errs = [gradient_check(base + k) for k in range(trials)]
    worst = max(errs)
    click.echo(f"max relative error {worst:.3e} over {trials} networks (tol {tol:g})")
    if not worst < tol:
        raise AcceptanceFailure(f"gradient check failed: {worst:.3e} >= {tol:g}")


@main.command("sim-oracle-check")
@seed_opt
@click.option("--trials", type=click.IntRange(1), default=200, show_default=True, help="random trajectories")
@_handle_errors
def sim_oracle_check(seed, trials):
    """Check the retained-volume formula against slicing, and volume conservation."""
    from .harness.catalog import DEFAULT_CATALOG
    from .sim.audit import conservation_audit, geometry_audit

    geo = geometry_audit(DEFAULT_CATALOG.all())
    cons, monotone = conservation_audit(trials, seed=seed or 0)
    click.echo(f"geometry max relative gap {geo:.2e} (tol 5e-3)")
    click.echo(f"conservation max error {cons:.2e} mL (tol 1e-9), receiver monotone: {monotone}")
    if not (geo < 5e-3 and cons < 1e-9 and monotone):
        raise AcceptanceFailure("simulator oracle check failed")


if __name__ == "__main__":  # pragma: no cover
    main()
