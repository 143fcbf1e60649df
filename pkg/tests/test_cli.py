import json

import pytest
from click.testing import CliRunner

from pourskill.cli import main


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """gen-demos -> train -> eval, with tiny budgets."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "tiny.cfg"
    cfg.write_text("seed = 5\nepochs = 4\nn_units = 6\nft_epochs = 2\ngradual_max_rounds = 2\n")
    r = CliRunner()
    res = r.invoke(main, ["gen-demos", "--seed", "5", "--trials", "18", "--out", str(root / "demos")])
    assert res.exit_code == 0, res.output
    res = r.invoke(main, ["train", "--config", str(cfg), "--data", str(root / "demos/manifest.csv"),
                          "--out", str(root / "model")])
    assert res.exit_code == 0, res.output
    res = r.invoke(main, ["eval", "--model", str(root / "model/model.json"), "--container", "red_cup",
                          "--trials", "3", "--seed", "2", "--out", str(root / "eval")])
    assert res.exit_code == 0, res.output
    return root, cfg


def test_gen_demos_outputs(pipeline):
    root, _ = pipeline
    doc = json.loads((root / "demos/demonstrator.json").read_text())
    assert doc["n"] == 18 and doc["mu_e_ml"] > 0
    assert (root / "demos/manifest.csv").exists()


def test_train_outputs(pipeline):
    root, _ = pipeline
    assert (root / "model/model.json").exists()
    assert len((root / "model/curve.csv").read_text().splitlines()) == 1 + 5  # header, epoch 0 (init), 4 epochs


def test_eval_outputs(pipeline):
    root, _ = pipeline
    rep = json.loads((root / "eval/eval.red_cup.json").read_text())
    assert len(rep["trials"]) == 3
    assert (root / "eval/eval.red_cup.trajectory00.csv").exists()
    assert not (root / "eval/eval.red_cup.trajectory01.csv").exists()


def test_eval_verbose_trajectories(pipeline, runner, tmp_path):
    root, _ = pipeline
    res = runner.invoke(main, ["eval", "--model", str(root / "model/model.json"), "--container", "red_cup",
                               "--trials", "2", "--out", str(tmp_path), "--verbose-trajectories"])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "eval.red_cup.trajectory01.csv").exists()


def test_export_commands(pipeline, runner, tmp_path):
    root, _ = pipeline
    rep = str(root / "eval/eval.red_cup.json")
    res = runner.invoke(main, ["export", "--report", rep, "--report", rep, "--style", "error_bars",
                               "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert len((tmp_path / "error_bars.csv").read_text().splitlines()) == 3
    res = runner.invoke(main, ["export", "--report", rep, "--style", "target_vs_actual", "--out", str(tmp_path)])
    assert res.exit_code == 0
    res = runner.invoke(main, ["export", "--report", rep, "--style", "trajectory", "--out", str(tmp_path)])
    assert res.exit_code == 2


def test_gssp_batch_command(pipeline, runner, tmp_path):
    root, cfg = pipeline
    res = runner.invoke(main, ["gssp", "--config", str(cfg), "--model", str(root / "model/model.json"),
                               "--container", "red_cup", "--mode", "batch", "--trials", "36", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "round 1: n=36" in res.output
    doc = json.loads((tmp_path / "gssp_report.json").read_text())
    assert doc["lineage"][0] == "M0" and doc["rounds"][0]["n"] == 36


def test_gssp_usage_errors(pipeline, runner, tmp_path):
    root, cfg = pipeline
    model = str(root / "model/model.json")
    base = ["gssp", "--config", str(cfg), "--model", model, "--container", "red_cup", "--out", str(tmp_path)]
    assert runner.invoke(main, base + ["--mode", "sideways"]).exit_code == 2
    assert runner.invoke(main, base + ["--include-demos"]).exit_code == 2
    assert runner.invoke(main, base + ["--mode", "batch-combined", "--trials", "36"]).exit_code == 2
    assert runner.invoke(main, base + ["--mode", "batch", "--trials", "20"]).exit_code == 3


def test_switch_baseline_command(runner, tmp_path):
    res = runner.invoke(main, ["switch-baseline", "--trials", "2", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "switch.red_cup: mu_e" in res.output
    res = runner.invoke(main, ["switch-baseline", "--forward", "-3", "--out", str(tmp_path)])
    assert res.exit_code == 2


@pytest.mark.parametrize("args", [
    ["eval", "--model", "/nonexistent.json", "--container", "red_cup", "--out", "/tmp/x"],
    ["switch-baseline", "--container", "teapot", "--out", "/tmp/x"],
    ["suite", "--out", "/tmp/x"],  # no seed anywhere
    ["gen-demos", "--out", "/tmp/x", "--trials", "3", "--seed", "1"],
    ["train"],
])
def test_usage_exit_code(runner, args):
    assert runner.invoke(main, args).exit_code == 2


def test_corrupt_checkpoint_exit_code(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    res = runner.invoke(main, ["eval", "--model", str(bad), "--container", "red_cup", "--out", str(tmp_path)])
    assert res.exit_code == 3


def test_grad_check_command(runner):
    res = runner.invoke(main, ["grad-check", "--trials", "2"])
    assert res.exit_code == 0, res.output
    assert "max relative error" in res.output


def test_grad_check_failure_exit_code(runner):
    assert runner.invoke(main, ["grad-check", "--trials", "1", "--tol", "1e-30"]).exit_code == 5


def test_sim_oracle_check_command(runner):
    res = runner.invoke(main, ["sim-oracle-check", "--trials", "5"])
    assert res.exit_code == 0, res.output
    assert "receiver monotone: True" in res.output
