"""Plot-data export. Files are plain CSV with a header row; nothing is rendered."""
from __future__ import annotations

import csv
from pathlib import Path

from ..errors import UsageError
from .evaluate import ExperimentReport

STYLES = ("target_vs_actual", "trajectory", "error_bars")
TRAJECTORY_COLUMNS = ("t_s", "theta_deg", "omega_dps", "v_source_ml", "v_recv_ml", "f_lbf")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _target_vs_actual(report: ExperimentReport, fh) -> None:
    w = _writer(fh)
    w.writerow(["trial", "target_ml", "actual_ml", "signed_error_ml", "zero_error_ml"])
    for k, (target, actual, err) in enumerate(report.stats.per_trial):
        # last column is the zero-error diagonal evaluated at this target
        w.writerow([k, repr(target), repr(actual), repr(err), repr(target)])


def _trajectory(report: ExperimentReport, fh, index: int) -> None:
    if not report.trajectories:
        raise UsageError(f"report {report.experiment_id} carries no recorded trajectory")
    if not 0 <= index < len(report.trajectories):
        raise UsageError(f"trajectory index {index} out of range")
    w = _writer(fh)
    w.writerow(TRAJECTORY_COLUMNS)
    for row in report.trajectories[index]:
        w.writerow([repr(float(v)) for v in row])


def _error_bars(reports, fh) -> None:
    w = _writer(fh)
    w.writerow(["experiment_id", "container", "n", "mu_e_ml", "sigma_e_ml"])
    for r in reports:
        w.writerow([r.experiment_id, r.container, r.stats.n, repr(r.stats.mu_e_ml), repr(r.stats.sigma_e_ml)])


def export_plot_data(report, style: str, path, index: int = 0) -> Path:
    """Write one plot-data CSV.

    ``report`` is a single ExperimentReport, or a list of them for ``error_bars``.
    """
    if style not in STYLES:
        raise UsageError(f"unknown plot style {style!r}; choose from {', '.join(STYLES)}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if style == "error_bars":
            _error_bars(report if isinstance(report, (list, tuple)) else [report], fh)
        elif style == "target_vs_actual":
            _target_vs_actual(report, fh)
        else:
            _trajectory(report, fh, index)
    return path


def read_target_vs_actual(path) -> list[tuple[float, float]]:
    with open(path, newline="") as fh:
        return [(float(r["target_ml"]), float(r["actual_ml"])) for r in csv.DictReader(fh)]
