"""Trial file format and dataset manifests.

A trial file is a few ``# key: value`` header lines followed by CSV rows
``time_s,theta_deg,f_lbf`` sampled at 60 Hz::

    # name: red_cup
    # H_mm: 110.0
    # D_mm: 72.0
    # f_total_lbf: 0.61
    # f_2pour_lbf: 0.33
    # source_tag: human-demo
    time_s,theta_deg,f_lbf
    0.0,1.5,0.0
    ...

The same layout is used to import exported DIM-dataset pouring trials.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..core import CONSTANTS, ContainerSpec, TrialRecord
from ..errors import ValidationError

HEADER_KEYS = ("name", "H_mm", "D_mm", "f_total_lbf", "f_2pour_lbf", "source_tag")


def write_trial(path, trial: TrialRecord) -> None:
    c = trial.container
    header = {
        "name": c.name,
        "H_mm": repr(float(c.height_mm)),
        "D_mm": repr(float(c.diameter_mm)),
        "f_total_lbf": repr(float(trial.f_total_lbf)),
        "f_2pour_lbf": repr(float(trial.f_2pour_lbf)),
        "source_tag": trial.source_tag,
    }
    with open(path, "w", newline="") as fh:
        for k in HEADER_KEYS:
            fh.write(f"# {k}: {header[k]}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "theta_deg", "f_lbf"])
        for i, (th, f) in enumerate(zip(trial.theta_deg, trial.f_lbf)):
            w.writerow([repr(i * CONSTANTS.dt), repr(float(th)), repr(float(f))])


def read_trial(path) -> TrialRecord:
    header: dict[str, str] = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                header[key.strip()] = value.strip()
            elif line.startswith("time_s"):
                continue
            else:
                rows.append([float(v) for v in line.split(",")[:3]])
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise ValidationError(f"{path}: missing header keys {missing}")
    if len(rows) < 2:
        raise ValidationError(f"{path}: fewer than two samples")
    data = np.asarray(rows)
    container = ContainerSpec(header["name"], float(header["H_mm"]), float(header["D_mm"]))
    return TrialRecord(
        container=container,
        f_total_lbf=float(header["f_total_lbf"]),
        f_2pour_lbf=float(header["f_2pour_lbf"]),
        theta_deg=data[:, 1],
        f_lbf=data[:, 2],
        source_tag=header["source_tag"],
    )


def write_dataset(out_dir, train, validation, prefix: str = "trial") -> Path:
    """Write every trial plus a ``manifest.csv`` with (path, split) rows."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "split"])
        i = 0
        for split, trials in (("train", train), ("validation", validation)):
            for tr in trials:
                name = f"{prefix}_{i:04d}.csv"
                write_trial(out / name, tr)
                w.writerow([name, split])
                i += 1
    return manifest


def read_manifest(path) -> tuple[list[TrialRecord], list[TrialRecord]]:
    path = Path(path)
    train, val = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            trial_path = Path(row["path"])
            if not trial_path.is_absolute():
                trial_path = path.parent / trial_path
            split = row["split"].strip()
            if split not in ("train", "validation"):
                raise ValidationError(f"unknown split {split!r} in {path}")
            (train if split == "train" else val).append(read_trial(trial_path))
    return train, val
