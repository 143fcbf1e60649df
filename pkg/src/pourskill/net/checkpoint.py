"""JSON checkpoint persistence."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import CorruptCheckpointError
from ..signal.features import NormalizerStats
from .lstm import HeadParams, LstmParams, Network

FORMAT_VERSION = 1


@dataclass
class Hyper:
    keep_prob: float = 0.5
    lr: float = 0.001
    epochs: int = 2000
    seed: int = 0
    batch_size: int = 16
    n_units: int = 16
    n_layers: int = 1

    def __post_init__(self):
        if not 0.0 < self.keep_prob <= 1.0:
            raise ValueError(f"keep_prob {self.keep_prob} outside (0, 1]")


@dataclass
class ModelCheckpoint:
    net: Network
    normalizer: NormalizerStats
    hyper: Hyper = field(default_factory=Hyper)
    lineage: list[str] = field(default_factory=lambda: ["M0"])
    notes: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if not self.lineage:
            raise ValueError("lineage must not be empty")

    @property
    def label(self) -> str:
        return self.lineage[-1]

    def with_net(self, net: Network, label: str) -> "ModelCheckpoint":
        return ModelCheckpoint(net, self.normalizer, self.hyper, [*self.lineage, label], dict(self.notes))

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "lineage": list(self.lineage),
            "hyper": vars(self.hyper),
            "normalizer": self.normalizer.to_dict(),
            "notes": self.notes,
            "layers": [{k: v.tolist() for k, v in lp.arrays().items()} for lp in self.net.layers],
            "head": {k: v.tolist() for k, v in self.net.head.arrays().items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelCheckpoint":
        version = d.get("format_version")
        if version != FORMAT_VERSION:
            raise CorruptCheckpointError(f"unsupported checkpoint format_version {version!r}")
        try:
            layers = [LstmParams(**{k: np.asarray(v, dtype=float) for k, v in lp.items()}) for lp in d["layers"]]
            for lp in layers:
                lp.check()
            head = HeadParams(np.asarray(d["head"]["W_y"], dtype=float), np.asarray(d["head"]["b_y"], dtype=float))
            return cls(
                Network(layers, head),
                NormalizerStats.from_dict(d["normalizer"]),
                Hyper(**d["hyper"]),
                list(d["lineage"]),
                dict(d.get("notes", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptCheckpointError(f"malformed checkpoint: {exc}") from exc


def dumps(ckpt: ModelCheckpoint) -> str:
    return json.dumps(ckpt.to_dict(), indent=1, sort_keys=True) + "\n"


def save_checkpoint(ckpt: ModelCheckpoint, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(ckpt))


def load_checkpoint(path) -> ModelCheckpoint:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptCheckpointError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise CorruptCheckpointError(f"{path}: not a checkpoint object")
    return ModelCheckpoint.from_dict(data)
