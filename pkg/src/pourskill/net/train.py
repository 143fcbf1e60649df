"""Mini-batch BPTT training with best-validation model selection."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientDataError, TrainingFailureError
from ..signal.features import NormalizerStats, fit_normalizer, trial_arrays
from .adam import AdamState, adam_step
from .checkpoint import Hyper, ModelCheckpoint
from .lstm import Network, loss_and_grads, predict, sequence_loss

log = logging.getLogger(__name__)


def pack(arrays: list[tuple[np.ndarray, np.ndarray]]):
    """Stack per-trial (X, y) pairs into zero-padded time-major batches."""
    lengths = np.array([len(y) for _, y in arrays])
    T, B, d = lengths.max(), len(arrays), arrays[0][0].shape[1]
    X = np.zeros((T, B, d))
    Y = np.zeros((T, B))
    for b, (x, y) in enumerate(arrays):
        X[: len(y), b] = x
        Y[: len(y), b] = y
    return X, Y, lengths


def evaluate_loss(net: Network, packed) -> float:
    X, Y, lengths = packed
    return sequence_loss(predict(net, X), Y, lengths)[0]


@dataclass
class TrainResult:
    checkpoint: ModelCheckpoint
    curve: list[tuple[int, float, float]] = field(default_factory=list)
    best_epoch: int = 0

    def write_curve(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "val_loss"])
            for e, tl, vl in self.curve:
                w.writerow([e, repr(tl), repr(vl)])


def run_epochs(net: Network, train_arrays, val_arrays, hyper: Hyper, rng: np.random.Generator,
               select_best: bool = True):
    """Optimize ``net`` in place. Returns (best_net, curve, best_epoch).

    The curve's epoch 0 holds the losses of the starting parameters. Without
    validation data (or with ``select_best`` off) the final epoch is returned.
    """
    train_packed = pack(train_arrays)
    val_packed = pack(val_arrays) if val_arrays else None
    use_val = select_best and val_packed is not None

    def losses(model):
        tl = evaluate_loss(model, train_packed)
        vl = evaluate_loss(model, val_packed) if val_packed is not None else float("nan")
        return tl, vl

    tl, vl = losses(net)
    curve = [(0, tl, vl)]
    best, best_val, best_epoch = net.copy(), vl, 0
    opt = AdamState()
    params = net.named_arrays()
    n = len(train_arrays)
    for epoch in range(1, hyper.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            X, Y, lengths = pack([train_arrays[k] for k in order[start:start + hyper.batch_size]])
            loss, grads = loss_and_grads(net, X, Y, lengths, hyper.keep_prob, rng, training=True)
            if not np.isfinite(loss):
                raise TrainingFailureError(f"loss diverged at epoch {epoch}", last_good=best)
            try:
                adam_step(params, grads.named_arrays(), opt, hyper.lr)
            except TrainingFailureError as exc:
                raise TrainingFailureError(str(exc), last_good=best, param_name=exc.param_name) from exc
        tl, vl = losses(net)
        if not np.isfinite(tl):
            raise TrainingFailureError(f"train loss diverged at epoch {epoch}", last_good=best)
        curve.append((epoch, tl, vl))
        if use_val and vl < best_val:
            best, best_val, best_epoch = net.copy(), vl, epoch
        if epoch % 50 == 0:
            log.info("epoch %d train %.5f val %.5f", epoch, tl, vl)
    if not use_val:
        best, best_epoch = net.copy(), hyper.epochs
    return best, curve, best_epoch


def train(train_trials, val_trials, hyper: Hyper = Hyper(), normalizer: NormalizerStats | None = None,
          label: str = "M0") -> TrainResult:
    """Train a fresh network on demonstration trials.

    The normalizer is fitted on the training split unless one is supplied.
    """
    train_trials, val_trials = list(train_trials), list(val_trials)
    if not train_trials or not val_trials:
        raise InsufficientDataError("training needs non-empty train and validation splits")
    stats = normalizer or fit_normalizer(train_trials)
    rng = np.random.default_rng(hyper.seed)
    net = Network.init(d=6, n=hyper.n_units, n_layers=hyper.n_layers, seed=hyper.seed)
    train_arrays = [trial_arrays(t, stats) for t in train_trials]
    val_arrays = [trial_arrays(t, stats) for t in val_trials]
    best, curve, best_epoch = run_epochs(net, train_arrays, val_arrays, hyper, rng)
    notes = {
        "output_normalized": True,
        "best_epoch": best_epoch,
        "n_train": len(train_trials),
        "n_val": len(val_trials),
    }
    return TrainResult(ModelCheckpoint(best, stats, hyper, [label], notes), curve, best_epoch)
