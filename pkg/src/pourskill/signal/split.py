from __future__ import annotations

import numpy as np

from ..errors import InsufficientDataError

DEMO_TRAIN_RATIO = 221 / 284


def split_dataset(trials, rng: np.random.Generator, ratio: float = DEMO_TRAIN_RATIO):
    """Seeded shuffle into (train, validation); train takes the rounded share."""
    trials = list(trials)
    if len(trials) < 10:
        raise InsufficientDataError("need at least 10 trials to split")
    n_train = int(np.floor(len(trials) * ratio + 0.5))
    order = rng.permutation(len(trials))
    return [trials[i] for i in order[:n_train]], [trials[i] for i in order[n_train:]]
