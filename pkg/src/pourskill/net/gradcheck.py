"""Central finite-difference check of the analytic BPTT gradients."""
from __future__ import annotations

import numpy as np

from .lstm import Network, backward, sequence_forward, sequence_loss


def gradient_check(seed: int, n: int = 8, d: int = 6, T: int = 20, batch: int = 3, n_layers: int = 1,
                   keep_prob: float = 1.0, h: float = 1e-5, scale: float = 0.5) -> float:
    """Largest relative error between BPTT and central differences over every parameter.

    Parameters are drawn from N(0, scale^2) so that the peepholes and biases are
    exercised too. With ``keep_prob < 1`` the same dropout masks are replayed for
    every loss evaluation.
    """
    rng = np.random.default_rng(seed)
    net = Network.init(d, n, n_layers, seed)
    for a in net.named_arrays().values():
        a[...] = rng.normal(0.0, scale, a.shape)
    X = rng.normal(size=(T, batch, d))
    Y = rng.normal(size=(T, batch))
    lengths = np.maximum(1, T - 5 * np.arange(batch))
    mask_seed = int(rng.integers(2**31))
    training = keep_prob < 1.0

    def loss_and_cache():
        yhat, cache = sequence_forward(net, X, keep_prob, np.random.default_rng(mask_seed), training)
        return sequence_loss(yhat, Y, lengths), cache

    (loss, dy), cache = loss_and_cache()
    analytic = backward(net, cache, dy).named_arrays()
    worst = 0.0
    for name, a in net.named_arrays().items():
        for idx in np.ndindex(a.shape):
            old = a[idx]
            a[idx] = old + h
            lp = loss_and_cache()[0][0]
            a[idx] = old - h
            lm = loss_and_cache()[0][0]
            a[idx] = old
            num = (lp - lm) / (2 * h)
            ana = analytic[name][idx]
            worst = max(worst, abs(num - ana) / max(abs(num), abs(ana), 1e-7))
    return worst
