"""Peephole LSTM network with a linear head, forward pass and exact BPTT.

Gate pre-activations use the concatenation [h(t-1), x(t)]: the first ``n``
columns of each ``W_*`` act on the previous hidden state. The input and
forget gates peek at c(t-1); the output gate peeks at the new c(t).
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from ..errors import DimensionError, NumericError
from . import _kernels

GATES = ("i", "f", "g", "o")

# "numba" runs the time loops compiled; "numpy" is the plain reference path
BACKEND = "numba"


def sigm(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class LstmParams:
    W_i: np.ndarray
    W_f: np.ndarray
    W_g: np.ndarray
    W_o: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_g: np.ndarray
    b_o: np.ndarray
    p_i: np.ndarray
    p_f: np.ndarray
    p_o: np.ndarray

    @property
    def n(self) -> int:
        return self.W_i.shape[0]

    @property
    def d(self) -> int:
        return self.W_i.shape[1] - self.W_i.shape[0]

    @classmethod
    def zeros(cls, n: int, d: int) -> "LstmParams":
        kw = {}
        for f in fields(cls):
            kw[f.name] = np.zeros((n, n + d)) if f.name.startswith("W") else np.zeros(n)
        return cls(**kw)

    @classmethod
    def init(cls, n: int, d: int, rng: np.random.Generator, forget_bias: float = 1.0) -> "LstmParams":
        s = 1.0 / np.sqrt(n + d)
        p = cls.zeros(n, d)
        for g in GATES:
            setattr(p, f"W_{g}", rng.uniform(-s, s, size=(n, n + d)))
        p.b_f[:] = forget_bias
        return p

    def arrays(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def check(self) -> None:
        n, d = self.n, self.d
        for name, a in self.arrays().items():
            want = (n, n + d) if name.startswith("W") else (n,)
            if a.shape != want:
                raise DimensionError(f"{name} has shape {a.shape}, expected {want}")

    def stacked(self):
        """(W_h^T, W_x^T, b) with gate blocks laid out i|f|g|o."""
        n = self.n
        W = np.concatenate([self.W_i, self.W_f, self.W_g, self.W_o], axis=0)
        b = np.concatenate([self.b_i, self.b_f, self.b_g, self.b_o])
        return np.ascontiguousarray(W[:, :n].T), np.ascontiguousarray(W[:, n:].T), b


@dataclass
class HeadParams:
    W_y: np.ndarray  # (1, n)
    b_y: np.ndarray  # (1,)

    @classmethod
    def zeros(cls, n: int) -> "HeadParams":
        return cls(np.zeros((1, n)), np.zeros(1))

    @classmethod
    def init(cls, n: int, rng: np.random.Generator) -> "HeadParams":
        s = 1.0 / np.sqrt(n)
        return cls(rng.uniform(-s, s, size=(1, n)), np.zeros(1))

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W_y": self.W_y, "b_y": self.b_y}


@dataclass
class Network:
    layers: list[LstmParams]
    head: HeadParams

    @classmethod
    def init(cls, d: int = 6, n: int = 16, n_layers: int = 1, seed: int = 0) -> "Network":
        rng = np.random.default_rng(seed)
        layers = [LstmParams.init(n, d if k == 0 else n, rng) for k in range(n_layers)]
        return cls(layers, HeadParams.init(n, rng))

    @classmethod
    def zeros(cls, d: int = 6, n: int = 16, n_layers: int = 1) -> "Network":
        return cls([LstmParams.zeros(n, d if k == 0 else n) for k in range(n_layers)], HeadParams.zeros(n))

    @property
    def n(self) -> int:
        return self.layers[0].n

    @property
    def d(self) -> int:
        return self.layers[0].d

    def named_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for k, layer in enumerate(self.layers):
            for name, a in layer.arrays().items():
                out[f"layer{k}.{name}"] = a
        for name, a in self.head.arrays().items():
            out[f"head.{name}"] = a
        return out

    def copy(self) -> "Network":
        layers = [LstmParams(**{k: v.copy() for k, v in lp.arrays().items()}) for lp in self.layers]
        return Network(layers, HeadParams(self.head.W_y.copy(), self.head.b_y.copy()))

    def zeros_like(self) -> "Network":
        layers = [LstmParams(**{k: np.zeros_like(v) for k, v in lp.arrays().items()}) for lp in self.layers]
        return Network(layers, HeadParams(np.zeros_like(self.head.W_y), np.zeros_like(self.head.b_y)))

    def num_params(self) -> int:
        return sum(a.size for a in self.named_arrays().values())


def cell_forward(x, h_prev, c_prev, params: LstmParams):
    """One peephole-LSTM step. Works on single vectors or (B, .) batches."""
    x = np.asarray(x, dtype=float)
    h_prev = np.asarray(h_prev, dtype=float)
    c_prev = np.asarray(c_prev, dtype=float)
    n, d = params.n, params.d
    if x.shape[-1] != d or h_prev.shape[-1] != n or c_prev.shape[-1] != n:
        raise DimensionError(f"cell expects x[..,{d}], h/c[..,{n}]; got {x.shape}, {h_prev.shape}, {c_prev.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(h_prev)) and np.all(np.isfinite(c_prev))):
        raise NumericError("non-finite input to LSTM cell")
    hx = np.concatenate([h_prev, x], axis=-1)
    i = sigm(hx @ params.W_i.T + params.b_i + params.p_i * c_prev)
    f = sigm(hx @ params.W_f.T + params.b_f + params.p_f * c_prev)
    g = np.tanh(hx @ params.W_g.T + params.b_g)
    c = f * c_prev + i * g
    o = sigm(hx @ params.W_o.T + params.b_o + params.p_o * c)
    tc = np.tanh(c)
    h = o * tc
    cache = {"hx": hx, "c_prev": c_prev, "i": i, "f": f, "g": g, "o": o, "c": c, "tc": tc}
    return h, c, cache


def dropout_mask(shape, keep_prob: float, rng: np.random.Generator | None, training: bool) -> np.ndarray | None:
    """Inverted-dropout scale mask, or None when dropout is a no-op."""
    if not 0.0 < keep_prob <= 1.0:
        raise ValueError(f"keep_prob must lie in (0, 1], got {keep_prob}")
    if not training or keep_prob == 1.0:
        return None
    return (rng.random(shape) < keep_prob) / keep_prob


def dropout(h, keep_prob: float, rng: np.random.Generator | None = None, training: bool = False):
    mask = dropout_mask(np.shape(h), keep_prob, rng, training)
    return np.asarray(h, dtype=float) if mask is None else h * mask


@dataclass
class _LayerCache:
    X: np.ndarray
    h: np.ndarray  # (T+1, B, n), h[0] = 0
    c: np.ndarray  # (T+1, B, n)
    gates: np.ndarray  # (4, T, B, n) in i, f, g, o order
    tc: np.ndarray  # tanh(c(t)), (T, B, n)
    mask: np.ndarray | None  # dropout applied to this layer's output


@dataclass
class ForwardCache:
    layers: list[_LayerCache] = field(default_factory=list)
    top: np.ndarray | None = None  # dropped-out top hidden states (T, B, n)


def _layer_forward_numpy(X: np.ndarray, p: LstmParams) -> _LayerCache:
    T, B, _ = X.shape
    n = p.n
    Wh, Wx, b = p.stacked()
    Zx = X @ Wx + b
    h = np.zeros((T + 1, B, n))
    c = np.zeros((T + 1, B, n))
    gates = np.empty((4, T, B, n))
    tcs = np.empty((T, B, n))
    p_i, p_f, p_o = p.p_i, p.p_f, p.p_o
    for t in range(T):
        z = Zx[t] + h[t] @ Wh
        cp = c[t]
        i = sigm(z[:, :n] + p_i * cp)
        f = sigm(z[:, n:2 * n] + p_f * cp)
        g = np.tanh(z[:, 2 * n:3 * n])
        ct = f * cp + i * g
        o = sigm(z[:, 3 * n:] + p_o * ct)
        tc = np.tanh(ct)
        c[t + 1] = ct
        h[t + 1] = o * tc
        gates[0, t], gates[1, t], gates[2, t], gates[3, t] = i, f, g, o
        tcs[t] = tc
    return _LayerCache(X, h, c, gates, tcs, None)


def sequence_forward(net: Network, X: np.ndarray, keep_prob: float = 1.0,
                     rng: np.random.Generator | None = None, training: bool = False):
    """Run the network over time-major inputs X (T, B, d). Returns (yhat (T, B), cache).

    h(0) = c(0) = 0 for every sequence; sequences never share state.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[:, None, :]
    if X.shape[-1] != net.d:
        raise DimensionError(f"inputs have {X.shape[-1]} features, network expects {net.d}")
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite network input")
    cache = ForwardCache()
    inp = X
    for p in net.layers:
        lc = _layer_forward(inp, p)
        lc.mask = dropout_mask(lc.h[1:].shape, keep_prob, rng, training)
        out = lc.h[1:] if lc.mask is None else lc.h[1:] * lc.mask
        cache.layers.append(lc)
        inp = out
    cache.top = inp
    yhat = inp @ net.head.W_y[0] + net.head.b_y[0]
    return yhat, cache


def predict(net: Network, X: np.ndarray) -> np.ndarray:
    """Inference-mode outputs (T, B) without keeping a backward cache."""
    if BACKEND == "numpy":
        return sequence_forward(net, X)[0]
    inp = np.ascontiguousarray(X, dtype=float)
    for p in net.layers:
        Wh, Wx, b = p.stacked()
        inp = _kernels.lstm_forward_lean(inp, Wx, Wh, b, p.p_i, p.p_f, p.p_o)
    return inp @ net.head.W_y[0] + net.head.b_y[0]


def sequence_loss(yhat: np.ndarray, Y: np.ndarray, lengths: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean over sequences of each sequence's mean squared error.

    Y is (T, B) and only the first ``lengths[b]`` steps of column b count.
    Returns the loss and dL/dyhat.
    """
    T, B = yhat.shape
    valid = np.arange(T)[:, None] < lengths[None, :]
    w = valid / (lengths[None, :] * B)
    r = np.where(valid, yhat - Y, 0.0)
    return float(np.sum(w * r * r)), 2.0 * w * r


def _layer_forward(X: np.ndarray, p: LstmParams) -> _LayerCache:
    if BACKEND == "numpy":
        return _layer_forward_numpy(X, p)
    Wh, Wx, b = p.stacked()
    h, c, gates, tc = _kernels.lstm_forward(X @ Wx + b, Wh, p.p_i, p.p_f, p.p_o)
    return _LayerCache(X, h, c, gates, tc, None)


def _layer_backward(dH: np.ndarray, lc: _LayerCache, p: LstmParams, grads: LstmParams) -> np.ndarray:
    T, B, n = dH.shape
    Wh, Wx, _ = p.stacked()
    if BACKEND == "numpy":
        dZ, dp_i, dp_f, dp_o = _recurrent_backward_numpy(dH, lc, p, Wh)
    else:
        dZ, dp_i, dp_f, dp_o = _kernels.lstm_backward(np.ascontiguousarray(dH), lc.c, lc.gates, lc.tc, Wh,
                                                      p.p_i, p.p_f, p.p_o)
    dZ2 = dZ.reshape(T * B, 4 * n)
    dWh = dZ2.T @ lc.h[:-1].reshape(T * B, n)  # (4n, n)
    dWx = dZ2.T @ lc.X.reshape(T * B, -1)  # (4n, d)
    db = dZ2.sum(axis=0)
    dW = np.concatenate([dWh, dWx], axis=1)
    for k, gname in enumerate(GATES):
        getattr(grads, f"W_{gname}")[...] += dW[k * n:(k + 1) * n]
        getattr(grads, f"b_{gname}")[...] += db[k * n:(k + 1) * n]
    grads.p_i += dp_i
    grads.p_f += dp_f
    grads.p_o += dp_o
    return dZ @ Wx.T  # dL/dX (T, B, d)


def _recurrent_backward_numpy(dH, lc, p, Wh):
    T, B, n = dH.shape
    WhT = np.ascontiguousarray(Wh.T)
    dZ = np.empty((T, B, 4 * n))
    dh_next = np.zeros((B, n))
    dc_next = np.zeros((B, n))
    p_i, p_f, p_o = p.p_i, p.p_f, p.p_o
    dp_i = np.zeros(n)
    dp_f = np.zeros(n)
    dp_o = np.zeros(n)
    for t in range(T - 1, -1, -1):
        i, f, g, o = lc.gates[:, t]
        tc = lc.tc[t]
        cp, ct = lc.c[t], lc.c[t + 1]
        dh = dH[t] + dh_next
        dzo = dh * tc * o * (1.0 - o)
        dc = dc_next + dh * o * (1.0 - tc * tc) + dzo * p_o
        dzi = dc * g * i * (1.0 - i)
        dzf = dc * cp * f * (1.0 - f)
        dzg = dc * i * (1.0 - g * g)
        dp_i += np.einsum("bn,bn->n", dzi, cp)
        dp_f += np.einsum("bn,bn->n", dzf, cp)
        dp_o += np.einsum("bn,bn->n", dzo, ct)
        dc_next = dc * f + dzi * p_i + dzf * p_f
        dz = dZ[t]
        dz[:, :n] = dzi
        dz[:, n:2 * n] = dzf
        dz[:, 2 * n:3 * n] = dzg
        dz[:, 3 * n:] = dzo
        dh_next = dz @ WhT
    return dZ, dp_i, dp_f, dp_o


def backward(net: Network, cache: ForwardCache, dyhat: np.ndarray) -> Network:
    """Full (untruncated) BPTT. Returns gradients shaped like ``net``."""
    if cache is None or not cache.layers:
        raise RuntimeError("backward called without a forward cache")
    grads = net.zeros_like()
    top = cache.top
    grads.head.W_y[0] = np.einsum("tb,tbn->n", dyhat, top)
    grads.head.b_y[0] = dyhat.sum()
    dX = dyhat[:, :, None] * net.head.W_y[0]
    for k in range(len(net.layers) - 1, -1, -1):
        lc = cache.layers[k]
        dH = dX if lc.mask is None else dX * lc.mask
        dX = _layer_backward(dH, lc, net.layers[k], grads.layers[k])
    return grads


def loss_and_grads(net: Network, X: np.ndarray, Y: np.ndarray, lengths: np.ndarray,
                   keep_prob: float = 1.0, rng: np.random.Generator | None = None,
                   training: bool = False) -> tuple[float, Network]:
    yhat, cache = sequence_forward(net, X, keep_prob, rng, training)
    loss, dy = sequence_loss(yhat, Y, lengths)
    return loss, backward(net, cache, dy)


class StepState:
    """Per-pour recurrent state for step-by-step inference (dropout off)."""

    def __init__(self, net: Network):
        self.net = net
        self.reset()

    def reset(self) -> None:
        self.h = [np.zeros(p.n) for p in self.net.layers]
        self.c = [np.zeros(p.n) for p in self.net.layers]

    def step(self, x: np.ndarray) -> float:
        inp = x
        for k, p in enumerate(self.net.layers):
            self.h[k], self.c[k], _ = cell_forward(inp, self.h[k], self.c[k], p)
            inp = self.h[k]
        return float(inp @ self.net.head.W_y[0] + self.net.head.b_y[0])
