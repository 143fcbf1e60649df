"""Causal force-signal preprocessing: 1 kHz -> 60 Hz, median(5), trailing Gaussian(sigma=2)."""
from __future__ import annotations

import math
from collections import deque
from functools import lru_cache

import numpy as np

from ..errors import InsufficientDataError

RAW_RATE_HZ = 1000.0
MEDIAN_WINDOW = 5
GAUSS_SIGMA = 2.0


def downsample_force(f_raw, raw_rate: float = RAW_RATE_HZ, out_rate: float = 60.0) -> np.ndarray:
    """Pick the nearest raw sample for each output tick."""
    f = np.asarray(f_raw, dtype=float)
    if f.size == 0:
        raise InsufficientDataError("empty force stream")
    n_out = int(math.floor((f.size - 1) * out_rate / raw_rate)) + 1
    k = np.arange(n_out)
    # round half away from zero, not numpy's banker's rounding
    idx = np.floor(k * raw_rate / out_rate + 0.5).astype(int)
    return f[np.minimum(idx, f.size - 1)]


@lru_cache(maxsize=None)
def gaussian_weights(sigma: float, available: int) -> np.ndarray:
    """Trailing one-sided kernel; index 0 weights the newest sample."""
    width = int(4 * sigma)
    i = np.arange(min(available, width + 1), dtype=float)
    w = np.exp(-(i**2) / (2.0 * sigma**2))
    return w / w.sum()


def causal_median_filter(prefix, window: int = MEDIAN_WINDOW) -> float:
    x = np.asarray(prefix, dtype=float)
    if x.size == 0:
        raise InsufficientDataError("empty prefix")
    return float(np.median(x[-window:]))


def causal_gaussian_filter(prefix, sigma: float = GAUSS_SIGMA) -> float:
    x = np.asarray(prefix, dtype=float)
    if x.size == 0:
        raise InsufficientDataError("empty prefix")
    w = gaussian_weights(sigma, x.size)
    return float(np.dot(w, x[::-1][: w.size]))


class StreamingForceFilter:
    """Online median -> Gaussian chain. One instance per pour."""

    def __init__(self, window: int = MEDIAN_WINDOW, sigma: float = GAUSS_SIGMA):
        self.window = window
        self.sigma = sigma
        self._raw = deque(maxlen=window)
        self._med = deque(maxlen=int(4 * sigma) + 1)

    def reset(self) -> None:
        self._raw.clear()
        self._med.clear()

    def update(self, f_raw: float) -> float:
        self._raw.append(float(f_raw))
        self._med.appendleft(float(np.median(self._raw)))
        w = gaussian_weights(self.sigma, len(self._med))
        return float(np.dot(w, self._med))


def filter_force_series(f: np.ndarray, window: int = MEDIAN_WINDOW, sigma: float = GAUSS_SIGMA) -> np.ndarray:
    """Apply the streaming chain to a whole 60 Hz series."""
    flt = StreamingForceFilter(window, sigma)
    return np.array([flt.update(v) for v in np.asarray(f, dtype=float)])
