"""Compiled recurrences for the peephole LSTM (time loop only; big matmuls stay in numpy)."""
import math

import numpy as np
from numba import njit


# libm tanh is ~4x slower than exp under numba; both forms saturate cleanly at +-inf
@njit(cache=True, inline="always")
def _sigm(z):
    return 1.0 / (1.0 + math.exp(-z))


@njit(cache=True, inline="always")
def _tanh(z):
    return 2.0 / (1.0 + math.exp(-2.0 * z)) - 1.0


@njit(cache=True)
def lstm_forward(Zx, Wh, p_i, p_f, p_o):
    T, B, n4 = Zx.shape
    n = n4 // 4
    h = np.zeros((T + 1, B, n))
    c = np.zeros((T + 1, B, n))
    gates = np.empty((4, T, B, n))
    tc = np.empty((T, B, n))
    for t in range(T):
        zt = Zx[t] + h[t] @ Wh
        for b in range(B):
            z = zt[b]
            for u in range(n):
                cp = c[t, b, u]
                ig = _sigm(z[u] + p_i[u] * cp)
                fg = _sigm(z[n + u] + p_f[u] * cp)
                gg = _tanh(z[2 * n + u])
                ct = fg * cp + ig * gg
                og = _sigm(z[3 * n + u] + p_o[u] * ct)
                tct = _tanh(ct)
                c[t + 1, b, u] = ct
                h[t + 1, b, u] = og * tct
                gates[0, t, b, u] = ig
                gates[1, t, b, u] = fg
                gates[2, t, b, u] = gg
                gates[3, t, b, u] = og
                tc[t, b, u] = tct
    return h, c, gates, tc


@njit(cache=True)
def lstm_backward(dH, c, gates, tc, Wh, p_i, p_f, p_o):
    T, B, n = dH.shape
    n4 = 4 * n
    dZ = np.empty((T, B, n4))
    dh_next = np.zeros((B, n))
    dc_next = np.zeros((B, n))
    dp_i = np.zeros(n)
    dp_f = np.zeros(n)
    dp_o = np.zeros(n)
    for t in range(T - 1, -1, -1):
        for b in range(B):
            for u in range(n):
                ig = gates[0, t, b, u]
                fg = gates[1, t, b, u]
                gg = gates[2, t, b, u]
                og = gates[3, t, b, u]
                tct = tc[t, b, u]
                cp = c[t, b, u]
                ct = c[t + 1, b, u]
                dh = dH[t, b, u] + dh_next[b, u]
                dzo = dh * tct * og * (1.0 - og)
                dc = dc_next[b, u] + dh * og * (1.0 - tct * tct) + dzo * p_o[u]
                dzi = dc * gg * ig * (1.0 - ig)
                dzf = dc * cp * fg * (1.0 - fg)
                dzg = dc * ig * (1.0 - gg * gg)
                dp_i[u] += dzi * cp
                dp_f[u] += dzf * cp
                dp_o[u] += dzo * ct
                dc_next[b, u] = dc * fg + dzi * p_i[u] + dzf * p_f[u]
                dZ[t, b, u] = dzi
                dZ[t, b, n + u] = dzf
                dZ[t, b, 2 * n + u] = dzg
                dZ[t, b, 3 * n + u] = dzo
            for j in range(n):
                s = 0.0
                for k in range(n4):
                    s += dZ[t, b, k] * Wh[j, k]
                dh_next[b, j] = s
    return dZ, dp_i, dp_f, dp_o


@njit(cache=True)
def lstm_forward_lean(X, Wx, Wh, b, p_i, p_f, p_o):
    """Hidden states only; no backward cache."""
    T, B, _ = X.shape
    n = Wh.shape[0]
    H = np.empty((T, B, n))
    h = np.zeros((B, n))
    c = np.zeros((B, n))
    for t in range(T):
        zt = X[t] @ Wx + h @ Wh
        for bb in range(B):
            for u in range(n):
                cp = c[bb, u]
                ig = _sigm(zt[bb, u] + b[u] + p_i[u] * cp)
                fg = _sigm(zt[bb, n + u] + b[n + u] + p_f[u] * cp)
                gg = _tanh(zt[bb, 2 * n + u] + b[2 * n + u])
                ct = fg * cp + ig * gg
                og = _sigm(zt[bb, 3 * n + u] + b[3 * n + u] + p_o[u] * ct)
                c[bb, u] = ct
                h[bb, u] = og * _tanh(ct)
        H[t] = h
    return H
