"""Numpy implementations of the hot loops.

Each function has the same signature and semantics as its counterpart in
the compiled ``_kernels`` module; ``tests/test_kernels.py`` checks that
the two agree.
"""

import numpy as np
from scipy.signal import lfilter

TWO_PI = 2.0 * np.pi


def gate_on_grid(switch_times, initial_bright, n0, dt, n):
    t = (n0 + np.arange(n, dtype=np.int64)) * dt
    flips = np.searchsorted(switch_times, t, side="right")
    return ((int(initial_bright) ^ (flips & 1)) & 1).astype(np.uint8)


def bright_time_in_bins(switch_times, initial_bright, bin_width, n):
    s = np.asarray(switch_times, dtype=np.float64)
    points = np.concatenate(([0.0], s))
    states = (int(initial_bright) ^ (np.arange(points.size) & 1)).astype(np.float64)
    bcum = np.empty(points.size)
    bcum[0] = 0.0
    if s.size:
        bcum[1:] = np.cumsum(states[:-1] * np.diff(points))
    edges = np.arange(1, n + 1, dtype=np.int64) * bin_width
    j = np.searchsorted(s, edges, side="right")
    b = bcum[j] + states[j] * (edges - points[j])
    return np.diff(b, prepend=0.0)


def single_pole(u, alpha):
    u = np.asarray(u, dtype=np.float64)
    if u.size == 0:
        return np.empty(0)
    y, _ = lfilter([alpha], [1.0, alpha - 1.0], u, zi=[(1.0 - alpha) * u[0]])
    return y


def hysteresis(values, low, high, initial):
    v = np.asarray(values, dtype=np.float64)
    decided = np.full(v.size, -1, dtype=np.int64)
    decided[v > high] = 1
    decided[v < low] = 0
    idx = np.where(decided >= 0, np.arange(v.size), -1)
    last = np.maximum.accumulate(idx) if v.size else idx
    out = np.where(last >= 0, decided[np.maximum(last, 0)], initial)
    return out.astype(np.uint8)


def add_gated_tone(out, gate, n0, ratio, phase0, amplitude, walk):
    n = out.shape[0]
    phase = TWO_PI * np.mod((n0 + np.arange(n, dtype=np.int64)) * ratio, 1.0) + phase0
    if walk is not None:
        phase = phase + walk
    out += np.where(gate.astype(bool), amplitude * np.cos(phase), 0.0)


def mix_boxcar(x, n0, ratio, factor):
    n = (x.shape[0] // factor) * factor
    phase = TWO_PI * np.mod((n0 + np.arange(n, dtype=np.int64)) * ratio, 1.0)
    z = x[:n] * np.exp(-1j * phase)
    return z.reshape(-1, factor).sum(axis=1) * (np.sqrt(2.0) / factor)
