# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Signatures mirror ``qjfluor._fallback`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, floor, sqrt, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI


cdef inline double _frac(double x) nogil:
    # exact fractional part for x >= 0 (same value as fmod(x, 1.0), but
    # without fmod's cost growing with the exponent of x)
    return x - floor(x)


def gate_on_grid(const double[::1] switch_times, bint initial_bright,
                 long long n0, double dt, Py_ssize_t n):
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out = np.empty(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] o = out
    cdef Py_ssize_t k, j = 0, m = switch_times.shape[0]
    cdef double t
    cdef int state
    if n == 0:
        return out
    t = (n0) * dt
    while j < m and switch_times[j] <= t:
        j += 1
    state = (<int>initial_bright) ^ (j & 1)
    for k in range(n):
        t = (n0 + k) * dt
        while j < m and switch_times[j] <= t:
            j += 1
            state ^= 1
        o[k] = state
    return out


def bright_time_in_bins(const double[::1] switch_times, bint initial_bright,
                        double bin_width, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t k, j = 0, m = switch_times.shape[0]
    cdef double edge, prev_b, b, p_j = 0.0, bcum = 0.0
    cdef int state = <int>initial_bright
    prev_b = 0.0
    for k in range(n):
        edge = (k + 1) * bin_width
        while j < m and switch_times[j] <= edge:
            if state:
                bcum = bcum + (switch_times[j] - p_j)
            p_j = switch_times[j]
            state ^= 1
            j += 1
        b = bcum + state * (edge - p_j)
        o[k] = b - prev_b
        prev_b = b
    return out


def single_pole(const double[::1] u, double alpha):
    cdef Py_ssize_t k, n = u.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    cdef double beta = 1.0 - alpha
    if n == 0:
        return out
    y[0] = u[0]
    for k in range(1, n):
        y[k] = alpha * u[k] + beta * y[k - 1]
    return out


def hysteresis(const double[::1] values, double low, double high, int initial):
    cdef Py_ssize_t k, n = values.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out = np.empty(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] o = out
    cdef int state = initial
    cdef double v
    for k in range(n):
        v = values[k]
        if v > high:
            state = 1
        elif v < low:
            state = 0
        o[k] = state
    return out


cdef Py_ssize_t ANCHOR = 1024


cdef (double, double) _phasor_at(long long idx, double ratio, double phase0,
                                 double step_c, double step_s):
    """Phasor at ``idx`` as the recurrence reaches it from the previous
    anchor, so results do not depend on where a chunk starts."""
    cdef long long base = idx - idx % ANCHOR
    cdef double phase = TWO_PI * _frac(base * ratio) + phase0
    cdef double c = cos(phase), s = sin(phase), tmp
    cdef long long j
    for j in range(idx - base):
        tmp = c * step_c - s * step_s
        s = s * step_c + c * step_s
        c = tmp
    return c, s


def add_gated_tone(double[::1] out, const cnp.uint8_t[::1] gate, long long n0,
                   double ratio, double phase0, double amplitude, walk):
    cdef Py_ssize_t k, n = out.shape[0]
    cdef const double[::1] w
    cdef double phase, c = 1.0, s = 0.0, tmp
    cdef double step_c = cos(TWO_PI * ratio), step_s = sin(TWO_PI * ratio)
    if walk is not None:
        w = walk
        for k in range(n):
            if gate[k]:
                phase = TWO_PI * _frac((n0 + k) * ratio) + phase0 + w[k]
                out[k] += amplitude * cos(phase)
        return
    # phasor recurrence, re-anchored exactly at absolute multiples of ANCHOR
    c, s = _phasor_at(n0, ratio, phase0, step_c, step_s)
    for k in range(n):
        if (n0 + k) % ANCHOR == 0:
            phase = TWO_PI * _frac((n0 + k) * ratio) + phase0
            c = cos(phase)
            s = sin(phase)
        if gate[k]:
            out[k] += amplitude * c
        tmp = c * step_c - s * step_s
        s = s * step_c + c * step_s
        c = tmp


def mix_boxcar(const double[::1] x, long long n0, double ratio, Py_ssize_t factor):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m_out = n // factor
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(m_out, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t m, j, idx
    cdef double re, im, phase, c = 1.0, s = 0.0, tmp, scale = sqrt(2.0) / factor
    cdef double step_c = cos(TWO_PI * ratio), step_s = sin(TWO_PI * ratio)
    c, s = _phasor_at(n0, ratio, 0.0, step_c, step_s)
    for m in range(m_out):
        re = 0.0
        im = 0.0
        for j in range(factor):
            idx = m * factor + j
            if (n0 + idx) % ANCHOR == 0:
                phase = TWO_PI * _frac((n0 + idx) * ratio)
                c = cos(phase)
                s = sin(phase)
            re += x[idx] * c
            im -= x[idx] * s
            tmp = c * step_c - s * step_s
            s = s * step_c + c * step_s
            c = tmp
        o[m] = (re * scale) + 1j * (im * scale)
    return out
