"""Photon-count records and the low-pass intensity signal path."""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = [
    "DetectionParams",
    "CountTrace",
    "IntensityTrace",
    "synthesize_counts",
    "low_pass",
    "RATE_BRIGHT_171",
    "RATE_BRIGHT_172",
    "DEFAULT_STRAY_RATE",
]

#: Maximum detected count rates (1/s) for single 171Yb+ and 172Yb+ ions.
RATE_BRIGHT_171 = 3.5e4
RATE_BRIGHT_172 = 9.0e4
#: Stray light plus dark-pulse rate (1/s). Free parameter, not measured.
DEFAULT_STRAY_RATE = 500.0


@dataclass(frozen=True)
class DetectionParams:
    rate_bright: float = RATE_BRIGHT_171
    rate_stray: float = DEFAULT_STRAY_RATE
    bin_width: float = 1e-3

    def __post_init__(self):
        if not (math.isfinite(self.rate_bright) and self.rate_bright >= 0):
            raise ValueError("rate_bright must be >= 0")
        if not (math.isfinite(self.rate_stray) and self.rate_stray >= 0):
            raise ValueError("rate_stray must be >= 0")
        if not (math.isfinite(self.bin_width) and self.bin_width > 0):
            raise ValueError("bin_width must be > 0")


@dataclass(frozen=True, eq=False)
class CountTrace:
    bin_width: float
    counts: np.ndarray
    origin_time: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 1:
            raise ValueError("counts must be one-dimensional")
        if c.size and (not np.issubdtype(c.dtype, np.integer)):
            if np.any(c != np.round(c)):
                raise ValueError("counts must be integers")
        c = c.astype(np.int64)
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def duration(self):
        return self.counts.size * self.bin_width

    @property
    def times(self):
        return self.origin_time + np.arange(self.counts.size) * self.bin_width


@dataclass(frozen=True, eq=False)
class IntensityTrace:
    """Filtered count rate (counts/s) sampled every ``sample_period``."""

    sample_period: float
    values: np.ndarray
    origin_time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def duration(self):
        return self.values.size * self.sample_period

    @property
    def times(self):
        return self.origin_time + np.arange(self.values.size) * self.sample_period


def synthesize_counts(traj, det, seed):
    """Poisson photon counts per bin for the gated emitter.

    The mean count in each bin is ``rate_stray * bin_width + rate_bright *
    (bright time in the bin)``, with the bright time integrated exactly
    from the switch times. Only whole bins are produced.
    """
    n = int(math.floor(traj.duration / det.bin_width + 1e-9))
    if n < 1:
        raise ValueError("trajectory is shorter than one bin")
    bright = kernels.bright_time_in_bins(traj.switch_times, traj.initial_bright, det.bin_width, n)
    lam = det.rate_stray * det.bin_width + det.rate_bright * bright
    rng = np.random.default_rng(seed)
    return CountTrace(det.bin_width, rng.poisson(lam), 0.0)


def low_pass(trace, time_constant):
    """Single-pole recursive low-pass filter of the count rate.

    ``y[n] = a x[n] / dt + (1 - a) y[n-1]`` with ``a = 1 - exp(-dt / tau)``
    and ``y[0] = x[0] / dt``; the DC gain is one.
    """
    if not (math.isfinite(time_constant) and time_constant > 0):
        raise ValueError("time_constant must be > 0")
    if trace.counts.size == 0:
        raise ValueError("empty trace")
    alpha = -math.expm1(-trace.bin_width / time_constant)
    u = trace.counts.astype(np.float64) / trace.bin_width
    y = kernels.single_pole(np.ascontiguousarray(u), alpha)
    return IntensityTrace(trace.bin_width, np.maximum(y, 0.0), trace.origin_time)
