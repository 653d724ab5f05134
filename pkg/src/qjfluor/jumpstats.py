"""Bright/dark period detection and dwell-time statistics.

Periods are found by hysteresis thresholding of a low-passed intensity
trace; dwell times above a resolvability cutoff ``t_min`` are fitted with a
truncated exponential whose maximum-likelihood estimate is simply
``mean(d) - t_min`` by memorylessness.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .telegraph import State

__all__ = [
    "ThresholdConfig",
    "Levels",
    "PeriodList",
    "DurationHistogram",
    "JumpStatsResult",
    "estimate_levels",
    "hysteresis_states",
    "detect_periods",
    "make_histogram",
    "fit_exponential",
    "ks_exponential",
    "gof_exponential",
    "analyze_jumps",
]


@dataclass(frozen=True)
class ThresholdConfig:
    """Hysteresis thresholds as fractions of the dark-to-bright span.

    With ``reference="explicit"`` the levels come from ``dark_level`` and
    ``bright_level`` (counts/s); with ``"auto"`` they are the medians of the
    two classes of an Otsu split of the value histogram, and the trace is
    declared jump-free when the classes are separated by less than
    ``min_separation`` combined robust spreads.
    """

    low_fraction: float = 0.3
    high_fraction: float = 0.7
    reference: str = "auto"
    min_duration: float = 0.005
    dark_level: float = None
    bright_level: float = None
    min_separation: float = 3.0

    def __post_init__(self):
        if not (0 < self.low_fraction < self.high_fraction < 1):
            raise ValueError("need 0 < low_fraction < high_fraction < 1")
        if self.reference not in ("auto", "explicit"):
            raise ValueError("reference must be 'auto' or 'explicit'")
        if self.reference == "explicit":
            if self.dark_level is None or self.bright_level is None:
                raise ValueError("explicit reference needs dark_level and bright_level")
            if not self.bright_level > self.dark_level:
                raise ValueError("bright_level must exceed dark_level")
        if self.min_duration < 0:
            raise ValueError("min_duration must be >= 0")

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class Levels:
    dark: float
    bright: float
    low: float
    high: float
    separation: float
    bimodal: bool


@dataclass(frozen=True, eq=False)
class PeriodList:
    states: np.ndarray
    starts: np.ndarray
    durations: np.ndarray
    trace_duration: float
    no_jumps: bool = False

    def __len__(self):
        return int(self.durations.size)

    def durations_of(self, state):
        return self.durations[self.states == State(state).value]


@dataclass(frozen=True, eq=False)
class DurationHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    t_min: float

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])


@dataclass(frozen=True)
class JumpStatsResult:
    tau_dark_hat: float
    tau_dark_sigma: float
    tau_bright_hat: float
    tau_bright_sigma: float
    n_dark: int
    n_bright: int
    ks_pvalue_dark: float
    ks_pvalue_bright: float
    t_min: float

    def to_dict(self):
        return dict(self.__dict__)


def _otsu(values, bins=256):
    counts, edges = np.histogram(values, bins=bins)
    centers = 0.5 * (edges[1:] + edges[:-1])
    w0 = np.cumsum(counts)
    w1 = w0[-1] - w0
    m0 = np.cumsum(counts * centers)
    mu0 = np.divide(m0, w0, out=np.zeros_like(m0, dtype=float), where=w0 > 0)
    mu1 = np.divide(m0[-1] - m0, w1, out=np.zeros_like(m0, dtype=float), where=w1 > 0)
    between = w0 * w1 * (mu0 - mu1) ** 2
    return edges[int(np.argmax(between)) + 1]


def _robust_spread(x):
    return 1.4826 * float(np.median(np.abs(x - np.median(x))))


def estimate_levels(trace, cfg=ThresholdConfig()):
    v = trace.values
    if v.size == 0:
        raise ValueError("empty trace")
    if cfg.reference == "explicit":
        dark, bright, sep, bimodal = cfg.dark_level, cfg.bright_level, math.inf, True
    else:
        if np.ptp(v) == 0:
            dark = bright = float(v[0])
            sep, bimodal = 0.0, False
        else:
            thr = _otsu(v)
            lo_cls, hi_cls = v[v < thr], v[v >= thr]
            if lo_cls.size == 0 or hi_cls.size == 0:
                dark = bright = float(np.median(v))
                sep, bimodal = 0.0, False
            else:
                dark, bright = float(np.median(lo_cls)), float(np.median(hi_cls))
                spread = _robust_spread(lo_cls) + _robust_spread(hi_cls)
                sep = (bright - dark) / spread if spread > 0 else math.inf
                bimodal = sep >= cfg.min_separation
    span = bright - dark
    return Levels(
        dark=dark,
        bright=bright,
        low=dark + cfg.low_fraction * span,
        high=dark + cfg.high_fraction * span,
        separation=sep,
        bimodal=bimodal,
    )


def hysteresis_states(trace, cfg=ThresholdConfig(), levels=None):
    """Per-sample bright (1) / dark (0) classification with hysteresis."""
    lv = estimate_levels(trace, cfg) if levels is None else levels
    v = np.ascontiguousarray(trace.values)
    initial = 1 if v[0] >= 0.5 * (lv.low + lv.high) else 0
    return kernels.hysteresis(v, lv.low, lv.high, initial), lv


def _merge_short(states, starts, durations, min_duration):
    out_s, out_t, out_d = [], [], []
    for s, t, d in zip(states, starts, durations):
        if out_s and (d < min_duration or s == out_s[-1]):
            out_d[-1] += d
            continue
        out_s.append(s)
        out_t.append(t)
        out_d.append(d)
    return out_s, out_t, out_d


def detect_periods(trace, cfg=ThresholdConfig()):
    """Bright and dark periods of an intensity trace.

    Switch instants are located by linear interpolation of the threshold
    crossing between samples. Periods shorter than ``cfg.min_duration`` are
    merged into their neighbours, then the first and last (censored)
    periods are dropped. A trace without detectable switching yields a
    single period flagged ``no_jumps``; in auto mode it is taken to be
    bright.
    """
    v = trace.values
    if v.size == 0:
        raise ValueError("empty trace")
    dt = trace.sample_period
    t_end = trace.origin_time + v.size * dt
    lv = estimate_levels(trace, cfg)
    if not lv.bimodal:
        state = State.BRIGHT
        if cfg.reference == "explicit" and np.median(v) < 0.5 * (lv.low + lv.high):
            state = State.DARK
        return PeriodList(
            np.array([state.value]),
            np.array([trace.origin_time]),
            np.array([v.size * dt]),
            v.size * dt,
            no_jumps=True,
        )
    st, _ = hysteresis_states(trace, cfg, lv)
    k = np.nonzero(np.diff(st.astype(np.int8)))[0] + 1
    rising = st[k] == 1
    thr = np.where(rising, lv.high, lv.low)
    v0, v1 = v[k - 1], v[k]
    frac = np.clip((thr - v0) / np.where(v1 != v0, v1 - v0, 1.0), 0.0, 1.0)
    t_switch = trace.origin_time + (k - 1 + frac) * dt
    bounds = np.concatenate(([trace.origin_time], t_switch, [t_end]))
    first = State.BRIGHT.value if st[0] else State.DARK.value
    other = State.DARK.value if st[0] else State.BRIGHT.value
    n = bounds.size - 1
    states = np.where(np.arange(n) % 2 == 0, first, other)
    s, t, d = _merge_short(states.tolist(), bounds[:-1].tolist(), np.diff(bounds).tolist(), cfg.min_duration)
    if len(s) <= 2:
        s, t, d = [], [], []
    else:
        s, t, d = s[1:-1], t[1:-1], d[1:-1]
    return PeriodList(np.array(s, dtype="<U6"), np.array(t, dtype=float), np.array(d, dtype=float), v.size * dt)


def _qualifying(periods, state, t_min):
    if isinstance(periods, PeriodList):
        d = periods.durations_of(state)
    else:
        d = np.asarray(periods, dtype=np.float64)
    return d[d >= t_min]


def make_histogram(periods, state, bin_width, t_min):
    if not bin_width > 0:
        raise ValueError("bin_width must be > 0")
    d = _qualifying(periods, state, t_min)
    if d.size == 0:
        raise ValueError(f"no {State(state).value} durations >= t_min = {t_min}")
    n_bins = int(math.floor((d.max() - t_min) / bin_width)) + 1
    edges = t_min + bin_width * np.arange(n_bins + 1)
    idx = np.floor((d - t_min) / bin_width).astype(np.int64)
    # guard against round-off placing a value on the wrong side of an edge
    idx -= d < edges[idx]
    idx += d >= edges[np.minimum(idx + 1, n_bins)]
    counts = np.bincount(np.clip(idx, 0, n_bins - 1), minlength=n_bins)
    return DurationHistogram(edges, counts, float(t_min))


def fit_exponential(periods, state, t_min):
    """Truncated-exponential MLE: ``(mean(d >= t_min) - t_min, tau / sqrt(n))``."""
    d = _qualifying(periods, state, t_min)
    if d.size < 2:
        raise ValueError(f"need at least 2 durations >= t_min, got {d.size}")
    tau = float(np.mean(d) - t_min)
    return tau, tau / math.sqrt(d.size)


def ks_exponential(x, tau):
    """Kolmogorov-Smirnov distance(s) between samples and Exponential(tau).

    ``x`` may be 1-D (one sample) or 2-D (one sample per row, with ``tau``
    broadcast per row).
    """
    one = np.ndim(x) == 1
    x = np.sort(np.atleast_2d(x), axis=1)
    n = x.shape[1]
    tau = np.asarray(tau, dtype=np.float64).reshape(-1, 1)
    F = -np.expm1(-x / tau)
    i = np.arange(1, n + 1)
    d = np.maximum((i / n - F).max(axis=1), (F - (i - 1) / n).max(axis=1))
    return float(d[0]) if one else d


def gof_exponential(periods, state, tau_hat, t_min, n_bootstrap=200, seed=0):
    """Parametric-bootstrap p-value of the KS test for exponentiality.

    Each bootstrap sample is drawn from Exponential(tau_hat) and compared to
    an exponential with its own re-estimated mean, which accounts for the
    fitted parameter.
    """
    d = _qualifying(periods, state, t_min) - t_min
    if d.size < 10:
        raise ValueError(f"need at least 10 durations for the KS test, got {d.size}")
    if not tau_hat > 0:
        raise ValueError("tau_hat must be positive")
    if n_bootstrap < 1:
        raise ValueError("n_bootstrap must be >= 1")
    stat = ks_exponential(d, tau_hat)
    rng = np.random.default_rng(seed)
    sims = rng.exponential(tau_hat, size=(int(n_bootstrap), d.size))
    boot = ks_exponential(sims, sims.mean(axis=1))
    return float((1 + np.count_nonzero(boot >= stat)) / (n_bootstrap + 1))


def analyze_jumps(trace, cfg=ThresholdConfig(), t_min=None, n_bootstrap=200, seed=0):
    """Detect periods and fit both dwell-time classes.

    Quantities that cannot be estimated (too few periods) are NaN with a
    count of zero; ``n_bootstrap=0`` skips the goodness-of-fit test.
    """
    t_min = cfg.min_duration if t_min is None else t_min
    periods = detect_periods(trace, cfg)
    out = {}
    for name, state, key in (("dark", State.DARK, 0), ("bright", State.BRIGHT, 1)):
        n = int(_qualifying(periods, state, t_min).size)
        tau = sig = p = math.nan
        if n >= 2:
            tau, sig = fit_exponential(periods, state, t_min)
            if n >= 10 and tau > 0 and n_bootstrap > 0:
                p = gof_exponential(periods, state, tau, t_min, n_bootstrap, seed + key)
        out[name] = (tau, sig, n, p)
    return (
        JumpStatsResult(
            tau_dark_hat=out["dark"][0],
            tau_dark_sigma=out["dark"][1],
            tau_bright_hat=out["bright"][0],
            tau_bright_sigma=out["bright"][1],
            n_dark=out["dark"][2],
            n_bright=out["bright"][2],
            ks_pvalue_dark=out["dark"][3],
            ks_pvalue_bright=out["bright"][3],
            t_min=float(t_min),
        ),
        periods,
    )
