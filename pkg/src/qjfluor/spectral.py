"""Spectrum estimation, line + pedestal fitting and oracle comparison.

The analyzer works like a zoom FFT: the real beat is mixed to complex
baseband around its carrier, decimated (boxcar stage, then a Kaiser FIR
stage) and Welch-averaged. On the resulting two-sided grid a
monochromatic carrier appears with the window's line response, whose FWHM
is the resolution bandwidth ``delta_R``.

Conventions: all densities are power per Hz such that integrating the
spectrum over offsets gives the carrier power ``A^2 / 2`` of a real tone.
"""

import functools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, least_squares
from scipy.signal import fftconvolve, firwin, get_window, kaiserord, upfirdn

from . import kernels
from .telegraph import SpectralPrediction, State, lorentzian

__all__ = [
    "WelchConfig",
    "Spectrum",
    "Baseband",
    "Downconverter",
    "WindowResponse",
    "PedestalFit",
    "FitError",
    "OracleReport",
    "downconvert",
    "downconvert_stream",
    "estimate_psd",
    "conditional_psd",
    "fit_pedestal",
    "render_expected_psd",
    "oracle_compare",
    "peak_snr_db",
    "window_response",
]

_WINDOWS = {"hann": "hann", "rectangular": "boxcar"}
# FIR stage of the decimator: flat to 0.4 fs_out, >= 80 dB beyond 0.6 fs_out
_PASS_FRACTION = 0.4
_STOP_FRACTION = 0.6
_FIR_ATTEN_DB = 80.0


def _is_pow2(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class WelchConfig:
    """Welch settings plus the optional zoom decimation factor.

    With ``decimation=None`` the real signal is analysed directly (one-sided
    spectrum). Otherwise it is down-converted around its carrier hint and
    decimated by ``decimation`` before averaging (two-sided spectrum,
    trimmed to the flat part of the decimator passband).
    """

    segment_length: int = 1024
    overlap_fraction: float = 0.5
    window: str = "hann"
    detrend: bool = False
    decimation: int = 368

    def __post_init__(self):
        n = self.segment_length
        if not (isinstance(n, (int, np.integer)) and _is_pow2(int(n)) and n >= 256):
            raise ValueError("segment_length must be a power of two >= 256")
        if not (0 <= self.overlap_fraction < 1):
            raise ValueError("overlap_fraction must lie in [0, 1)")
        if self.window not in _WINDOWS:
            raise ValueError(f"window must be one of {sorted(_WINDOWS)}")
        if self.decimation is not None and int(self.decimation) < 2:
            raise ValueError("decimation must be >= 2 (or None for no zoom)")

    @property
    def hop(self):
        return max(1, int(round(self.segment_length * (1 - self.overlap_fraction))))

    @classmethod
    def for_resolution(cls, sample_rate, delta_R=1.0, segment_length=1024, **kw):
        """Pick the decimation that puts the line FWHM closest to ``delta_R``."""
        window = kw.get("window", "hann")
        fwhm_bins = window_response(window, segment_length, 1.0).fwhm_bins
        dec = int(round(sample_rate * fwhm_bins / (delta_R * segment_length)))
        return cls(segment_length=segment_length, decimation=max(dec, 2), **kw)

    def to_dict(self):
        return {
            "segment_length": int(self.segment_length),
            "overlap_fraction": self.overlap_fraction,
            "window": self.window,
            "detrend": self.detrend,
            "decimation": None if self.decimation is None else int(self.decimation),
        }


class WindowResponse:
    """Line response of a periodic window on an oversampled frequency table.

    ``line(nu)`` is the expected periodogram density produced by a unit-power
    tone at detuning ``nu``; it integrates to one and peaks at ``1/enbw``.
    """

    def __init__(self, window, segment_length, sample_rate, oversample=None, span_bins=512):
        self.window = window
        self.segment_length = n = int(segment_length)
        self.sample_rate = fs = float(sample_rate)
        self.w = get_window(_WINDOWS[window], n)
        s1, s2 = self.w.sum(), float(np.dot(self.w, self.w))
        self.enbw_bins = n * s2 / s1**2
        if oversample is None:
            oversample = int(max(4, min(64, 2**22 // n)))
        self.oversample = oversample
        m = n * oversample
        spec = np.abs(np.fft.fft(self.w, m)) ** 2 / (fs * s2)
        half = min(n // 2, span_bins) * oversample
        idx = np.arange(-half, half + 1)
        self.step = fs / m
        self.grid = idx * self.step
        self.table = spec[idx % m]
        self.fwhm_bins = self._fwhm() / (fs / n)

    def _power(self, nu):
        n = self.segment_length
        ph = np.exp(-2j * np.pi * nu / self.sample_rate * np.arange(n))
        return abs(np.dot(self.w, ph)) ** 2 / (self.sample_rate * np.dot(self.w, self.w))

    def _fwhm(self):
        peak = self._power(0.0)
        bin_hz = self.sample_rate / self.segment_length
        hw = brentq(lambda nu: self._power(nu) - peak / 2, 1e-9 * bin_hz, 1.5 * bin_hz, xtol=1e-14)
        return 2 * hw

    @property
    def bin_hz(self):
        return self.sample_rate / self.segment_length

    @property
    def enbw(self):
        return self.enbw_bins * self.bin_hz

    @property
    def fwhm(self):
        return self.fwhm_bins * self.bin_hz

    def line(self, nu):
        return np.interp(nu, self.grid, self.table, left=0.0, right=0.0)

    def line_slope(self, nu):
        d = np.gradient(self.table, self.step)
        return np.interp(nu, self.grid, d, left=0.0, right=0.0)

    def smear(self, density, nu):
        """Expected periodogram of a continuous density ``density(f)`` at ``nu``."""
        nu = np.asarray(nu, dtype=np.float64)
        pad = self.grid[-1]
        lo = nu.min() - pad
        k = np.arange(int(np.floor(lo / self.step)), int(np.ceil((nu.max() + pad) / self.step)) + 1)
        fine = k * self.step
        conv = fftconvolve(density(fine), self.table, mode="same") * self.step
        return np.interp(nu, fine, conv)


@functools.lru_cache(maxsize=32)
def window_response(window, segment_length, sample_rate):
    return WindowResponse(window, int(segment_length), float(sample_rate))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Averaged PSD on a uniform ascending grid of offsets from the carrier."""

    freq_offsets: np.ndarray
    psd: np.ndarray
    delta_R: float
    n_averages: int
    enbw: float
    window: str = "hann"
    segment_length: int = 1024
    sample_rate: float = 0.0
    carrier: float = 0.0
    two_sided: bool = True

    def __post_init__(self):
        f = np.array(self.freq_offsets, dtype=np.float64)
        p = np.array(self.psd, dtype=np.float64)
        if f.shape != p.shape or f.ndim != 1 or f.size < 2:
            raise ValueError("freq_offsets and psd must be equal-length 1-D arrays")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("psd must be finite and non-negative")
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequency grid must be ascending")
        f.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "freq_offsets", f)
        object.__setattr__(self, "psd", p)

    @property
    def df(self):
        return float(self.freq_offsets[1] - self.freq_offsets[0])

    @property
    def span(self):
        return float(min(-self.freq_offsets[0], self.freq_offsets[-1]))

    @property
    def response(self):
        return window_response(self.window, self.segment_length, self.sample_rate)

    def integral(self):
        return float(np.sum(self.psd) * self.df)

    def restrict(self, half_width):
        keep = np.abs(self.freq_offsets) <= half_width
        return replace(self, freq_offsets=self.freq_offsets[keep], psd=self.psd[keep])


@dataclass(frozen=True, eq=False)
class Baseband:
    """Complex zoom record. Sample ``m`` represents the signal at
    ``t0 + m / sample_rate`` and depends on raw samples within
    ``+/- support`` seconds of that instant."""

    samples: np.ndarray
    sample_rate: float
    carrier: float
    t0: float
    support: float
    passband: float

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    @property
    def times(self):
        return self.t0 + np.arange(self.samples.size) / self.sample_rate


def _split_decimation(d):
    """Boxcar factor and FIR factor with the FIR stage decimating >= 8x."""
    if d < 16:
        return 1, d
    best = 1
    for d1 in range(1, d + 1):
        if d % d1 == 0 and d // d1 >= 8:
            best = d1
    return best, d // best


class Downconverter:
    """Streaming mixer/decimator. Feed contiguous real chunks to
    :meth:`push`, then call :meth:`finish` for the :class:`Baseband`.

    Stage 1 mixes with ``sqrt(2) exp(-2 pi i carrier t)`` and averages
    blocks of ``d1`` samples (boxcar); stage 2 is a linear-phase Kaiser FIR
    decimating by ``d2``. White noise of one-sided density N0 maps to a
    two-sided baseband density N0, and a tone of power P to a line of
    power P.
    """

    def __init__(self, sample_rate, carrier, decimation):
        self.fs = float(sample_rate)
        self.carrier = float(carrier)
        self.decimation = int(decimation)
        if not (0 < self.carrier < self.fs / 2):
            raise ValueError("carrier must lie inside (0, sample_rate / 2)")
        self.d1, self.d2 = _split_decimation(self.decimation)
        self.fs1 = self.fs / self.d1
        self.fs_out = self.fs / self.decimation
        nyq1 = self.fs1 / 2
        tw = (_STOP_FRACTION - _PASS_FRACTION) * self.fs_out
        numtaps, beta = kaiserord(_FIR_ATTEN_DB, tw / nyq1)
        numtaps |= 1
        self.taps = firwin(numtaps, 0.5 * self.fs_out, window=("kaiser", beta), fs=self.fs1)
        self._L = numtaps
        self._ratio = self.carrier / self.fs
        self._leftover = np.empty(0)
        self._n_raw = 0  # raw index of the first leftover sample
        self._j0 = 0  # stage-1 index of the next stage-1 sample
        self._hist = np.zeros(self._L - 1 + self.d2, dtype=np.complex128)
        self._out = []

    def push(self, chunk):
        x = np.asarray(chunk, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("signal contains non-finite samples")
        if self._leftover.size:
            x = np.concatenate((self._leftover, x))
        usable = (x.size // self.d1) * self.d1
        if usable:
            z1 = kernels.mix_boxcar(np.ascontiguousarray(x[:usable]), self._n_raw, self._ratio, self.d1)
            self._fir(z1)
        self._leftover = x[usable:].copy()
        self._n_raw += usable

    def _fir(self, x1):
        L, d2, j0, n = self._L, self.d2, self._j0, x1.size
        h_len = L - 1 + ((j0 - (L - 1)) % d2)
        buf = np.concatenate((self._hist[self._hist.size - h_len :], x1))
        y = upfirdn(self.taps, buf, 1, d2)
        r_a = -(-h_len // d2)
        r_b = -(-(h_len + n) // d2)
        self._out.append(y[r_a:r_b])
        self._hist = np.concatenate((self._hist, x1))[-(L - 1 + d2) :]
        self._j0 = j0 + n

    def finish(self):
        y = np.concatenate(self._out) if self._out else np.empty(0, dtype=np.complex128)
        skip = -(-(self._L - 1) // self.d2)  # outputs still fed by the zero history
        y = y[skip:]
        d1, d2, L = self.d1, self.d2, self._L
        t_first = ((skip * d2 - (L - 1) / 2) * d1 + (d1 - 1) / 2) / self.fs
        support = L * d1 / (2 * self.fs)
        return Baseband(
            samples=y,
            sample_rate=self.fs_out,
            carrier=self.carrier,
            t0=t_first,
            support=support,
            passband=_PASS_FRACTION * self.fs_out,
        )


def downconvert_stream(chunks, sample_rate, carrier, decimation):
    dc = Downconverter(sample_rate, carrier, decimation)
    for chunk in chunks:
        dc.push(chunk)
    return dc.finish()


def downconvert(signal, decimation, chunk_size=2**20):
    x = signal.samples
    chunks = (x[i : i + chunk_size] for i in range(0, x.size, chunk_size))
    return downconvert_stream(chunks, signal.sample_rate, signal.carrier_hint, decimation)


def _pairwise_rows(a):
    """Sum the rows of ``a`` by pairwise (tree) reduction."""
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            a = np.concatenate((a[:-2], a[-2:-1] + a[-1:]))
        a = a[0::2] + a[1::2]
    return a[0]


def _welch_sum(x, starts, w, detrend, batch=64):
    n = w.size
    offsets = np.arange(n)
    partials = []
    for i in range(0, starts.size, batch):
        seg = x[starts[i : i + batch, None] + offsets]
        if detrend:
            seg = seg - seg.mean(axis=1, keepdims=True)
        spec = np.fft.fft(seg * w, axis=1) if np.iscomplexobj(seg) else np.fft.rfft(seg * w, axis=1)
        partials.append(_pairwise_rows(np.abs(spec) ** 2))
    return _pairwise_rows(np.stack(partials))


def _spectrum_from_segments(x, fs, starts, cfg, carrier, passband=None):
    n = cfg.segment_length
    if starts.size == 0:
        raise ValueError("no segments to average")
    resp = window_response(cfg.window, n, fs)
    w = resp.w
    total = _welch_sum(x, starts, w, cfg.detrend)
    psd = total / (starts.size * fs * np.dot(w, w))
    if np.iscomplexobj(x):
        freqs = np.fft.fftshift(np.fft.fftfreq(n, 1.0 / fs))
        psd = np.fft.fftshift(psd)
        offsets = freqs
        two_sided = True
    else:
        psd = psd.copy()
        psd[1:] *= 2.0
        if n % 2 == 0:
            psd[-1] /= 2.0
        offsets = np.fft.rfftfreq(n, 1.0 / fs) - carrier
        two_sided = False
    spec = Spectrum(
        freq_offsets=offsets,
        psd=psd,
        delta_R=resp.fwhm,
        n_averages=int(starts.size),
        enbw=resp.enbw,
        window=cfg.window,
        segment_length=n,
        sample_rate=fs,
        carrier=carrier,
        two_sided=two_sided,
    )
    if passband is not None:
        spec = spec.restrict(passband)
    return spec


def _as_baseband(signal, cfg):
    if isinstance(signal, Baseband):
        return signal
    if cfg.decimation is None:
        return None
    return downconvert(signal, cfg.decimation)


def estimate_psd(signal, cfg=WelchConfig()):
    """Welch-averaged PSD of a :class:`SampledSignal` or :class:`Baseband`.

    Offsets are relative to the carrier hint. In zoom mode the returned
    spectrum is two-sided and limited to the flat decimator passband.
    """
    bb = _as_baseband(signal, cfg)
    n = cfg.segment_length
    if bb is not None:
        x, fs = bb.samples, bb.sample_rate
        if x.size < n:
            raise ValueError(f"record has {x.size} samples, fewer than segment_length {n}")
        if not np.all(np.isfinite(x)):
            raise ValueError("record contains non-finite samples")
        starts = np.arange(0, x.size - n + 1, cfg.hop)
        return _spectrum_from_segments(x, fs, starts, cfg, 0.0, bb.passband)
    x, fs = signal.samples, signal.sample_rate
    if x.size < n:
        raise ValueError(f"record has {x.size} samples, fewer than segment_length {n}")
    starts = np.arange(0, x.size - n + 1, cfg.hop)
    return _spectrum_from_segments(x, fs, starts, cfg, signal.carrier_hint)


def bright_intervals(traj, min_bright):
    states, starts, durations, _ = traj.sojourns()
    keep = (states == State.BRIGHT.value) & (durations >= min_bright)
    return starts[keep], starts[keep] + durations[keep]


def conditional_psd(signal, traj, cfg, min_bright):
    """Welch PSD restricted to segments inside long bright periods.

    Only segments whose full time support (including the decimator's
    impulse response) lies inside a bright period of length >= ``min_bright``
    are averaged.
    """
    bb = _as_baseband(signal, cfg)
    n = cfg.segment_length
    if bb is not None:
        x, fs, t0, guard, passband = bb.samples, bb.sample_rate, bb.t0, bb.support, bb.passband
    else:
        x, fs, t0, guard, passband = signal.samples, signal.sample_rate, 0.0, 0.0, None
    seg_dur = n / fs
    lo, hi = bright_intervals(traj, min_bright)
    if lo.size == 0 or np.max(hi - lo) < max(min_bright, seg_dur):
        raise ValueError(
            f"no bright period of at least {max(min_bright, seg_dur):.4g} s in the trajectory"
        )
    starts = []
    for a, b in zip(lo, hi):
        m_first = int(math.ceil((a + guard - t0) * fs))
        m_last = int(math.floor((b - guard - t0) * fs)) - (n - 1)
        m_first = max(m_first, 0)
        m_last = min(m_last, x.size - n)
        if m_last >= m_first:
            starts.append(np.arange(m_first, m_last + 1, cfg.hop))
    starts = np.concatenate(starts) if starts else np.empty(0, dtype=np.int64)
    if starts.size == 0:
        raise ValueError("no analysis segment fits inside a qualifying bright period")
    carrier = 0.0 if bb is not None else signal.carrier_hint
    return _spectrum_from_segments(x, fs, starts.astype(np.int64), cfg, carrier, passband)


class FitError(RuntimeError):
    """The line + pedestal fit did not converge."""


@dataclass(frozen=True)
class PedestalFit:
    center: float
    peak_height: float
    pedestal_height: float
    delta_L_hat: float
    baseline: float
    A_L_hat: float
    weight_ratio_hat: float
    line_power: float
    pedestal_power: float
    uncertainties: dict
    residual_rms: float
    weight_ratio_upper: float
    degenerate: bool
    delta_R: float
    enbw: float
    n_averages: int

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["uncertainties"] = dict(self.uncertainties)
        return {k: (float(v) if isinstance(v, (np.floating,)) else v) for k, v in d.items()}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def height_conversion(spec):
    """Factor turning a measured pedestal/peak height ratio into the
    Lorentzian-resolution convention: ``pi * delta_R / (2 * enbw)``."""
    return math.pi * spec.delta_R / (2.0 * spec.enbw)


_PNAMES = ("center", "line_power", "pedestal_power", "delta_L", "baseline")


def _model(theta, nu, resp):
    c, pl, pp, w, b = theta
    return b + pl * resp.line(nu - c) + pp * lorentzian(nu - c, w)


def _jac(theta, nu, resp):
    c, pl, pp, w, b = theta
    x = nu - c
    hw = w / 2
    den = x * x + hw * hw
    lor = (hw / np.pi) / den
    dlor_dx = -(hw / np.pi) * 2 * x / den**2
    dlor_dw = 0.5 * ((1 / np.pi) / den - (hw / np.pi) * 2 * hw / den**2)
    return np.column_stack(
        (
            -pl * resp.line_slope(x) - pp * dlor_dx,
            resp.line(x),
            lor,
            pp * dlor_dw,
            np.ones_like(nu),
        )
    )


def _initial_guess(spec, resp, delta_L_guess):
    nu, y = spec.freq_offsets, spec.psd
    span = spec.span
    outer = np.abs(nu) > 0.75 * span
    b0 = float(np.median(y[outer])) if outer.sum() >= 3 else float(np.min(y))
    i = int(np.argmax(y))
    c0 = float(nu[i])
    pl0 = max(float(y[i] - b0), 0.0) / float(resp.line(0.0))
    resid = y - b0 - pl0 * resp.line(nu - c0)
    near = (np.abs(nu - c0) > 2.5 * spec.delta_R) & (np.abs(nu - c0) < 4.5 * spec.delta_R)
    h0 = max(float(np.median(resid[near])) if near.any() else 0.0, 0.0)
    if delta_L_guess is None:
        delta_L_guess = 10 * spec.delta_R
        if h0 > 0:
            order = np.argsort(np.abs(nu - c0))
            r_sorted = resid[order]
            d_sorted = np.abs(nu - c0)[order]
            mask = d_sorted > 2.5 * spec.delta_R
            below = np.nonzero(mask & (r_sorted < h0 / 2))[0]
            if below.size:
                delta_L_guess = max(2 * d_sorted[below[0]], 2 * spec.delta_R)
    pp0 = h0 * np.pi * delta_L_guess / 2
    if pp0 <= 0:
        pp0 = 1e-3 * pl0 if pl0 > 0 else 1e-12
    return np.array([c0, pl0, pp0, float(delta_L_guess), max(b0, 0.0)])


def _weighted_linear(spec, resp, c, width, sigma):
    """Linear LS for (line, pedestal, baseline) with centre and width fixed."""
    nu = spec.freq_offsets
    A = np.column_stack((resp.line(nu - c), lorentzian(nu - c, width), np.ones_like(nu)))
    Aw = A / sigma[:, None]
    yw = spec.psd / sigma
    coef, *_ = np.linalg.lstsq(Aw, yw, rcond=None)
    r = yw - Aw @ coef
    dof = max(nu.size - 3, 1)
    cov = np.linalg.pinv(Aw.T @ Aw) * max(float(r @ r) / dof, 1.0)
    return coef, cov


def fit_pedestal(spec, init=None, irls_rounds=4, max_nfev=400):
    """Weighted least-squares fit of baseline + windowed line + Lorentzian.

    Parameters
    ----------
    spec : Spectrum
    init : SpectralPrediction or PedestalFit, optional
        Source of the initial pedestal width. Without it the width is
        estimated from the half-height of the line-subtracted spectrum.

    The weights follow the periodogram variance ``model^2 / n_averages``
    and are refreshed from the model each round. A pedestal that cannot be
    separated from the baseline (amplitude at its bound or less than one
    standard error) is reported with ``degenerate=True``, zero weight and an
    upper bound from a fit with the width held at the initial value.
    """
    resp = spec.response
    nu, y = spec.freq_offsets, spec.psd
    if isinstance(init, SpectralPrediction):
        guess = init.delta_L
    elif isinstance(init, PedestalFit):
        guess = init.delta_L_hat
    else:
        guess = None
    if guess is not None and spec.span < 5 * guess:
        raise ValueError(
            f"spectrum spans +/-{spec.span:.4g} Hz, less than 5x the pedestal guess {guess:.4g} Hz"
        )
    theta = _initial_guess(spec, resp, guess)
    width_ref = theta[3]
    bin_hz = resp.bin_hz
    lower = [-2 * bin_hz, 0.0, 0.0, spec.delta_R, 0.0]
    upper = [2 * bin_hz, np.inf, np.inf, 2 * spec.span, np.inf]
    theta = np.clip(theta, lower, [u if np.isfinite(u) else np.inf for u in upper])
    theta[3] = min(max(theta[3], spec.delta_R * 1.01), 2 * spec.span * 0.99)
    sqrt_n = math.sqrt(spec.n_averages)
    floor = 1e-12 * max(float(np.max(y)), 1e-300)

    res = None
    for _ in range(irls_rounds):
        sigma = np.maximum(_model(theta, nu, resp), floor) / sqrt_n
        res = least_squares(
            lambda th: (_model(th, nu, resp) - y) / sigma,
            theta,
            jac=lambda th: _jac(th, nu, resp) / sigma[:, None],
            bounds=(lower, upper),
            x_scale="jac",
            max_nfev=max_nfev,
        )
        if res.status <= 0:
            raise FitError(f"pedestal fit did not converge: {res.message}")
        theta = res.x

    sigma = np.maximum(_model(theta, nu, resp), floor) / sqrt_n
    J = res.jac
    dof = max(nu.size - theta.size, 1)
    chi2_red = max(float(res.fun @ res.fun) / dof, 1.0)
    try:
        cov = np.linalg.inv(J.T @ J) * chi2_red
        singular = not np.all(np.isfinite(cov)) or np.any(np.diag(cov) < 0)
    except np.linalg.LinAlgError:
        cov = np.full((5, 5), np.nan)
        singular = True
    err = np.sqrt(np.abs(np.diag(cov)))
    c, pl, pp, width, b = (float(v) for v in theta)
    if pl <= 0:
        raise FitError("no line found in the spectrum")

    degenerate = singular or pp <= 0 or not (err[2] < pp)
    if degenerate:
        coef, lcov = _weighted_linear(spec, resp, c, width_ref, sigma)
        pp_lin, sp = coef[1], math.sqrt(max(lcov[1, 1], 0.0))
        ratio_upper = (max(pp_lin, 0.0) + 2 * sp) / pl
        ratio = 0.0
        pp_rep = 0.0
        width_rep = width_ref
        ratio_err = sp / pl
    else:
        ratio = pp / pl
        g = np.array([0.0, -pp / pl**2, 1.0 / pl, 0.0, 0.0])
        ratio_err = math.sqrt(max(float(g @ cov @ g), 0.0))
        ratio_upper = ratio + 2 * ratio_err
        pp_rep = pp
        width_rep = width

    peak_height = pl * float(resp.line(0.0))
    ped_height = 2 * pp_rep / (math.pi * width_rep)
    A_L_hat = (ped_height / peak_height) * height_conversion(spec)
    uncertainties = {name: float(e) for name, e in zip(_PNAMES, err)}
    uncertainties["weight_ratio"] = float(ratio_err)
    if not degenerate:
        rel = math.hypot(err[2] / pp, err[1] / pl)
        rel_w = err[3] / width
        uncertainties["A_L"] = float(A_L_hat * math.hypot(rel, rel_w))
    else:
        uncertainties["A_L"] = float("nan")
    resid = (y - _model(theta, nu, resp))
    return PedestalFit(
        center=c,
        peak_height=peak_height,
        pedestal_height=ped_height,
        delta_L_hat=width_rep,
        baseline=b,
        A_L_hat=A_L_hat,
        weight_ratio_hat=ratio,
        line_power=pl,
        pedestal_power=pp_rep,
        uncertainties=uncertainties,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        weight_ratio_upper=float(ratio_upper),
        degenerate=bool(degenerate),
        delta_R=spec.delta_R,
        enbw=spec.enbw,
        n_averages=spec.n_averages,
    )


def render_expected_psd(spec, pred, total_power, baseline=0.0, nu=None):
    """Expected averaged periodogram for the predicted line + pedestal.

    The line is rendered with the window's line response and the pedestal
    Lorentzian is smeared by the same response.
    """
    resp = spec.response
    nu = spec.freq_offsets if nu is None else np.asarray(nu, dtype=np.float64)
    line = pred.line_weight * resp.line(nu)
    ped = pred.pedestal_weight * resp.smear(lambda f: lorentzian(f, pred.delta_L), nu)
    return baseline + total_power * (line + ped)


@dataclass(frozen=True, eq=False)
class OracleReport:
    band: tuple
    offsets: np.ndarray
    relative_deviation: np.ndarray
    rms_deviation: float
    mean_deviation: float
    tolerance: float

    @property
    def n_bins(self):
        return int(self.offsets.size)

    @property
    def passed(self):
        return self.rms_deviation <= self.tolerance

    def to_dict(self):
        return {
            "band_Hz": list(self.band),
            "n_bins": self.n_bins,
            "rms_relative_deviation": self.rms_deviation,
            "mean_relative_deviation": self.mean_deviation,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def oracle_compare(spec, pred, band, total_power=1.0, baseline=0.0):
    """Relative deviation of ``spec`` from the rendered prediction over
    ``band[0] <= |offset| <= band[1]``; tolerance is ``3 / sqrt(n_averages)``."""
    lo, hi = float(band[0]), float(band[1])
    if not (0 <= lo < hi) or hi > spec.span:
        raise ValueError(f"band [{lo}, {hi}] Hz is not inside the spectrum span +/-{spec.span:.4g} Hz")
    keep = (np.abs(spec.freq_offsets) >= lo) & (np.abs(spec.freq_offsets) <= hi)
    if not keep.any():
        raise ValueError("band contains no frequency bins")
    nu = spec.freq_offsets[keep]
    expected = render_expected_psd(spec, pred, total_power, baseline, nu)
    rel = spec.psd[keep] / expected - 1.0
    return OracleReport(
        band=(lo, hi),
        offsets=nu,
        relative_deviation=rel,
        rms_deviation=float(np.sqrt(np.mean(rel**2))),
        mean_deviation=float(np.mean(rel)),
        tolerance=3.0 / math.sqrt(spec.n_averages),
    )


def peak_snr_db(spec, exclude=None):
    """Peak height over the median noise floor, in dB."""
    exclude = 20 * spec.delta_R if exclude is None else exclude
    i = int(np.argmax(spec.psd))
    far = np.abs(spec.freq_offsets - spec.freq_offsets[i]) > exclude
    return 10 * math.log10(spec.psd[i] / float(np.median(spec.psd[far])))
