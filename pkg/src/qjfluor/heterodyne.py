"""Down-converted heterodyne beat synthesis and band-pass filtering.

The record is the beat after down-conversion to ``nu_L``: a carrier gated
by the jump trajectory, optional acoustic sideband pairs, an optional
Wiener phase walk for path-length drift, and additive white Gaussian noise
standing in for LO-dominated shot noise.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import firwin, kaiserord, oaconvolve

from . import kernels
from .seeds import derive_seed

__all__ = [
    "HeterodyneParams",
    "SampledSignal",
    "iter_beat",
    "synthesize_beat",
    "bandpass",
    "noise_density_for_snr",
    "NU_HETERODYNE",
    "NU_DOWNCONVERTED",
    "DEFAULT_SAMPLE_RATE",
]

#: Optical heterodyne frequency before down-conversion (Hz); metadata only.
NU_HETERODYNE = 21.4e6
#: Centre of the down-converted band (Hz).
NU_DOWNCONVERTED = 70e3
DEFAULT_SAMPLE_RATE = float(2**18)
DEFAULT_CHUNK = 2**20


@dataclass(frozen=True)
class HeterodyneParams:
    """Beat synthesis settings.

    ``noise_density`` is the one-sided white-noise density (units^2/Hz), so
    the per-sample noise variance is ``noise_density * sample_rate / 2``.
    ``phase_walk_rate`` is the Wiener phase diffusion rate in rad^2/s.
    ``acoustic_sidebands`` holds ``(offset_Hz, relative_amplitude)``
    pairs; each entry adds gated tones at ``nu_L +/- offset``.
    """

    nu_L: float = NU_DOWNCONVERTED
    sample_rate: float = DEFAULT_SAMPLE_RATE
    carrier_amplitude: float = 1.0
    noise_density: float = 0.0
    phase_walk_rate: float = 0.0
    acoustic_sidebands: tuple = ()
    seed: int = 0
    phase0: float = 0.0

    def __post_init__(self):
        sb = tuple((float(o), float(a)) for o, a in self.acoustic_sidebands)
        object.__setattr__(self, "acoustic_sidebands", sb)
        for name in ("nu_L", "sample_rate", "carrier_amplitude", "noise_density", "phase_walk_rate"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
        if self.nu_L <= 0 or self.sample_rate <= 0:
            raise ValueError("nu_L and sample_rate must be positive")
        if not self.sample_rate > 2 * self.nu_L:
            raise ValueError(
                f"sample_rate {self.sample_rate} Hz violates Nyquist for nu_L {self.nu_L} Hz"
            )
        if self.noise_density < 0 or self.phase_walk_rate < 0 or self.carrier_amplitude < 0:
            raise ValueError("noise_density, phase_walk_rate and amplitude must be >= 0")
        for offset, _ in sb:
            if offset <= 0 or self.nu_L + offset >= self.sample_rate / 2 or offset >= self.nu_L:
                raise ValueError(f"sideband offset {offset} Hz out of range")

    @property
    def carrier_power(self):
        """Mean power of the ungated carrier, A^2 / 2."""
        return 0.5 * self.carrier_amplitude**2

    @property
    def noise_sigma(self):
        return math.sqrt(self.noise_density * self.sample_rate / 2.0)


@dataclass(frozen=True, eq=False)
class SampledSignal:
    sample_rate: float
    samples: np.ndarray
    carrier_hint: float = NU_DOWNCONVERTED

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64).reshape(-1)
        if x.size < 2:
            raise ValueError("a signal needs at least two samples")
        if not np.all(np.isfinite(x)):
            raise ValueError("signal contains non-finite samples")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def duration(self):
        return self.samples.size / self.sample_rate


def noise_density_for_snr(carrier_power, snr, delta_R):
    """White-noise density giving ``carrier_power / (N0 * delta_R) = snr``."""
    return carrier_power / (snr * delta_R)


def _n_samples(traj, het):
    return int(math.floor(traj.duration * het.sample_rate + 1e-9))


def iter_beat(traj, het, chunk_size=DEFAULT_CHUNK):
    """Yield ``(n0, samples)`` chunks of the beat record in order.

    Noise and phase-walk generators are consumed sequentially and the walk
    is chained across boundaries, so the concatenated record does not
    depend on ``chunk_size``.
    """
    n_total = _n_samples(traj, het)
    if n_total < 2:
        raise ValueError("trajectory is shorter than two samples")
    fs = het.sample_rate
    dt = 1.0 / fs
    sigma = het.noise_sigma
    noise_rng = np.random.default_rng(derive_seed(het.seed, "noise"))
    walk_rng = np.random.default_rng(derive_seed(het.seed, "phase-walk"))
    walk_step = math.sqrt(het.phase_walk_rate / fs)
    walk_last = 0.0
    tones = [(het.nu_L / fs, het.carrier_amplitude)]
    for offset, rel in het.acoustic_sidebands:
        a = rel * het.carrier_amplitude
        tones += [((het.nu_L + offset) / fs, a), ((het.nu_L - offset) / fs, a)]

    n0 = 0
    while n0 < n_total:
        n = min(chunk_size, n_total - n0)
        if sigma > 0:
            out = noise_rng.standard_normal(n)
            out *= sigma
        else:
            out = np.zeros(n)
        walk = None
        if het.phase_walk_rate > 0:
            # seed the running sum with the carried state so the walk is
            # bit-identical whatever the chunk size
            steps = np.empty(n + 1)
            steps[0] = walk_last
            steps[1:] = walk_rng.standard_normal(n) * walk_step
            walk = np.cumsum(steps)[1:]
            walk_last = float(walk[-1])
        gate = traj.gate(n0, dt, n)
        for ratio, amp in tones:
            kernels.add_gated_tone(out, gate, n0, ratio, het.phase0, amp, walk)
        yield n0, out
        n0 += n


def synthesize_beat(traj, het, chunk_size=DEFAULT_CHUNK):
    """Full beat record as a :class:`SampledSignal` (keeps it all in memory)."""
    parts = [x for _, x in iter_beat(traj, het, chunk_size)]
    return SampledSignal(het.sample_rate, np.concatenate(parts), het.nu_L)


def bandpass(signal, center, bandwidth, transition=None, attenuation_db=60.0):
    """Linear-phase windowed-sinc band-pass, zero group delay.

    The -6 dB points sit at ``center -/+ bandwidth / 2``; the transition
    bands (``bandwidth / 4`` wide by default) straddle them. The kernel has
    an odd number of taps and is applied centred, so carrier phase is
    preserved.
    """
    fs = signal.sample_rate
    nyq = fs / 2
    lo, hi = center - bandwidth / 2, center + bandwidth / 2
    if not (bandwidth > 0 and lo > 0 and hi < nyq):
        raise ValueError(f"band [{lo}, {hi}] Hz is outside (0, {nyq}) Hz")
    tw = bandwidth / 4 if transition is None else float(transition)
    tw = min(tw, 1.8 * lo, 1.8 * (nyq - hi))
    numtaps, beta = kaiserord(attenuation_db, tw / nyq)
    numtaps |= 1
    taps = firwin(numtaps, [lo, hi], window=("kaiser", beta), pass_zero=False, fs=fs)
    if numtaps > signal.samples.size:
        raise ValueError("signal is shorter than the band-pass kernel")
    y = oaconvolve(signal.samples, taps, mode="same")
    return SampledSignal(fs, y, signal.carrier_hint)
