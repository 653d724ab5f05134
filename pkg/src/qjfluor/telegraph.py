"""Random-telegraph model of quantum-jump fluorescence gating.

The fluorescence of a shelving ion is a two-state gate ``g(t)`` in {0, 1}
whose bright and dark sojourns are independent exponentials with means
``tau_bright`` and ``tau_dark``. This module samples realizations of the
gate and provides its closed-form second-order statistics: the
autocorrelation, the line-plus-Lorentzian spectrum, and the pedestal
width/height predictions derived from them.
"""

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels

__all__ = [
    "State",
    "TelegraphParams",
    "JumpTrajectory",
    "SpectralPrediction",
    "RepumpRateModel",
    "ResolutionWarning",
    "sample_trajectory",
    "occupancy",
    "predict_pedestal",
    "autocorrelation",
    "lorentzian",
    "analytic_psd",
    "calibrate_rate_model",
    "tau_dark_of_power",
    "TAU_SPONTANEOUS",
]

#: Natural lifetime of the metastable shelving level (seconds).
TAU_SPONTANEOUS = 0.053


class State(str, Enum):
    BRIGHT = "bright"
    DARK = "dark"

    def flipped(self):
        return State.DARK if self is State.BRIGHT else State.BRIGHT


class ResolutionWarning(UserWarning):
    """The resolution bandwidth is not small compared to the pedestal width."""


def _check_tau(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class TelegraphParams:
    """Mean bright and dark sojourn durations, in seconds."""

    tau_bright: float
    tau_dark: float

    def __post_init__(self):
        _check_tau("tau_bright", self.tau_bright)
        _check_tau("tau_dark", self.tau_dark)

    @property
    def duty_cycle(self):
        """Stationary probability of the bright state."""
        return self.tau_bright / (self.tau_bright + self.tau_dark)

    @property
    def gamma(self):
        """Total switching rate 1/tau_bright + 1/tau_dark (1/s)."""
        return 1.0 / self.tau_bright + 1.0 / self.tau_dark

    def mean(self, state):
        return self.tau_bright if State(state) is State.BRIGHT else self.tau_dark


@dataclass(frozen=True, eq=False)
class JumpTrajectory:
    """One realization of the bright/dark gate on ``[0, duration]``.

    Occupancy is right-continuous: the state changes at the switch instant.
    """

    duration: float
    initial_state: State
    switch_times: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise ValueError(f"duration must be finite and >= 0, got {self.duration!r}")
        object.__setattr__(self, "initial_state", State(self.initial_state))
        s = np.array(self.switch_times, dtype=np.float64).reshape(-1)
        if s.size:
            if np.any(np.diff(s) <= 0):
                raise ValueError("switch times must be strictly increasing")
            if s[0] <= 0 or s[-1] >= self.duration:
                raise ValueError("switch times must lie in (0, duration)")
        s.setflags(write=False)
        object.__setattr__(self, "switch_times", s)

    def __eq__(self, other):
        if not isinstance(other, JumpTrajectory):
            return NotImplemented
        return (
            self.duration == other.duration
            and self.initial_state is other.initial_state
            and np.array_equal(self.switch_times, other.switch_times)
        )

    @property
    def initial_bright(self):
        return self.initial_state is State.BRIGHT

    @property
    def n_switches(self):
        return int(self.switch_times.size)

    def occupancy(self, t):
        return occupancy(self, t)

    def sojourns(self):
        """Return ``(states, starts, durations, censored)`` for every sojourn.

        The first and last sojourns are censored by the record boundaries
        (unless the record has no switches, in which case the single
        sojourn is censored on both sides).
        """
        edges = np.concatenate(([0.0], self.switch_times, [self.duration]))
        n = edges.size - 1
        bright = (self.initial_bright ^ (np.arange(n) & 1).astype(bool))
        states = np.where(bright, State.BRIGHT.value, State.DARK.value)
        censored = np.zeros(n, dtype=bool)
        censored[0] = censored[-1] = True
        return states, edges[:-1], np.diff(edges), censored

    def complete_durations(self, state):
        """Durations of uncensored sojourns in ``state``."""
        states, _, durations, censored = self.sojourns()
        keep = (states == State(state).value) & ~censored
        return durations[keep]

    def bright_time(self):
        if self.duration == 0:
            return 0.0
        return float(
            kernels.bright_time_in_bins(
                self.switch_times, self.initial_bright, self.duration, 1
            )[0]
        )

    def bright_fraction(self):
        return self.bright_time() / self.duration if self.duration > 0 else float(self.initial_bright)

    def gate(self, n0, dt, n):
        """Gate values (uint8) at times ``(n0 + k) * dt`` for ``k < n``."""
        return kernels.gate_on_grid(self.switch_times, self.initial_bright, int(n0), float(dt), int(n))

    def to_dict(self):
        return {
            "duration_s": self.duration,
            "initial_state": self.initial_state.value,
            "switch_times_s": self.switch_times.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["duration_s"]), State(d["initial_state"]), d["switch_times_s"])

    @classmethod
    def constant(cls, duration, state=State.BRIGHT):
        return cls(float(duration), State(state))


def sample_trajectory(params, duration, seed, initial="stationary"):
    """Draw a gate realization with exponential sojourns.

    Parameters
    ----------
    params : TelegraphParams
    duration : float
        Record length in seconds (>= 0).
    seed : int
        Seed for ``numpy.random.default_rng``; identical inputs give
        identical trajectories.
    initial : {"stationary", "bright", "dark"}
        ``stationary`` draws the initial state bright with probability
        ``params.duty_cycle``. By memorylessness the resulting record is
        stationary from t = 0.
    """
    if not isinstance(params, TelegraphParams):
        raise TypeError("params must be TelegraphParams")
    duration = float(duration)
    if not (math.isfinite(duration) and duration >= 0):
        raise ValueError(f"duration must be finite and >= 0, got {duration!r}")
    rng = np.random.default_rng(seed)
    if initial == "stationary":
        state = State.BRIGHT if rng.random() < params.duty_cycle else State.DARK
    else:
        state = State(initial)
    start_state = state
    if duration == 0:
        return JumpTrajectory(0.0, start_state)

    block = int(2.4 * duration / (params.tau_bright + params.tau_dark)) + 32
    first, second = params.mean(state), params.mean(state.flipped())
    means = np.where(np.arange(block) % 2 == 0, first, second)
    # after an odd-length block the next block starts in the other state
    odd_means = np.where(np.arange(block) % 2 == 0, second, first)
    t = 0.0
    pieces = []
    parity = 0
    while True:
        m = means if parity == 0 else odd_means
        ends = t + np.cumsum(rng.standard_exponential(block) * m)
        hit = int(np.searchsorted(ends, duration, side="left"))
        if hit < block:
            pieces.append(ends[:hit])
            break
        pieces.append(ends)
        t = float(ends[-1])
        parity ^= block % 2
    switches = np.concatenate(pieces)
    return JumpTrajectory(duration, start_state, switches)


def occupancy(traj, t):
    """State at time ``t`` (scalar) or uint8 bright indicator (array ``t``)."""
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0) or np.any(arr > traj.duration) or np.any(~np.isfinite(arr)):
        raise ValueError(f"t must lie in [0, {traj.duration}]")
    flips = np.searchsorted(traj.switch_times, arr, side="right")
    bright = np.asarray(traj.initial_bright ^ (flips & 1).astype(bool))
    if arr.ndim == 0:
        return State.BRIGHT if bool(bright) else State.DARK
    return bright.astype(np.uint8)


@dataclass(frozen=True)
class SpectralPrediction:
    """Closed-form line + pedestal spectrum of the gated emission.

    ``line_weight`` and ``pedestal_weight`` are fractions of the power the
    emitter would scatter if always bright; ``A_L`` is the pedestal-to-line
    peak height ratio when the line is rendered as a Lorentzian of FWHM
    ``delta_R``.
    """

    delta_L: float
    A_L: float
    delta_R: float
    p: float
    line_weight: float
    pedestal_weight: float
    gamma: float
    resolved: bool

    @property
    def weight_ratio(self):
        return self.pedestal_weight / self.line_weight

    def to_dict(self):
        return {
            "delta_L_Hz": self.delta_L,
            "A_L": self.A_L,
            "delta_R_Hz": self.delta_R,
            "p": self.p,
            "line_weight": self.line_weight,
            "pedestal_weight": self.pedestal_weight,
            "gamma_per_s": self.gamma,
            "weight_ratio": self.weight_ratio,
            "resolved": self.resolved,
        }


def predict_pedestal(params, delta_R):
    """Pedestal FWHM and height ratio for resolution bandwidth ``delta_R``.

    Emits :class:`ResolutionWarning` (and sets ``resolved=False``) when
    ``delta_R > delta_L / 10``, where the height-ratio formula loses its
    validity.
    """
    if not (math.isfinite(delta_R) and delta_R > 0):
        raise ValueError(f"delta_R must be positive, got {delta_R!r}")
    tb, td = params.tau_bright, params.tau_dark
    gamma = 1.0 / tb + 1.0 / td
    delta_L = gamma / math.pi
    A_L = math.pi * delta_R * td**2 / (tb + td)
    p = tb / (tb + td)
    resolved = delta_R <= delta_L / 10
    if not resolved:
        warnings.warn(
            f"delta_R = {delta_R:g} Hz is not << delta_L = {delta_L:.4g} Hz; "
            "height ratio is outside its validity range",
            ResolutionWarning,
            stacklevel=2,
        )
    return SpectralPrediction(
        delta_L=delta_L,
        A_L=A_L,
        delta_R=float(delta_R),
        p=p,
        line_weight=p * p,
        pedestal_weight=p * (1.0 - p),
        gamma=gamma,
        resolved=resolved,
    )


def autocorrelation(params, lag):
    """Stationary autocorrelation <g(t) g(t + lag)> of the 0/1 gate."""
    p = params.duty_cycle
    lag = np.abs(np.asarray(lag, dtype=np.float64))
    out = p * p + p * (1.0 - p) * np.exp(-params.gamma * lag)
    return float(out) if out.ndim == 0 else out


def lorentzian(nu, fwhm):
    """Unit-area Lorentzian of full width ``fwhm`` centred at zero."""
    hw = 0.5 * fwhm
    nu = np.asarray(nu, dtype=np.float64)
    return (hw / np.pi) / (nu * nu + hw * hw)


def analytic_psd(params, delta_R, total_power, nu_offset):
    """Line (Lorentzian of FWHM delta_R) plus pedestal (FWHM delta_L).

    ``total_power`` is the carrier power of the never-interrupted emitter;
    the result is a power density per Hz at detuning ``nu_offset``.
    """
    if not (math.isfinite(total_power) and total_power > 0):
        raise ValueError("total_power must be positive")
    if not (math.isfinite(delta_R) and delta_R > 0):
        raise ValueError("delta_R must be positive")
    p = params.duty_cycle
    delta_L = params.gamma / math.pi
    return total_power * (
        p * p * lorentzian(nu_offset, delta_R) + p * (1.0 - p) * lorentzian(nu_offset, delta_L)
    )


@dataclass(frozen=True)
class RepumpRateModel:
    """Dark-period mean vs repump power: 1/tau_D = 1/tau_spont + k P.

    ``k_deshelve`` is in 1/(s mW); powers are in mW.
    """

    tau_spont: float = TAU_SPONTANEOUS
    k_deshelve: float = 0.0

    def __post_init__(self):
        _check_tau("tau_spont", self.tau_spont)
        if not (math.isfinite(self.k_deshelve) and self.k_deshelve >= 0):
            raise ValueError("k_deshelve must be >= 0")

    def tau_dark(self, power):
        return tau_dark_of_power(self, power)


def calibrate_rate_model(points, tau_spont=TAU_SPONTANEOUS, inconsistent_weight=0.1):
    """Least-squares fit of the deshelving coefficient in rate space.

    ``points`` is a sequence of ``(power_mW, tau_dark_s)``. A point with
    ``tau_dark > tau_spont`` cannot be produced by the model; it triggers a
    warning and enters the fit with weight ``inconsistent_weight``.
    """
    pts = [(float(P), float(t)) for P, t in points]
    if not pts:
        raise ValueError("at least one calibration point is required")
    num = den = 0.0
    for P, tau in pts:
        if not (math.isfinite(P) and P >= 0):
            raise ValueError(f"power must be >= 0, got {P!r}")
        _check_tau("tau_dark", tau)
        w = 1.0
        if tau > tau_spont:
            warnings.warn(
                f"calibration point ({P} mW, {tau} s) exceeds the spontaneous "
                f"lifetime {tau_spont} s; down-weighted",
                stacklevel=2,
            )
            w = inconsistent_weight
        y = 1.0 / tau - 1.0 / tau_spont
        num += w * P * y
        den += w * P * P
    k = num / den if den > 0 else 0.0
    return RepumpRateModel(tau_spont=tau_spont, k_deshelve=max(k, 0.0))


def tau_dark_of_power(model, power):
    """Predicted mean dark duration (s) at repump power ``power`` (mW)."""
    P = np.asarray(power, dtype=np.float64)
    if np.any(P < 0) or np.any(~np.isfinite(P)):
        raise ValueError("power must be finite and >= 0")
    rate = 1.0 / model.tau_spont + model.k_deshelve * P
    out = 1.0 / rate
    return float(out) if out.ndim == 0 else out
