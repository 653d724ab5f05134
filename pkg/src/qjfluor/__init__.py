"""Quantum-jump fluorescence: telegraph gating, photon counting, heterodyne
beat synthesis, line + pedestal spectroscopy and dwell-time statistics."""

__version__ = "0.1.0"

from .kernels import BACKEND
from .telegraph import (
    JumpTrajectory,
    RepumpRateModel,
    ResolutionWarning,
    SpectralPrediction,
    State,
    TelegraphParams,
    analytic_psd,
    autocorrelation,
    calibrate_rate_model,
    occupancy,
    predict_pedestal,
    sample_trajectory,
    tau_dark_of_power,
)
from .photons import CountTrace, DetectionParams, IntensityTrace, low_pass, synthesize_counts
from .heterodyne import HeterodyneParams, SampledSignal, bandpass, synthesize_beat
from .spectral import (
    PedestalFit,
    Spectrum,
    WelchConfig,
    conditional_psd,
    estimate_psd,
    fit_pedestal,
    oracle_compare,
)
from .jumpstats import (
    DurationHistogram,
    JumpStatsResult,
    PeriodList,
    ThresholdConfig,
    detect_periods,
    fit_exponential,
    gof_exponential,
    make_histogram,
)
