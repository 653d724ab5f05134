import math

import numpy as np
import pytest

from qjfluor.heterodyne import (
    HeterodyneParams,
    SampledSignal,
    bandpass,
    noise_density_for_snr,
    synthesize_beat,
)
from qjfluor.spectral import WelchConfig, downconvert, estimate_psd, peak_snr_db, window_response
from qjfluor.telegraph import JumpTrajectory, State, TelegraphParams, sample_trajectory

FS = 2.0**18
REAL = WelchConfig(segment_length=4096, decimation=None)


def _db(x):
    return 20 * math.log10(x)


def test_validation():
    with pytest.raises(ValueError, match="Nyquist"):
        HeterodyneParams(nu_L=70e3, sample_rate=120e3)
    with pytest.raises(ValueError):
        HeterodyneParams(noise_density=-1)
    with pytest.raises(ValueError):
        HeterodyneParams(acoustic_sidebands=[(80e3, 0.1)])
    with pytest.raises(ValueError):
        SampledSignal(1.0, [1.0])
    with pytest.raises(ValueError):
        SampledSignal(1.0, [1.0, math.nan])
    with pytest.raises(ValueError):
        synthesize_beat(JumpTrajectory.constant(1e-6), HeterodyneParams())


def test_noiseless_carrier_line_position():
    sig = synthesize_beat(JumpTrajectory.constant(1.0), HeterodyneParams())
    spec = estimate_psd(sig, REAL)
    assert abs(spec.freq_offsets[np.argmax(spec.psd)]) <= spec.df
    # pure cosine: every sample is A cos(2 pi nu_L t)
    t = np.arange(sig.samples.size) / FS
    np.testing.assert_allclose(sig.samples, np.cos(2 * np.pi * 70e3 * t), atol=1e-9)


def test_dark_record_is_white_noise():
    n0 = 2e-6
    sig = synthesize_beat(JumpTrajectory.constant(4.0, State.DARK),
                          HeterodyneParams(noise_density=n0, seed=1))
    assert sig.samples.var() == pytest.approx(n0 * FS / 2, rel=0.01)
    spec = estimate_psd(sig, REAL)
    inner = spec.psd[1:-1]
    assert abs(inner.mean() / n0 - 1) < 3 / math.sqrt(spec.n_averages * inner.size)


def test_carrier_power_gated_parseval():
    tr = sample_trajectory(TelegraphParams(0.05, 0.02), 5.0, seed=4)
    sig = synthesize_beat(tr, HeterodyneParams(carrier_amplitude=2.0))
    p_hat = tr.bright_time() / tr.duration
    assert np.mean(sig.samples**2) == pytest.approx(2.0 * p_hat, rel=1e-3)


def test_chunking_does_not_change_the_record():
    tr = sample_trajectory(TelegraphParams(0.05, 0.02), 3.0, seed=4)
    het = HeterodyneParams(noise_density=1e-6, phase_walk_rate=10.0, seed=9,
                           acoustic_sidebands=[(50.0, 0.01)])
    a = synthesize_beat(tr, het, chunk_size=2**20)
    b = synthesize_beat(tr, het, chunk_size=12345)
    assert np.array_equal(a.samples, b.samples)
    c = synthesize_beat(tr, het, chunk_size=2**20)
    assert np.array_equal(a.samples, c.samples)
    quiet = HeterodyneParams(noise_density=1e-6, seed=9)
    a = synthesize_beat(tr, quiet, chunk_size=2**20)
    b = synthesize_beat(tr, quiet, chunk_size=54321)
    assert np.array_equal(a.samples, b.samples)


def test_snr_calibration():
    dR = window_response("hann", 1024, FS / 368).fwhm
    het = HeterodyneParams(noise_density=noise_density_for_snr(0.5, 1e3, dR), seed=2)
    bb = downconvert(synthesize_beat(JumpTrajectory.constant(60.0), het), 368)
    spec = estimate_psd(bb, WelchConfig())
    assert peak_snr_db(spec) == pytest.approx(30.0, abs=1.0)


def test_sidebands():
    het = HeterodyneParams(acoustic_sidebands=[(50.0, 0.1)], noise_density=1e-8)
    bb = downconvert(synthesize_beat(JumpTrajectory.constant(20.0), het), 368)
    spec = estimate_psd(bb, WelchConfig())
    for off in (-50.0, 50.0):
        k = np.argmin(np.abs(spec.freq_offsets - off))
        ratio = spec.psd[k - 2 : k + 3].max() / spec.psd.max()
        assert ratio == pytest.approx(0.01, rel=0.05)


def _line_fraction(rate):
    het = HeterodyneParams(phase_walk_rate=rate, seed=5)
    bb = downconvert(synthesize_beat(JumpTrajectory.constant(30.0), het), 368)
    spec = estimate_psd(bb, WelchConfig())
    core = np.abs(spec.freq_offsets) <= 1.5 * spec.delta_R
    return spec, spec.psd[core].sum() / spec.psd.sum()


def test_no_walk_line_is_resolution_limited():
    spec, _ = _line_fraction(0.0)
    half = spec.psd.max() / 2
    above = spec.freq_offsets[spec.psd >= half]
    # the -3 dB points of the sampled line straddle at most a bin each side
    width = above.max() - above.min()
    assert width <= spec.delta_R + 2 * spec.df
    resp = spec.response
    nu = spec.freq_offsets
    expected = resp.line(nu) * 0.5
    near = np.abs(nu) < 3
    np.testing.assert_allclose(spec.psd[near], expected[near], rtol=1e-3, atol=1e-9 * expected.max())


def test_walk_broadens_monotonically():
    fr = [_line_fraction(r)[1] for r in (0.0, 2 * np.pi * 2, 2 * np.pi * 10)]
    assert fr[0] > fr[1] > fr[2]
    assert fr[0] > 0.99


def test_bandpass_passband_and_stopband():
    fs, n = FS, 2**18
    t = np.arange(n) / fs
    bw = 4e3
    for f, lo, hi in [(70e3, -0.5, 0.5), (71.2e3, -0.5, 0.5), (70e3 + 2 * bw + bw / 2, -np.inf, -40)]:
        x = SampledSignal(fs, np.cos(2 * np.pi * f * t), 70e3)
        y = bandpass(x, 70e3, bw).samples[5000:-5000]
        gain = _db(np.sqrt(2 * np.mean(y**2)))
        assert lo < gain < hi, (f, gain)
    for f in (70e3 - 2 * bw - bw / 2,):
        x = SampledSignal(fs, np.cos(2 * np.pi * f * t), 70e3)
        y = bandpass(x, 70e3, bw).samples[5000:-5000]
        assert _db(np.sqrt(2 * np.mean(y**2))) < -40


def test_bandpass_preserves_phase():
    t = np.arange(2**16) / FS
    x = np.cos(2 * np.pi * 70e3 * t + 0.7)
    y = bandpass(SampledSignal(FS, x, 70e3), 70e3, 4e3).samples
    np.testing.assert_allclose(y[3000:-3000], x[3000:-3000], atol=0.06)


def test_bandpass_white_noise_variance():
    n0 = 1e-6
    x = np.random.default_rng(3).normal(0, math.sqrt(n0 * FS / 2), 2**20)
    y = bandpass(SampledSignal(FS, x), 70e3, 4e3).samples
    # oracle: N0 times the filter's noise bandwidth, (fs / 2) * sum(h^2)
    impulse = np.zeros(2**14)
    impulse[2**13] = 1.0
    h = bandpass(SampledSignal(FS, impulse), 70e3, 4e3).samples
    noise_bw = FS / 2 * np.sum(h**2)
    assert y.var() == pytest.approx(n0 * noise_bw, rel=0.02)
    # the -6 dB edges put the noise bandwidth a few percent under nominal
    assert noise_bw == pytest.approx(4e3, rel=0.075)


def test_bandpass_errors():
    x = SampledSignal(FS, np.zeros(1000))
    with pytest.raises(ValueError):
        bandpass(x, 1e3, 4e3)
    with pytest.raises(ValueError):
        bandpass(x, 130e3, 4e3)
