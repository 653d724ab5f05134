import math

import numpy as np
import pytest

from qjfluor.photons import (
    RATE_BRIGHT_171,
    CountTrace,
    DetectionParams,
    low_pass,
    synthesize_counts,
)
from qjfluor.telegraph import JumpTrajectory, State, TelegraphParams, sample_trajectory


def test_validation():
    with pytest.raises(ValueError):
        DetectionParams(rate_bright=-1)
    with pytest.raises(ValueError):
        DetectionParams(bin_width=0)
    with pytest.raises(ValueError):
        CountTrace(1e-3, [1, -2])
    with pytest.raises(ValueError):
        synthesize_counts(JumpTrajectory.constant(5e-4), DetectionParams(), 0)


def test_zero_rates_give_zero_counts():
    tr = sample_trajectory(TelegraphParams(0.1, 0.02), 5.0, seed=1)
    c = synthesize_counts(tr, DetectionParams(0.0, 0.0), seed=2)
    assert c.counts.size == 5000 and not c.counts.any()


def test_always_bright_total():
    c = synthesize_counts(JumpTrajectory.constant(60.0), DetectionParams(RATE_BRIGHT_171, 0.0), 3)
    mean = 2.1e6
    assert abs(c.counts.sum() - mean) < 3 * math.sqrt(mean)
    assert c.duration == pytest.approx(60.0)


def test_grand_mean_rate_tracks_duty_cycle():
    p = TelegraphParams(0.171, 0.021)  # p = 0.89
    det = DetectionParams(RATE_BRIGHT_171, 500.0)
    rates = []
    for seed in range(10):
        tr = sample_trajectory(p, 60.0, seed=seed)
        rates.append(synthesize_counts(tr, det, seed=100 + seed).counts.mean() / det.bin_width)
    expected = p.duty_cycle * det.rate_bright + det.rate_stray
    # run-to-run spread is dominated by the telegraph fluctuations
    se = np.std(rates, ddof=1) / math.sqrt(len(rates))
    assert abs(np.mean(rates) - expected) < 3 * se


def test_partial_bins_exact():
    tr = JumpTrajectory(0.005, State.BRIGHT, [0.0025])
    det = DetectionParams(1e9, 0.0, 1e-3)
    c = synthesize_counts(tr, det, 0)
    # bin 2 is half bright: its mean is 5e5 counts
    assert c.counts[2] == pytest.approx(5e5, rel=5 * 5e5**-0.5)
    assert c.counts[3] == 0


def test_poisson_dispersion():
    c = synthesize_counts(JumpTrajectory.constant(100.0), DetectionParams(2e4, 500.0), 7)
    x = c.counts
    assert x.size >= 1e5
    assert 0.9 < x.var() / x.mean() < 1.1


def test_low_pass_dc_and_init():
    c = CountTrace(1e-3, np.full(100, 35))
    y = low_pass(c, 1e-3).values
    np.testing.assert_allclose(y, 3.5e4)
    with pytest.raises(ValueError):
        low_pass(c, 0.0)
    with pytest.raises(ValueError):
        low_pass(CountTrace(1e-3, np.empty(0, dtype=int)), 1e-3)


def test_low_pass_convergence():
    counts = np.zeros(50, dtype=int)
    counts[1:] = 35
    y = low_pass(CountTrace(1e-3, counts), 1e-3).values
    assert abs(y[6] / 3.5e4 - 1) < 0.01  # 5 time constants after the step


def test_low_pass_impulse_response():
    counts = np.zeros(30, dtype=int)
    counts[5] = 1000
    y = low_pass(CountTrace(1e-4, counts), 1e-3).values
    tail = y[6:25]
    slope = np.polyfit(np.arange(tail.size) * 1e-4, np.log(tail), 1)[0]
    assert -1 / slope == pytest.approx(1e-3, rel=1e-9)


def test_low_pass_fall_time():
    bw, tau = 1e-4, 1e-3
    counts = np.concatenate((np.full(100, 3.5), np.zeros(200))).astype(int)  # 3.5e4 /s step down
    y = low_pass(CountTrace(bw, counts), tau).values
    r = y / y[99]
    t90 = np.argmax(r < 0.9) * bw
    t10 = np.argmax(r < 0.1) * bw
    assert abs((t10 - t90) - 2.2 * tau) <= bw + 0.01 * tau


def test_low_pass_linear_time_invariant():
    rng = np.random.default_rng(8)
    a = rng.poisson(20, 500)
    b = rng.poisson(5, 500)
    ya = low_pass(CountTrace(1e-3, a), 2e-3).values
    yb = low_pass(CountTrace(1e-3, b), 2e-3).values
    yab = low_pass(CountTrace(1e-3, a + b), 2e-3).values
    np.testing.assert_allclose(yab, ya + yb, rtol=1e-12)
    # a delayed input (with a matching initial level) gives a delayed output
    shifted = np.concatenate((np.full(10, a[0]), a))
    ys = low_pass(CountTrace(1e-3, shifted), 2e-3).values
    np.testing.assert_allclose(ys[10:], ya, rtol=1e-12)
