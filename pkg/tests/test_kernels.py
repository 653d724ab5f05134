"""The compiled kernels and the numpy fallback must agree."""

import numpy as np
import pytest

from qjfluor import _fallback, kernels

compiled = pytest.importorskip("qjfluor._kernels")


@pytest.fixture
def switches():
    rng = np.random.default_rng(4)
    return np.cumsum(rng.exponential(0.01, 400))


def test_backend_flag():
    assert kernels.BACKEND in ("compiled", "python")


@pytest.mark.parametrize("n0", [0, 17, 123456])
@pytest.mark.parametrize("initial", [True, False])
def test_gate_on_grid(switches, n0, initial):
    dt = 1 / 2**12
    a = compiled.gate_on_grid(switches, initial, n0, dt, 5000)
    b = _fallback.gate_on_grid(switches, initial, n0, dt, 5000)
    assert a.dtype == b.dtype == np.uint8
    assert np.array_equal(a, b)


def test_gate_on_exact_switch_instant():
    s = np.array([0.25, 0.5])
    for mod in (compiled, _fallback):
        g = mod.gate_on_grid(s, True, 0, 0.25, 4)
        assert g.tolist() == [1, 0, 1, 1]


@pytest.mark.parametrize("initial", [True, False])
def test_bright_time_in_bins(switches, initial):
    n = int(switches[-1] / 1e-3) + 5
    a = compiled.bright_time_in_bins(switches, initial, 1e-3, n)
    b = _fallback.bright_time_in_bins(switches, initial, 1e-3, n)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    assert np.all(a >= -1e-15) and np.all(a <= 1e-3 + 1e-15)


def test_bright_time_total(switches):
    # integrates the gate exactly: compare with the sojourn sum
    n = int(switches[-1] / 1e-3)
    b = compiled.bright_time_in_bins(switches, True, 1e-3, n)
    edges = np.concatenate(([0.0], switches))
    durations = np.diff(np.minimum(edges, n * 1e-3))
    assert b.sum() == pytest.approx(durations[0::2].sum(), abs=1e-10)


def test_single_pole():
    u = np.random.default_rng(1).poisson(30, 10000).astype(float) * 1e3
    for alpha in (0.01, 0.632, 1.0):
        np.testing.assert_allclose(
            compiled.single_pole(u, alpha), _fallback.single_pole(u, alpha), rtol=1e-12
        )
    assert compiled.single_pole(np.empty(0), 0.5).size == 0


def test_hysteresis():
    v = np.sin(np.linspace(0, 60, 20000)) + 0.3 * np.random.default_rng(3).normal(size=20000)
    for init in (0, 1):
        a = compiled.hysteresis(v, -0.4, 0.4, init)
        b = _fallback.hysteresis(v, -0.4, 0.4, init)
        assert np.array_equal(a, b)


@pytest.mark.parametrize("walk", [False, True])
def test_add_gated_tone(switches, walk):
    n, n0, ratio = 300000, 98765, 70e3 / 2**18
    gate = compiled.gate_on_grid(switches, True, n0, 2.0**-18, n)
    w = np.cumsum(np.random.default_rng(5).normal(0, 1e-3, n)) if walk else None
    a = np.zeros(n)
    b = np.zeros(n)
    compiled.add_gated_tone(a, gate, n0, ratio, 0.3, 1.7, w)
    _fallback.add_gated_tone(b, gate, n0, ratio, 0.3, 1.7, w)
    # the compiled phasor recurrence is re-anchored every 1024 samples
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-11)


@pytest.mark.parametrize("factor", [1, 46, 368])
def test_mix_boxcar(factor):
    x = np.random.default_rng(6).normal(size=200003)
    a = compiled.mix_boxcar(x, 555, 70e3 / 2**18, factor)
    b = _fallback.mix_boxcar(x, 555, 70e3 / 2**18, factor)
    assert a.shape == b.shape == (200003 // factor,)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-11)
