import hashlib
import json
import os

import numpy as np
import pytest

from qjfluor import formats
from qjfluor.pipeline import (
    ConfigError,
    RunConfig,
    StageError,
    analyze,
    analyze_in_memory,
    config_to_toml,
    load_config,
    simulate,
    simulate_in_memory,
)
from qjfluor.seeds import derive_seed


def _cfg(tmp_path, **kw):
    base = dict(tau_bright=0.160, tau_dark=0.039, duration=10.0, master_seed=3,
                out_dir=str(tmp_path / "run"), n_bootstrap=50)
    base.update(kw)
    return RunConfig(**base)


def test_exactly_one_of_tau_dark_and_power():
    with pytest.raises(ConfigError):
        RunConfig(tau_bright=0.1)
    with pytest.raises(ConfigError):
        RunConfig(tau_bright=0.1, tau_dark=0.02, repump_power=1.0)
    with pytest.raises(ConfigError):
        RunConfig(tau_dark=0.02)
    cfg = RunConfig(tau_bright=0.1, repump_power=0.4)
    assert cfg.telegraph().tau_dark == pytest.approx(0.0250, abs=1e-4)


def test_invalid_values_are_config_errors():
    for kw in ({"duration": 0.0}, {"duration": -1.0}, {"tau_dark": -0.01}, {"snr": -1.0},
               {"segment_length": 1000}, {"low_fraction": 0.9}):
        with pytest.raises(ConfigError):
            RunConfig(**{"tau_bright": 0.1, "tau_dark": 0.02, **kw})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"tau_bright": 0.1, "tau_dark": 0.02, "bogus": 1})


def test_toml_and_precedence(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("[run]\nseed = 7\nduration = 30.0\n[telegraph]\ntau_bright = 0.171\n"
                 "repump_power = 0.4\n[heterodyne]\nsnr = 100.0\n")
    cfg = load_config(p)
    assert (cfg.master_seed, cfg.duration, cfg.snr, cfg.repump_power) == (7, 30.0, 100.0, 0.4)
    cfg = load_config(p, tau_dark=0.021, duration=5.0, master_seed=None)
    assert cfg.tau_dark == 0.021 and cfg.repump_power is None
    assert cfg.duration == 5.0 and cfg.master_seed == 7
    p.write_text("[telegraph]\ntau_bright = 0.1\ntau_dark = 0.02\n")
    assert load_config(p, repump_power=2.0).tau_dark is None
    p.write_text("[telegraph]\ntau_brite = 0.1\n")
    with pytest.raises(ConfigError, match="tau_brite"):
        load_config(p)
    p.write_text("[nonsense]\nx = 1\n")
    with pytest.raises(ConfigError):
        load_config(p)
    p.write_text("not = [toml")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


def test_toml_roundtrip(tmp_path):
    cfg = RunConfig(tau_bright=0.171, tau_dark=0.021, acoustic_sidebands=((500.0, 0.01),),
                    phase_walk_rate=2.0, jumps=False)
    p = tmp_path / "c.toml"
    p.write_text(config_to_toml(cfg))
    assert load_config(p) == cfg


def test_stage_seeds_are_independent():
    seeds = {s: derive_seed(0, s) for s in ("trajectory", "photon_stream", "heterodyne", "jump_stats")}
    assert len(set(seeds.values())) == 4
    assert derive_seed(0, "trajectory") == derive_seed(0, "trajectory") != derive_seed(1, "trajectory")


def test_simulate_is_deterministic(tmp_path):
    m1 = simulate(_cfg(tmp_path, out_dir=str(tmp_path / "a")))
    m2 = simulate(_cfg(tmp_path, out_dir=str(tmp_path / "b")))
    assert m1 == m2
    for name in ("trajectory.txt", "counts.csv", "beat.bin", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    m3 = simulate(_cfg(tmp_path, out_dir=str(tmp_path / "c"), master_seed=4))
    assert m3["stages"]["simulate"]["files"] != m1["stages"]["simulate"]["files"]


def test_beat_digest_matches_in_memory(tmp_path):
    cfg = _cfg(tmp_path, duration=2.0)
    m = simulate(cfg)
    res = simulate_in_memory(cfg)
    path = tmp_path / "run" / "beat.bin"
    assert m["stages"]["simulate"]["files"]["beat"]["sha256"] == formats.sha256_file(path)
    # the summary digest covers the samples only, without the file header
    assert m["stages"]["simulate"]["summary"]["samples_sha256"] == res.samples_sha256
    samples = hashlib.sha256(path.read_bytes()[16:]).hexdigest()
    assert samples == res.samples_sha256


def test_analyze_end_to_end(tmp_path):
    cfg = _cfg(tmp_path)
    simulate(cfg)
    m = analyze(cfg.out_dir)
    names = {c["name"] for c in m["checks"]}
    assert {"delta_L", "A_L", "weight_ratio", "oracle_rms", "tau_dark"} <= names
    assert m["passed"] is True
    run = tmp_path / "run"
    for name in ("spectrum.csv", "expected.csv", "periods.csv", "intensity.csv",
                 "dark_histogram.csv", "plot.gp", "results.json"):
        assert (run / name).exists()
    spec = formats.read_spectrum(run / "spectrum.csv")
    assert spec.delta_R == pytest.approx(1.0021, abs=1e-4)
    stored = json.loads((run / "results.json").read_text())
    assert stored["checks"] == json.loads(formats.dumps_json(m["checks"]))
    # analysis of the stored files equals the in-memory path
    res = simulate_in_memory(cfg)
    results, checks, _ = analyze_in_memory(cfg, res.trajectory, res.counts, res.baseband)
    assert json.loads(formats.dumps_json(results)) == stored["results"]


def test_analyze_detects_tampering(tmp_path):
    cfg = _cfg(tmp_path, duration=2.0)
    simulate(cfg)
    run = tmp_path / "run"
    text = (run / "counts.csv").read_text().splitlines()
    text[5] = text[5].split(",")[0] + ",999"
    (run / "counts.csv").write_text("\n".join(text) + "\n")
    with pytest.raises(StageError, match="digest mismatch"):
        analyze(run)


def test_analyze_detects_beat_tampering(tmp_path):
    cfg = _cfg(tmp_path, duration=2.0)
    simulate(cfg)
    p = tmp_path / "run" / "beat.bin"
    raw = bytearray(p.read_bytes())
    raw[100] ^= 1
    p.write_bytes(bytes(raw))
    with pytest.raises(StageError, match="beat.bin"):
        analyze(tmp_path / "run")


def test_analyze_missing_inputs(tmp_path):
    with pytest.raises(StageError, match="manifest"):
        analyze(tmp_path)
    cfg = _cfg(tmp_path, duration=1.0)
    simulate(cfg)
    os.remove(tmp_path / "run" / "trajectory.txt")
    with pytest.raises(StageError, match="missing"):
        analyze(tmp_path / "run")


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(StageError, match="not writable"):
        simulate(_cfg(tmp_path, out_dir=str(blocker / "sub"), duration=1.0))


def test_no_jump_run(tmp_path):
    cfg = _cfg(tmp_path, jumps=False, tau_bright=0.171, tau_dark=0.021)
    simulate(cfg)
    m = analyze(cfg.out_dir)
    checks = {c["name"]: c for c in m["checks"]}
    assert checks["no_jumps_detected"]["passed"]
    assert checks["pedestal_upper_bound"]["passed"]
    assert "delta_L" not in checks
    assert m["results"]["jump_stats"]["n_dark"] == 0


def test_fit_failure_is_recorded(tmp_path):
    # pure noise: no line to fit, the failure is reported and the run fails
    cfg = _cfg(tmp_path, carrier_amplitude=1e-9, noise_density=1e-3, snr=None, duration=2.0)
    simulate(cfg)
    m = analyze(cfg.out_dir)
    assert m["passed"] is False
    assert np.any([not c["passed"] for c in m["checks"]])
