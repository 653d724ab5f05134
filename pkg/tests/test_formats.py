import hashlib

import numpy as np
import pytest

from qjfluor import formats
from qjfluor.formats import FormatError
from qjfluor.heterodyne import SampledSignal
from qjfluor.jumpstats import detect_periods, make_histogram
from qjfluor.photons import CountTrace, DetectionParams, low_pass, synthesize_counts
from qjfluor.spectral import WelchConfig, estimate_psd
from qjfluor.telegraph import TelegraphParams, sample_trajectory


@pytest.fixture(scope="module")
def record():
    tr = sample_trajectory(TelegraphParams(0.171, 0.021), 5.0, seed=4)
    counts = synthesize_counts(tr, DetectionParams(), 5)
    return tr, counts, low_pass(counts, 1e-3)


def test_trajectory_roundtrip(tmp_path, record):
    tr, *_ = record
    p = tmp_path / "t.txt"
    formats.write_trajectory(p, tr)
    assert formats.read_trajectory(p) == tr
    assert formats.trajectory_from_text(formats.trajectory_to_text(tr)) == tr


def test_trajectory_errors(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("5.0 bright\n1.0\nabc\n")
    with pytest.raises(FormatError, match=r"t\.txt:3"):
        formats.read_trajectory(p)
    p.write_text("5.0 grey\n")
    with pytest.raises(FormatError, match=":1"):
        formats.read_trajectory(p)
    p.write_text("5.0 bright\n2.0\n1.0\n")
    with pytest.raises(FormatError):
        formats.read_trajectory(p)


def test_count_trace_roundtrip(tmp_path, record):
    _, counts, _ = record
    p = tmp_path / "c.csv"
    formats.write_count_trace(p, counts)
    back = formats.read_count_trace(p)
    assert back.bin_width == counts.bin_width and back.origin_time == counts.origin_time
    assert np.array_equal(back.counts, counts.counts)


def test_count_trace_errors_name_file_and_line(tmp_path, record):
    _, counts, _ = record
    p = tmp_path / "c.csv"
    formats.write_count_trace(p, CountTrace(1e-3, [1, 2, 3]))
    lines = p.read_text().splitlines()
    for bad, line in (("0.001,x", 3), ("0.001,1,2", 3), ("0.001,-1", 3), ("0.001,1.5", 3)):
        p.write_text("\n".join(lines[:2] + [bad] + lines[3:]) + "\n")
        with pytest.raises(FormatError) as e:
            formats.read_count_trace(p)
        assert e.value.path == str(p) and e.value.line == line
    p.write_text("0,1\n")
    with pytest.raises(FormatError, match="header"):
        formats.read_count_trace(p)
    p.write_text("# kind=counts origin_time=0\n0,1\n")
    with pytest.raises(FormatError, match="bin_width"):
        formats.read_count_trace(p)
    p.write_text("")
    with pytest.raises(FormatError, match="empty"):
        formats.read_count_trace(p)


def test_intensity_roundtrip(tmp_path, record):
    *_, trace = record
    p = tmp_path / "i.csv"
    formats.write_intensity_trace(p, trace)
    back = formats.read_intensity_trace(p)
    assert back.sample_period == trace.sample_period
    assert np.array_equal(back.values, trace.values)


def test_beat_roundtrip_and_digest(tmp_path):
    x = np.random.default_rng(0).standard_normal(10_001)
    sig = SampledSignal(2.0**18, x, 70e3)
    p = tmp_path / "b.bin"
    digest = formats.write_beat(p, sig)
    assert digest == formats.sha256_file(p)
    assert formats.beat_info(p) == (2.0**18, x.size)
    h = hashlib.sha256()
    chunks = list(formats.iter_beat_file(p, chunk_size=999, hasher=h))
    assert h.hexdigest() == digest
    assert np.array_equal(np.concatenate(chunks), x)
    back = formats.read_beat(p, 70e3)
    assert back.sample_rate == sig.sample_rate and np.array_equal(back.samples, x)


def test_streamed_writer_matches_single_write(tmp_path):
    x = np.random.default_rng(1).standard_normal(5000)
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    d1 = formats.write_beat(a, SampledSignal(1e4, x, 0.0))
    w = formats.BeatWriter(b, 1e4)
    for part in np.array_split(x, 7):
        w.write(part)
    assert w.close() == d1 and w.n_samples == x.size


def test_beat_errors(tmp_path):
    p = tmp_path / "b.bin"
    formats.write_beat(p, SampledSignal(1e4, np.zeros(4), 0.0))
    raw = p.read_bytes()
    p.write_bytes(b"NOTABEAT" + raw[8:])
    with pytest.raises(FormatError, match="magic"):
        formats.beat_info(p)
    p.write_bytes(raw[:10])
    with pytest.raises(FormatError, match="truncated"):
        formats.beat_info(p)
    p.write_bytes(raw + b"\x00")
    with pytest.raises(FormatError, match="whole number"):
        formats.beat_info(p)
    p.write_bytes(raw[:16] + np.array([np.nan], "<f8").tobytes())
    with pytest.raises(FormatError, match="non-finite"):
        list(formats.iter_beat_file(p))


def test_signal_csv_roundtrip(tmp_path):
    sig = SampledSignal(1e3, np.random.default_rng(2).standard_normal(50), 100.0)
    p = tmp_path / "s.csv"
    formats.write_signal_csv(p, sig)
    back = formats.read_signal_csv(p)
    assert back.carrier_hint == 100.0 and np.array_equal(back.samples, sig.samples)


def test_spectrum_roundtrip(tmp_path):
    sig = SampledSignal(1e3, np.random.default_rng(3).standard_normal(4096), 0.0)
    spec = estimate_psd(sig, WelchConfig(segment_length=256, decimation=None))
    p = tmp_path / "s.csv"
    formats.write_spectrum(p, spec)
    back = formats.read_spectrum(p)
    assert np.array_equal(back.psd, spec.psd) and np.array_equal(back.freq_offsets, spec.freq_offsets)
    for k in ("delta_R", "enbw", "n_averages", "window", "segment_length", "sample_rate",
              "carrier", "two_sided"):
        assert getattr(back, k) == getattr(spec, k)


def test_periods_and_histogram_roundtrip(tmp_path, record):
    *_, trace = record
    pl = detect_periods(trace)
    p = tmp_path / "p.csv"
    formats.write_periods(p, pl)
    back = formats.read_periods(p)
    assert back.states.tolist() == pl.states.tolist()
    assert np.array_equal(back.durations, pl.durations) and back.no_jumps == pl.no_jumps
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:3] + ["grey,0,1"]) + "\n")
    with pytest.raises(FormatError) as e:
        formats.read_periods(p)
    assert e.value.line == 4
    h = make_histogram(pl, "dark", 0.005, 0.005)
    formats.write_histogram(p, h)
    hb = formats.read_histogram(p)
    assert np.array_equal(hb.bin_edges, h.bin_edges) and np.array_equal(hb.counts, h.counts)


def test_json_is_deterministic(tmp_path):
    obj = {"b": np.float64(1.5), "a": [np.int64(2), float("nan")], "c": np.array([1.0, 2.0])}
    s = formats.dumps_json(obj)
    assert s == formats.dumps_json(dict(reversed(list(obj.items()))))
    p = tmp_path / "x.json"
    formats.write_json(p, obj)
    assert formats.read_json(p) == {"a": [2, None], "b": 1.5, "c": [1.0, 2.0]}
    p.write_text("{\n  bad\n}")
    with pytest.raises(FormatError) as e:
        formats.read_json(p)
    assert e.value.line == 2
