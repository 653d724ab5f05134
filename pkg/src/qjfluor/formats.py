"""On-disk formats for trajectories, traces, beat records and spectra.

Text formats carry a single ``#`` header line of ``key=value`` pairs.
The beat record is binary little-endian: an 8-byte magic, the sample rate
as a float64, then float64 samples.
"""

import hashlib
import json
import math
import struct
from pathlib import Path

import numpy as np

from .heterodyne import SampledSignal
from .jumpstats import DurationHistogram, PeriodList
from .photons import CountTrace, IntensityTrace
from .spectral import Spectrum
from .telegraph import JumpTrajectory, State

BEAT_MAGIC = b"QJFBEAT1"
_HEADER = struct.Struct("<8sd")


class FormatError(ValueError):
    """A file does not follow its declared format."""

    def __init__(self, path, line, message):
        self.path, self.line = str(path), line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


def sha256_file(path, block=1 << 22):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        while chunk := f.read(block):
            h.update(chunk)
    return h.hexdigest()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, State):
        return obj.value
    return obj


def dumps_json(obj):
    """Deterministic JSON (sorted keys, non-finite floats as null)."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps_json(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(path, e.lineno, e.msg) from None


def _num(x):
    """Shortest text that round-trips a float exactly."""
    return repr(float(x))


def _header_line(**params):
    parts = []
    for k, v in params.items():
        if isinstance(v, float):
            v = _num(v)
        parts.append(f"{k}={v}")
    return "# " + " ".join(parts) + "\n"


def _parse_header(path, line):
    if not line.startswith("#"):
        raise FormatError(path, 1, "missing '#' header line")
    out = {}
    for tok in line[1:].split():
        if "=" not in tok:
            raise FormatError(path, 1, f"bad header field {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def _need(path, header, key, conv=float):
    if key not in header:
        raise FormatError(path, 1, f"header lacks {key!r}")
    try:
        return conv(header[key])
    except ValueError:
        raise FormatError(path, 1, f"bad value for {key!r}: {header[key]!r}") from None


def _read_rows(path, ncols, lines, start=2):
    rows = []
    for i, line in enumerate(lines, start=start):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split(",")
        if len(parts) != ncols:
            raise FormatError(path, i, f"expected {ncols} columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise FormatError(path, i, f"non-numeric value in {s!r}") from None
    return np.array(rows, dtype=np.float64).reshape(-1, ncols)


def _lines(path):
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError:
        raise FormatError(path, None, "not a text file") from None
    lines = text.splitlines()
    if not lines:
        raise FormatError(path, 1, "empty file")
    return lines


# -- trajectory --------------------------------------------------------------

def trajectory_to_text(traj):
    out = [f"{_num(traj.duration)} {traj.initial_state.value}"]
    out += [_num(t) for t in traj.switch_times]
    return "\n".join(out) + "\n"


def trajectory_from_text(text, path="<string>"):
    lines = text.splitlines()
    if not lines:
        raise FormatError(path, 1, "empty trajectory record")
    head = lines[0].split()
    if len(head) != 2:
        raise FormatError(path, 1, "header must be 'duration_s initial_state'")
    try:
        duration = float(head[0])
        state = State(head[1])
    except ValueError as e:
        raise FormatError(path, 1, str(e)) from None
    times = []
    for i, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s:
            continue
        try:
            times.append(float(s))
        except ValueError:
            raise FormatError(path, i, f"bad switch time {s!r}") from None
    try:
        return JumpTrajectory(duration, state, times)
    except ValueError as e:
        raise FormatError(path, None, str(e)) from None


def write_trajectory(path, traj):
    Path(path).write_text(trajectory_to_text(traj))


def read_trajectory(path):
    return trajectory_from_text(Path(path).read_text(), path)


# -- count / intensity traces -------------------------------------------------

def write_count_trace(path, trace):
    with open(path, "w") as f:
        f.write(_header_line(kind="counts", bin_width=float(trace.bin_width),
                             origin_time=float(trace.origin_time), columns="time_s,counts"))
        for t, c in zip(trace.times, trace.counts):
            f.write(f"{t:.9g},{int(c)}\n")


def read_count_trace(path):
    lines = _lines(path)
    h = _parse_header(path, lines[0])
    bw = _need(path, h, "bin_width")
    origin = _need(path, h, "origin_time")
    rows = _read_rows(path, 2, lines[1:])
    counts = rows[:, 1]
    bad = np.nonzero((counts < 0) | (counts != np.round(counts)))[0]
    if bad.size:
        raise FormatError(path, int(bad[0]) + 2, "counts must be non-negative integers")
    return CountTrace(bw, counts.astype(np.int64), origin)


def write_intensity_trace(path, trace):
    with open(path, "w") as f:
        f.write(_header_line(kind="intensity", sample_period=float(trace.sample_period),
                             origin_time=float(trace.origin_time), columns="time_s,rate_per_s"))
        for t, v in zip(trace.times, trace.values):
            f.write(f"{t:.9g},{_num(v)}\n")


def read_intensity_trace(path):
    lines = _lines(path)
    h = _parse_header(path, lines[0])
    dt = _need(path, h, "sample_period")
    origin = _need(path, h, "origin_time")
    rows = _read_rows(path, 2, lines[1:])
    return IntensityTrace(dt, rows[:, 1], origin)


# -- beat record --------------------------------------------------------------

class BeatWriter:
    """Stream float64 samples to a beat file, hashing as it goes."""

    def __init__(self, path, sample_rate):
        self.path = Path(path)
        self._f = open(self.path, "wb")
        self._h = hashlib.sha256()
        self._write(_HEADER.pack(BEAT_MAGIC, float(sample_rate)))
        self.n_samples = 0

    def _write(self, b):
        self._f.write(b)
        self._h.update(b)

    def write(self, samples):
        b = np.ascontiguousarray(samples, dtype="<f8").tobytes()
        self._write(b)
        self.n_samples += len(samples)

    def close(self):
        self._f.close()
        return self._h.hexdigest()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        if not self._f.closed:
            self._f.close()


def write_beat(path, signal):
    with BeatWriter(path, signal.sample_rate) as w:
        w.write(signal.samples)
        return w.close()


def _beat_header(path, f):
    head = f.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise FormatError(path, None, "truncated beat header")
    magic, fs = _HEADER.unpack(head)
    if magic != BEAT_MAGIC:
        raise FormatError(path, None, f"bad magic {magic!r}")
    if not (math.isfinite(fs) and fs > 0):
        raise FormatError(path, None, f"bad sample rate {fs!r}")
    return fs


def beat_info(path):
    """``(sample_rate, n_samples)`` of a beat file."""
    size = Path(path).stat().st_size
    with open(path, "rb") as f:
        fs = _beat_header(path, f)
    body = size - _HEADER.size
    if body % 8:
        raise FormatError(path, None, "sample data is not a whole number of float64 values")
    return fs, body // 8


def iter_beat_file(path, chunk_size=2**20, hasher=None):
    """Yield sample chunks; optionally update ``hasher`` with the raw bytes."""
    beat_info(path)
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
        if hasher is not None:
            hasher.update(head)
        while True:
            b = f.read(8 * chunk_size)
            if not b:
                break
            if hasher is not None:
                hasher.update(b)
            x = np.frombuffer(b, dtype="<f8")
            if not np.all(np.isfinite(x)):
                raise FormatError(path, None, "non-finite sample in beat record")
            yield x


def read_beat(path, carrier_hint):
    fs, _ = beat_info(path)
    x = np.concatenate(list(iter_beat_file(path)))
    return SampledSignal(fs, x, carrier_hint)


def write_signal_csv(path, signal):
    with open(path, "w") as f:
        f.write(_header_line(kind="signal", sample_rate=float(signal.sample_rate),
                             carrier_hint=float(signal.carrier_hint), columns="time_s,value"))
        for i, v in enumerate(signal.samples):
            f.write(f"{_num(i / signal.sample_rate)},{_num(v)}\n")


def read_signal_csv(path):
    lines = _lines(path)
    h = _parse_header(path, lines[0])
    fs = _need(path, h, "sample_rate")
    carrier = _need(path, h, "carrier_hint")
    rows = _read_rows(path, 2, lines[1:])
    return SampledSignal(fs, rows[:, 1], carrier)


# -- spectra and jump statistics ---------------------------------------------

def write_spectrum(path, spec):
    with open(path, "w") as f:
        f.write(_header_line(
            kind="spectrum", delta_R=float(spec.delta_R), enbw=float(spec.enbw),
            n_averages=int(spec.n_averages), window=spec.window,
            segment_length=int(spec.segment_length), sample_rate=float(spec.sample_rate),
            carrier=float(spec.carrier), two_sided=int(spec.two_sided), columns="offset_Hz,psd",
        ))
        for nu, p in zip(spec.freq_offsets, spec.psd):
            f.write(f"{_num(nu)},{_num(p)}\n")


def read_spectrum(path):
    lines = _lines(path)
    h = _parse_header(path, lines[0])
    rows = _read_rows(path, 2, lines[1:])
    try:
        return Spectrum(
            freq_offsets=rows[:, 0],
            psd=rows[:, 1],
            delta_R=_need(path, h, "delta_R"),
            n_averages=_need(path, h, "n_averages", int),
            enbw=_need(path, h, "enbw"),
            window=h.get("window", "hann"),
            segment_length=_need(path, h, "segment_length", int),
            sample_rate=_need(path, h, "sample_rate"),
            carrier=_need(path, h, "carrier"),
            two_sided=bool(_need(path, h, "two_sided", int)),
        )
    except ValueError as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(path, None, str(e)) from None


def write_periods(path, periods):
    with open(path, "w") as f:
        f.write(_header_line(kind="periods", trace_duration=float(periods.trace_duration),
                             no_jumps=int(periods.no_jumps), columns="state,start_s,duration_s"))
        for s, t, d in zip(periods.states, periods.starts, periods.durations):
            f.write(f"{s},{_num(t)},{_num(d)}\n")


def read_periods(path):
    lines = _lines(path)
    h = _parse_header(path, lines[0])
    states, starts, durs = [], [], []
    for i, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s:
            continue
        parts = s.split(",")
        if len(parts) != 3 or parts[0] not in ("bright", "dark"):
            raise FormatError(path, i, f"bad period row {s!r}")
        try:
            starts.append(float(parts[1]))
            durs.append(float(parts[2]))
        except ValueError:
            raise FormatError(path, i, f"bad period row {s!r}") from None
        states.append(parts[0])
    return PeriodList(
        np.array(states, dtype="<U6"), np.array(starts), np.array(durs),
        _need(path, h, "trace_duration"), bool(_need(path, h, "no_jumps", int)),
    )


def write_histogram(path, hist):
    with open(path, "w") as f:
        f.write(_header_line(kind="histogram", t_min=float(hist.t_min),
                             columns="left_s,right_s,count"))
        for lo, hi, c in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts):
            f.write(f"{_num(lo)},{_num(hi)},{int(c)}\n")


def read_histogram(path):
    lines = _lines(path)
    h = _parse_header(path, lines[0])
    rows = _read_rows(path, 3, lines[1:])
    edges = np.concatenate((rows[:, 0], rows[-1:, 1])) if rows.size else np.empty(0)
    return DurationHistogram(edges, rows[:, 2].astype(np.int64), _need(path, h, "t_min"))
