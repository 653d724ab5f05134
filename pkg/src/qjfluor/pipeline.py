"""End-to-end runs: configuration, simulation, analysis and run manifests.

A run directory holds the stage outputs and ``manifest.json``. The manifest
echoes the configuration, lists every file with its SHA-256 digest (paths
relative to the run directory) and carries the predictions, fit results
and pass/fail comparisons. It contains no timestamps, so two runs with the
same configuration and seed produce byte-identical manifests.

Per-stage random seeds are ``derive_seed(master_seed, stage_name)``.
"""

import hashlib
import math
import time
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import formats
from .heterodyne import (
    DEFAULT_SAMPLE_RATE,
    NU_DOWNCONVERTED,
    NU_HETERODYNE,
    HeterodyneParams,
    iter_beat,
    noise_density_for_snr,
)
from .jumpstats import ThresholdConfig, analyze_jumps, make_histogram
from .photons import DEFAULT_STRAY_RATE, RATE_BRIGHT_171, DetectionParams, low_pass, synthesize_counts
from .seeds import derive_seed
from .spectral import (
    Downconverter,
    FitError,
    WelchConfig,
    conditional_psd,
    estimate_psd,
    fit_pedestal,
    oracle_compare,
    peak_snr_db,
    render_expected_psd,
    window_response,
)
from .telegraph import (
    TAU_SPONTANEOUS,
    JumpTrajectory,
    ResolutionWarning,
    TelegraphParams,
    calibrate_rate_model,
    predict_pedestal,
    sample_trajectory,
)

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "StageError",
    "RunConfig",
    "load_config",
    "stage_seed",
    "simulate",
    "analyze",
    "simulate_in_memory",
    "analyze_in_memory",
    "RunResult",
    "check_manifest",
]

MANIFEST = "manifest.json"
#: Calibration endpoints (mW, s) of the dark-period mean vs repump power.
REFERENCE_CALIBRATION = ((2.0, 0.008), (0.2, 0.040))


class ConfigError(ValueError):
    """Invalid or incomplete run configuration (a usage error)."""


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run.

    Exactly one of ``tau_dark`` and ``repump_power`` must be set; with a
    power, ``tau_dark`` follows from the rate model calibrated on
    ``calibration``. ``jumps=False`` simulates a jump-free (always bright)
    emitter while keeping the telegraph parameters as the reference for
    the comparisons. ``snr`` is the ratio carrier power / (N0 * delta_R)
    and fixes ``noise_density`` unless that is given explicitly.
    """

    tau_bright: float = None
    tau_dark: float = None
    repump_power: float = None
    tau_spont: float = TAU_SPONTANEOUS
    calibration: tuple = REFERENCE_CALIBRATION
    jumps: bool = True
    # photon_stream
    rate_bright: float = RATE_BRIGHT_171
    rate_stray: float = DEFAULT_STRAY_RATE
    bin_width: float = 1e-3
    filter_time_constant: float = 1e-3
    # heterodyne
    nu_L: float = NU_DOWNCONVERTED
    sample_rate: float = DEFAULT_SAMPLE_RATE
    carrier_amplitude: float = 1.0
    snr: float = 1e3
    noise_density: float = None
    phase_walk_rate: float = 0.0
    acoustic_sidebands: tuple = ()
    # spectral
    segment_length: int = 1024
    overlap_fraction: float = 0.5
    window: str = "hann"
    decimation: int = 368
    conditional_segment_length: int = 256
    min_bright_factor: float = 5.0
    # jump_stats
    low_fraction: float = 0.3
    high_fraction: float = 0.7
    min_duration: float = 0.005
    histogram_bin: float = 0.005
    n_bootstrap: int = 200
    # run
    duration: float = 600.0
    master_seed: int = 0
    out_dir: str = "run"
    write_beat: bool = True

    def __post_init__(self):
        sb = tuple(tuple(float(v) for v in pair) for pair in self.acoustic_sidebands)
        object.__setattr__(self, "acoustic_sidebands", sb)
        cal = tuple(tuple(float(v) for v in pair) for pair in self.calibration)
        object.__setattr__(self, "calibration", cal)
        if self.tau_bright is None:
            raise ConfigError("tau_bright is required")
        if (self.tau_dark is None) == (self.repump_power is None):
            raise ConfigError("give exactly one of tau_dark and repump_power")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ConfigError(f"duration must be > 0, got {self.duration!r}")
        try:
            self.telegraph()
            self.detection()
            self.heterodyne()
            self.welch()
            self.threshold()
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e)) from None

    # -- derived stage parameters --------------------------------------

    def telegraph(self):
        if self.tau_dark is not None:
            td = float(self.tau_dark)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = calibrate_rate_model(self.calibration, self.tau_spont)
            td = model.tau_dark(float(self.repump_power))
        return TelegraphParams(float(self.tau_bright), td)

    def detection(self):
        return DetectionParams(self.rate_bright, self.rate_stray, self.bin_width)

    def welch(self):
        return WelchConfig(
            segment_length=self.segment_length,
            overlap_fraction=self.overlap_fraction,
            window=self.window,
            decimation=self.decimation,
        )

    def conditional_welch(self):
        return replace(self.welch(), segment_length=self.conditional_segment_length)

    @property
    def delta_R(self):
        w = self.welch()
        return window_response(w.window, w.segment_length, self.sample_rate / w.decimation).fwhm

    def heterodyne(self):
        het = HeterodyneParams(
            nu_L=self.nu_L,
            sample_rate=self.sample_rate,
            carrier_amplitude=self.carrier_amplitude,
            phase_walk_rate=self.phase_walk_rate,
            acoustic_sidebands=self.acoustic_sidebands,
            seed=stage_seed(self.master_seed, "heterodyne"),
        )
        if self.noise_density is not None:
            n0 = float(self.noise_density)
        elif self.snr is None or self.snr == math.inf:
            n0 = 0.0
        else:
            if not self.snr > 0:
                raise ConfigError("snr must be > 0")
            n0 = noise_density_for_snr(het.carrier_power, self.snr, self.delta_R)
        return replace(het, noise_density=n0)

    def threshold(self):
        return ThresholdConfig(
            low_fraction=self.low_fraction,
            high_fraction=self.high_fraction,
            min_duration=self.min_duration,
        )

    def prediction(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResolutionWarning)
            return predict_pedestal(self.telegraph(), self.delta_R)

    def to_dict(self):
        d = asdict(self)
        d["acoustic_sidebands"] = [list(p) for p in self.acoustic_sidebands]
        d["calibration"] = [list(p) for p in self.calibration]
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**d)


# TOML layout: one flat table per stage.
_SECTIONS = {
    "run": ("duration", "master_seed", "out_dir", "write_beat"),
    "telegraph": ("tau_bright", "tau_dark", "repump_power", "tau_spont", "calibration", "jumps"),
    "photon_stream": ("rate_bright", "rate_stray", "bin_width", "filter_time_constant"),
    "heterodyne": (
        "nu_L", "sample_rate", "carrier_amplitude", "snr", "noise_density",
        "phase_walk_rate", "acoustic_sidebands",
    ),
    "spectral": (
        "segment_length", "overlap_fraction", "window", "decimation",
        "conditional_segment_length", "min_bright_factor",
    ),
    "jump_stats": (
        "low_fraction", "high_fraction", "min_duration", "histogram_bin", "n_bootstrap",
    ),
}
_ALIASES = {("run", "seed"): "master_seed"}


def _flatten_toml(doc, path):
    out = {}
    for section, table in doc.items():
        if section not in _SECTIONS or not isinstance(table, dict):
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, value in table.items():
            name = _ALIASES.get((section, key), key)
            if name not in _SECTIONS[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            out[name] = value
    return out


def load_config(path=None, **overrides):
    """Build a :class:`RunConfig` from a TOML file and keyword overrides.

    Precedence: overrides (command-line flags) > file > defaults. An
    override of ``tau_dark`` clears a ``repump_power`` from the file and
    vice versa, so a flag always wins over the file.
    """
    values = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                doc = tomllib.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from None
        values = _flatten_toml(doc, path)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if "tau_dark" in overrides:
        values.pop("repump_power", None)
    if "repump_power" in overrides:
        values.pop("tau_dark", None)
    values.update(overrides)
    try:
        return RunConfig.from_dict(values)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def config_to_toml(cfg):
    """Render a config as TOML (for ``--config`` round trips)."""
    d = cfg.to_dict()
    lines = []
    for section, keys in _SECTIONS.items():
        lines.append(f"[{section}]")
        for k in keys:
            v = d[k]
            if v is None:
                continue
            if isinstance(v, bool):
                s = "true" if v else "false"
            elif isinstance(v, str):
                s = '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
            elif isinstance(v, list):
                s = "[" + ", ".join("[" + ", ".join(repr(float(x)) for x in p) + "]" for p in v) + "]"
            elif isinstance(v, float) and math.isinf(v):
                s = "inf"
            else:
                s = repr(v)
            lines.append(f"{k} = {s}")
        lines.append("")
    return "\n".join(lines)


def stage_seed(master, stage):
    return derive_seed(master, stage)


# -- in-memory stages ---------------------------------------------------------

@dataclass
class RunResult:
    """In-memory products of a run (no files)."""

    config: RunConfig
    trajectory: JumpTrajectory
    counts: object = None
    baseband: object = None
    samples_sha256: str = None
    n_samples: int = 0
    timings: dict = field(default_factory=dict)


def simulate_trajectory(cfg):
    if cfg.jumps:
        return sample_trajectory(cfg.telegraph(), cfg.duration, stage_seed(cfg.master_seed, "trajectory"))
    return JumpTrajectory.constant(cfg.duration)


def simulate_in_memory(cfg, beat_sink=None):
    """Run the synthesis stages, down-converting the beat on the fly.

    ``beat_sink(chunk)`` receives every raw beat chunk (used to stream it
    to disk). The raw record is never held in memory as a whole.
    """
    t = time.perf_counter()
    traj = simulate_trajectory(cfg)
    counts = synthesize_counts(traj, cfg.detection(), stage_seed(cfg.master_seed, "photon_stream"))
    het = cfg.heterodyne()
    w = cfg.welch()
    dc = Downconverter(het.sample_rate, het.nu_L, w.decimation)
    h = hashlib.sha256()
    n = 0
    for _, chunk in iter_beat(traj, het):
        h.update(np.ascontiguousarray(chunk, dtype="<f8").tobytes())
        if beat_sink is not None:
            beat_sink(chunk)
        dc.push(chunk)
        n += chunk.size
    bb = dc.finish()
    return RunResult(
        config=cfg,
        trajectory=traj,
        counts=counts,
        baseband=bb,
        samples_sha256=h.hexdigest(),
        n_samples=n,
        timings={"simulate_s": time.perf_counter() - t},
    )


def _check(name, measured, target, tolerance, passed, **extra):
    d = {"name": name, "measured": measured, "target": target, "tolerance": tolerance, "passed": bool(passed)}
    d.update(extra)
    return d


def _rel_check(name, measured, target, rel_tol):
    ok = math.isfinite(measured) and abs(measured - target) <= rel_tol * abs(target)
    return _check(name, measured, target, f"{rel_tol:.0%} relative", ok)


def analyze_in_memory(cfg, traj, counts, baseband):
    """Spectral and jump-statistics analysis; returns ``(results, checks, products)``.

    ``results`` is JSON-ready, ``checks`` a list of comparison records and
    ``products`` holds the spectra, fits and traces for writing plot files.
    Fit failures are recorded as structured errors, not raised.
    """
    het = cfg.heterodyne()
    pred = cfg.prediction()
    results, checks, products = {}, [], {}

    # jump statistics
    trace = low_pass(counts, cfg.filter_time_constant)
    products["intensity"] = trace
    js, periods = analyze_jumps(
        trace, cfg.threshold(), n_bootstrap=cfg.n_bootstrap,
        seed=stage_seed(cfg.master_seed, "jump_stats"),
    )
    products["periods"] = periods
    results["jump_stats"] = dict(js.to_dict(), no_jumps=periods.no_jumps, n_periods=len(periods))
    try:
        products["histogram"] = make_histogram(periods, "dark", cfg.histogram_bin, cfg.min_duration)
    except ValueError:
        products["histogram"] = None

    # spectrum and fit
    spec = estimate_psd(baseband, cfg.welch())
    products["spectrum"] = spec
    products["expected"] = render_expected_psd(spec, pred, het.carrier_power, het.noise_density)
    results["spectrum"] = {
        "delta_R_Hz": spec.delta_R,
        "enbw_Hz": spec.enbw,
        "n_averages": spec.n_averages,
        "span_Hz": spec.span,
        "peak_snr_dB": peak_snr_db(spec),
    }
    try:
        fit = fit_pedestal(spec, pred)
        results["pedestal_fit"] = fit.to_dict()
    except (FitError, ValueError) as e:
        fit = None
        results["pedestal_fit"] = {"error": str(e)}
    products["fit"] = fit

    if cfg.jumps:
        band = (2 * spec.delta_R, min(5 * pred.delta_L, spec.span))
        try:
            rep = oracle_compare(spec, pred, band, het.carrier_power, het.noise_density)
            results["oracle"] = rep.to_dict()
            checks.append(_check(
                "oracle_rms", rep.rms_deviation, 0.0, f"<= {rep.tolerance:.4g}", rep.passed,
            ))
        except ValueError as e:
            results["oracle"] = {"error": str(e)}
            checks.append(_check("oracle_rms", None, 0.0, None, False, error=str(e)))

    if fit is None:
        checks.append(_check("pedestal_fit", None, None, None, False, error=results["pedestal_fit"]["error"]))
    elif cfg.jumps:
        checks.append(_rel_check("delta_L", fit.delta_L_hat, pred.delta_L, 0.15))
        checks.append(_rel_check("A_L", fit.A_L_hat, pred.A_L, 0.20))
        checks.append(_rel_check("weight_ratio", fit.weight_ratio_hat, pred.weight_ratio, 0.20))
    else:
        limit = 0.2 * pred.weight_ratio
        checks.append(_check(
            "pedestal_upper_bound", fit.weight_ratio_upper, 0.0, f"< {limit:.4g}",
            fit.weight_ratio_upper < limit,
        ))

    # bright-only spectrum
    if cfg.jumps and fit is not None:
        min_bright = cfg.min_bright_factor * cfg.telegraph().tau_bright
        try:
            cw = cfg.conditional_welch()
            cspec = conditional_psd(baseband, traj, cw, min_bright)
            uspec = estimate_psd(baseband, cw)
            cfit = fit_pedestal(cspec, pred)
            ufit = fit_pedestal(uspec, pred)
            products["conditional"] = cspec
            cond_w = cfit.weight_ratio_upper if cfit.degenerate else cfit.weight_ratio_hat
            ref_w = ufit.weight_ratio_hat
            results["bright_only"] = {
                "min_bright_s": min_bright,
                "n_averages": cspec.n_averages,
                "conditional_fit": cfit.to_dict(),
                "unconditioned_fit": ufit.to_dict(),
            }
            ok = ref_w > 0 and cond_w * 10 <= ref_w
            checks.append(_check(
                "bright_only_suppression", ref_w / cond_w if cond_w > 0 else math.inf, 10.0,
                ">= 10x", ok, conditional_weight=cond_w, unconditioned_weight=ref_w,
            ))
        except (FitError, ValueError) as e:
            results["bright_only"] = {"error": str(e)}

    # dark-period statistics
    if cfg.jumps:
        td = cfg.telegraph().tau_dark
        ok = js.n_dark >= 2 and abs(js.tau_dark_hat - td) <= 3 * js.tau_dark_sigma
        checks.append(_check(
            "tau_dark", js.tau_dark_hat, td,
            f"±{3 * js.tau_dark_sigma:.4g} (3 sigma)" if js.n_dark >= 2 else None, ok,
        ))
    else:
        checks.append(_check("no_jumps_detected", bool(periods.no_jumps), True, None, periods.no_jumps))
    return results, checks, products


# -- file-based stages --------------------------------------------------------

def _entry(out, name):
    return {"path": name, "sha256": formats.sha256_file(Path(out) / name)}


def _base_manifest(cfg):
    tp = cfg.telegraph()
    het = cfg.heterodyne()
    return {
        "format": "qjfluor-run/1",
        "software": {"name": "qjfluor", "version": __version__},
        # the run directory is where the manifest lives, not part of the echo
        "config": {k: v for k, v in cfg.to_dict().items() if k != "out_dir"},
        "derived": {
            "tau_bright_s": tp.tau_bright,
            "tau_dark_s": tp.tau_dark,
            "noise_density": het.noise_density,
            "carrier_power": het.carrier_power,
            "nu_heterodyne_Hz": NU_HETERODYNE,
        },
        "seeds": {
            s: stage_seed(cfg.master_seed, s)
            for s in ("trajectory", "photon_stream", "heterodyne", "jump_stats")
        },
        "prediction": cfg.prediction().to_dict(),
        "stages": {},
    }


def simulate(cfg):
    """Write trajectory, count trace and beat record; return the manifest."""
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise StageError("simulate", f"output directory {out} is not writable: {e.strerror}") from None

    writer = formats.BeatWriter(out / "beat.bin", cfg.sample_rate) if cfg.write_beat else None
    try:
        res = simulate_in_memory(cfg, beat_sink=writer.write if writer else None)
    except ValueError as e:
        raise StageError("simulate", str(e)) from None
    finally:
        beat_digest = writer.close() if writer else None

    formats.write_trajectory(out / "trajectory.txt", res.trajectory)
    formats.write_count_trace(out / "counts.csv", res.counts)
    files = {
        "trajectory": _entry(out, "trajectory.txt"),
        "counts": _entry(out, "counts.csv"),
    }
    if writer:
        files["beat"] = {"path": "beat.bin", "sha256": beat_digest}
    manifest = _base_manifest(cfg)
    manifest["stages"]["simulate"] = {
        "files": files,
        "summary": {
            "n_switches": res.trajectory.n_switches,
            "bright_fraction": res.trajectory.bright_fraction(),
            "n_samples": res.n_samples,
            "samples_sha256": res.samples_sha256,
        },
    }
    formats.write_json(out / MANIFEST, manifest)
    return manifest


def load_manifest(run_dir):
    path = Path(run_dir) / MANIFEST
    if not path.exists():
        raise StageError("analyze", f"no {MANIFEST} in {run_dir}")
    return formats.read_json(path)


def check_manifest(run_dir, manifest=None, skip=("beat",)):
    """Raise :class:`StageError` when a listed file is missing or altered.

    Files named in ``skip`` are not re-hashed here (the beat record is
    verified while it is streamed).
    """
    manifest = load_manifest(run_dir) if manifest is None else manifest
    for stage, info in manifest.get("stages", {}).items():
        for key, entry in info.get("files", {}).items():
            path = Path(run_dir) / entry["path"]
            if not path.exists():
                raise StageError(stage, f"missing file {entry['path']}")
            if key in skip:
                continue
            if formats.sha256_file(path) != entry["sha256"]:
                raise StageError(stage, f"digest mismatch for {entry['path']}")
    return manifest


def analyze(run_dir):
    """Analyze a simulated run directory and update its manifest.

    Returns the manifest; the overall verdict is ``manifest["passed"]``.
    """
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    sim = manifest.get("stages", {}).get("simulate")
    if sim is None:
        raise StageError("analyze", "manifest has no simulate stage")
    check_manifest(run_dir, {"stages": {"simulate": sim}})
    cfg = RunConfig.from_dict(manifest["config"])
    files = sim["files"]
    traj = formats.read_trajectory(run_dir / files["trajectory"]["path"])
    counts = formats.read_count_trace(run_dir / files["counts"]["path"])
    if "beat" not in files:
        raise StageError("analyze", "run has no beat record (write_beat = false)")
    beat_path = run_dir / files["beat"]["path"]
    fs, _ = formats.beat_info(beat_path)
    if fs != cfg.sample_rate:
        raise StageError("analyze", f"beat sample rate {fs} differs from config {cfg.sample_rate}")
    h = hashlib.sha256()
    dc = Downconverter(fs, cfg.nu_L, cfg.decimation)
    for chunk in formats.iter_beat_file(beat_path, hasher=h):
        dc.push(chunk)
    if h.hexdigest() != files["beat"]["sha256"]:
        raise StageError("analyze", f"digest mismatch for {files['beat']['path']}")
    bb = dc.finish()

    results, checks, products = analyze_in_memory(cfg, traj, counts, bb)
    written = _write_products(run_dir, cfg, products)
    formats.write_json(run_dir / "results.json", {"results": results, "checks": checks})
    written["results"] = "results.json"
    manifest["stages"]["analyze"] = {
        "files": {k: _entry(run_dir, v) for k, v in sorted(written.items())},
    }
    manifest["results"] = results
    manifest["checks"] = checks
    manifest["passed"] = all(c["passed"] for c in checks)
    formats.write_json(run_dir / MANIFEST, manifest)
    return manifest


_GNUPLOT = """\
# gnuplot script: spectrum with the predicted line + pedestal, and the
# dark-period histogram.
set datafile separator ","
set terminal pngcairo size 900,600
set output "spectrum.png"
set logscale y
set xlabel "offset from carrier (Hz)"
set ylabel "PSD (power/Hz)"
set xrange [-{xr}:{xr}]
plot "spectrum.csv" using 1:2 with lines title "estimated", \\
     "expected.csv" using 1:2 with lines title "predicted"
{hist}"""

_GNUPLOT_HIST = """\
set output "dark_histogram.png"
unset xrange
set xlabel "dark period (s)"
set ylabel "count"
plot "dark_histogram.csv" using (($1+$2)/2):3 with boxes title "dark periods"
"""


def _write_products(run_dir, cfg, products):
    written = {}
    spec = products["spectrum"]
    formats.write_spectrum(run_dir / "spectrum.csv", spec)
    written["spectrum"] = "spectrum.csv"
    with open(run_dir / "expected.csv", "w") as f:
        f.write("# kind=expected columns=offset_Hz,psd\n")
        for nu, p in zip(spec.freq_offsets, products["expected"]):
            f.write(f"{float(nu)!r},{float(p)!r}\n")
    written["expected"] = "expected.csv"
    if products.get("conditional") is not None:
        formats.write_spectrum(run_dir / "spectrum_bright.csv", products["conditional"])
        written["spectrum_bright"] = "spectrum_bright.csv"
    formats.write_intensity_trace(run_dir / "intensity.csv", products["intensity"])
    written["intensity"] = "intensity.csv"
    formats.write_periods(run_dir / "periods.csv", products["periods"])
    written["periods"] = "periods.csv"
    hist = products.get("histogram")
    if hist is not None:
        formats.write_histogram(run_dir / "dark_histogram.csv", hist)
        written["dark_histogram"] = "dark_histogram.csv"
    xr = min(spec.span, 10 * cfg.prediction().delta_L)
    script = _GNUPLOT.format(xr=f"{xr:.1f}", hist=_GNUPLOT_HIST if hist is not None else "")
    (run_dir / "plot.gp").write_text(script)
    written["plot"] = "plot.gp"
    return written
