"""Command-line interface: ``qjfluor {predict,simulate,analyze,verify}``.

Exit status: 0 on success, 1 when a stage fails or a check does not pass,
2 on usage errors (bad flags, incomplete configuration, unknown suite).
"""

import argparse
import math
import sys
import warnings

from . import __version__, formats
from .pipeline import ConfigError, StageError, analyze, load_config, simulate
from .telegraph import ResolutionWarning, predict_pedestal

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _add_common(p, run_flags=True):
    p.add_argument("--config", metavar="PATH", help="TOML run configuration")
    p.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    g = p.add_argument_group("overrides (take precedence over --config)")
    g.add_argument("--tau-bright", type=float, metavar="S", help="mean bright period (s)")
    g.add_argument("--tau-dark", type=float, metavar="S", help="mean dark period (s)")
    g.add_argument("--power", type=float, metavar="MW", dest="repump_power",
                   help="repump power (mW); tau_dark from the calibrated rate model")
    if run_flags:
        g.add_argument("--seed", type=int, dest="master_seed", help="master seed")
        g.add_argument("--out", dest="out_dir", metavar="DIR", help="run directory")
        g.add_argument("--duration", type=float, metavar="S", help="record length (s)")
        g.add_argument("--snr", type=float, help="carrier power / (N0 delta_R)")
        g.add_argument("--no-jumps", dest="jumps", action="store_const", const=False,
                       help="jump-free (always bright) emitter")
        g.add_argument("--no-beat-file", dest="write_beat", action="store_const", const=False,
                       help=argparse.SUPPRESS)


def build_parser():
    p = argparse.ArgumentParser(
        prog="qjfluor",
        description="Simulate and analyze the fluorescence spectrum of a single emitter with quantum jumps.",
    )
    p.add_argument("--version", action="version", version=f"qjfluor {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("predict", help="pedestal width and height ratio from (tau_B, tau_D)")
    _add_common(sp, run_flags=False)
    sp.add_argument("--delta-R", type=float, metavar="HZ",
                    help="resolution bandwidth (default: that of the analysis settings)")

    ss = sub.add_parser("simulate", help="write trajectory, count trace and beat record")
    _add_common(ss)

    sa = sub.add_parser("analyze", help="fit spectra and dwell times of a simulated run")
    sa.add_argument("run_dir", nargs="?", help="run directory (default: --out or the config's out_dir)")
    _add_common(sa)

    sv = sub.add_parser("verify", help="run the acceptance matrix")
    sv.add_argument("suite", nargs="?", default="all",
                    help="fig4, control, fig3, oracle, bright-only, rate-model, properties or all")
    sv.add_argument("--seed", type=int, default=1, help="master seed of the matrix")
    sv.add_argument("--json", action="store_true")
    return p


_OVERRIDES = ("tau_bright", "tau_dark", "repump_power", "master_seed", "out_dir",
              "duration", "snr", "jumps", "write_beat")


def _config(args):
    kw = {k: getattr(args, k, None) for k in _OVERRIDES}
    return load_config(args.config, **kw)


def _emit(args, payload, text):
    if args.json:
        sys.stdout.write(formats.dumps_json(payload))
    else:
        print(text)


def cmd_predict(args):
    cfg = _config(args)
    delta_R = cfg.delta_R if args.delta_R is None else args.delta_R
    tp = cfg.telegraph()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ResolutionWarning)
        pred = predict_pedestal(tp, delta_R)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    payload = {"tau_bright_s": tp.tau_bright, "tau_dark_s": tp.tau_dark, **pred.to_dict()}
    text = "\n".join([
        f"tau_B          {tp.tau_bright * 1e3:.4g} ms",
        f"tau_D          {tp.tau_dark * 1e3:.4g} ms",
        f"delta_R        {pred.delta_R:.5g} Hz",
        f"delta_L        {pred.delta_L:.4f} Hz",
        f"A_L            {pred.A_L:.4e}",
        f"duty cycle p   {pred.p:.4f}",
        f"weight ratio   {pred.weight_ratio:.4f}",
    ])
    _emit(args, payload, text)
    return EXIT_OK


def cmd_simulate(args):
    cfg = _config(args)
    manifest = simulate(cfg)
    s = manifest["stages"]["simulate"]
    text = "\n".join(
        [f"wrote {cfg.out_dir}/"]
        + [f"  {e['path']:<16} {e['sha256'][:16]}" for e in s["files"].values()]
        + [f"  switches {s['summary']['n_switches']}, bright fraction "
           f"{s['summary']['bright_fraction']:.4f}"]
    )
    _emit(args, manifest, text)
    return EXIT_OK


def _check_rows(checks):
    lines = []
    for c in checks:
        m = c["measured"]
        ms = f"{m:.4g}" if isinstance(m, float) and math.isfinite(m) else str(m)
        t = c["target"]
        ts = f"{t:.4g}" if isinstance(t, float) else str(t)
        lines.append(f"  {'PASS' if c['passed'] else 'FAIL'}  {c['name']:<24} {ms:>12}  target {ts}"
                     f"  ({c['tolerance']})")
    return lines


def cmd_analyze(args):
    run_dir = args.run_dir
    if run_dir is None:
        run_dir = args.out_dir if args.out_dir else _config(args).out_dir
    manifest = analyze(run_dir)
    text = "\n".join([f"analyzed {run_dir}/"] + _check_rows(manifest["checks"])
                     + [f"overall: {'PASS' if manifest['passed'] else 'FAIL'}"])
    _emit(args, {"passed": manifest["passed"], "checks": manifest["checks"],
                 "results": manifest["results"]}, text)
    return EXIT_OK if manifest["passed"] else EXIT_FAIL


def cmd_verify(args):
    from .verify import SUITES, Matrix, format_table, run_suite

    if args.suite != "all" and args.suite not in SUITES:
        print(f"qjfluor verify: unknown suite {args.suite!r} (choose from "
              f"{', '.join([*SUITES, 'all'])})", file=sys.stderr)
        return EXIT_USAGE
    crits = run_suite(args.suite, Matrix(seed=args.seed))
    ok = all(c.passed for c in crits)
    _emit(args, {"suite": args.suite, "passed": ok, "criteria": [c.to_dict() for c in crits]},
          format_table(crits) + f"\n\noverall: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "verify": cmd_verify,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"qjfluor {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (StageError, formats.FormatError) as e:
        print(f"qjfluor {args.command}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
