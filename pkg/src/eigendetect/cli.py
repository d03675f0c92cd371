"""Command-line front end.

Subcommands: ``synth``, ``detect``, ``roc``, ``pmiss``, ``calibrate``, ``tw-table``.
Data (CSV, reports) goes to stdout or ``--out``; diagnostics go to stderr.
Exit status is 0 only when nothing failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from typing import List, Optional

from .array_signal import (
    ArrayConfig,
    Hypothesis,
    RngStream,
    ScenarioConfig,
    read_snapshots,
    synth_snapshots,
    write_snapshots,
)
from .covariance_eig import eigen_spectrum, sample_covariance
from .detectors import (
    CalibrationTable,
    DetectorKind,
    ThresholdMode,
    ThresholdPolicy,
    decide,
)
from .errors import EigenDetectError
from .montecarlo import (
    CampaignConfig,
    calibrate,
    pmiss_vs_n,
    roc_from_statistics,
    run_statistics,
)
from .rmt_dist import load_tw_table
from .svgplot import line_plot

log = logging.getLogger("eigendetect")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- formatting -------------------------------------------------------------

def fmt_value(v) -> str:
    """CSV cell: 17 significant digits for floats, empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def render_csv(header: List[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_value(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- argument parsing helpers -----------------------------------------------

def parse_detectors(text: str) -> List[DetectorKind]:
    if text.strip().lower() == "all":
        return list(DetectorKind)
    try:
        return [DetectorKind(t.strip().lower()) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        names = ", ".join(k.value for k in DetectorKind)
        raise argparse.ArgumentTypeError(f"{exc}; choose from {names} or 'all'") from None


def parse_float_list(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def parse_n_list(text: str) -> List[int]:
    """Comma list of integers; ``a,b,...,c`` expands the geometric progression a, b, ... up to c."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        if "..." in parts:
            i = parts.index("...")
            if i < 2 or i != len(parts) - 2:
                raise ValueError
            head = [int(p) for p in parts[:i]]
            last = int(parts[-1])
            ratio = head[-1] / head[-2]
            if ratio <= 1 or ratio != int(ratio):
                raise ValueError
            out = list(head)
            while out[-1] * int(ratio) <= last:
                out.append(out[-1] * int(ratio))
            if out[-1] != last:
                raise ValueError
            return out
        return [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad N list {text!r}; use e.g. 2,4,8 or 2,4,...,512"
        ) from None


def _add_scenario_flags(p, snr_default):
    p.add_argument("--snapshots", type=int, default=200, help="snapshots per trial (L)")
    p.add_argument("--snr-db", type=float, default=snr_default)
    p.add_argument("--theta-deg", type=float, default=30.0, help="direction of arrival, degrees")
    p.add_argument("--spacing", type=float, default=0.5, help="element spacing in wavelengths")
    p.add_argument("--signal", choices=("gaussian", "qpsk"), default="gaussian")


def _add_campaign_flags(p):
    p.add_argument("--trials", type=int, default=10_000, help="trials per hypothesis")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="worker threads")
    p.add_argument("--detectors", type=parse_detectors, default=list(DetectorKind),
                   help="comma list of glrt,r-max-min,r-max-nv,m-max-min or 'all'")
    p.add_argument("--backend", choices=("compiled", "python"), default=None)


def _scenario(args, hypothesis=Hypothesis.H1) -> ScenarioConfig:
    return ScenarioConfig(args.snr_db, math.radians(args.theta_deg), args.snapshots,
                          hypothesis, args.signal)


def _campaign(args, n) -> CampaignConfig:
    return CampaignConfig(
        scenario=_scenario(args),
        array=ArrayConfig(n, args.spacing),
        trials=args.trials,
        seed=args.seed,
        detectors=tuple(args.detectors),
        workers=args.workers,
        backend=args.backend,
    )


# -- subcommands ------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = ArrayConfig(args.n, args.spacing)
    scenario = _scenario(args, Hypothesis(args.hypothesis))
    rng = RngStream(args.seed, args.stream)
    snap = synth_snapshots(scenario, cfg, rng)
    write_snapshots(args.out, snap)
    print(f"N={snap.n} L={snap.l} hypothesis={scenario.hypothesis.value} seed={args.seed}")
    return EXIT_OK


def _load_calibration(path) -> dict:
    thresholds = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            thresholds[(DetectorKind(row["detector"]), float(row["pfa"]))] = float(row["threshold"])
    return thresholds


def cmd_detect(args) -> int:
    snap = read_snapshots(args.input)
    spec = eigen_spectrum(sample_covariance(snap))
    policy = ThresholdPolicy(ThresholdMode(args.policy), args.tw_order, args.as_written)
    calibration = None
    if policy.mode is ThresholdMode.EMPIRICAL:
        calibration = CalibrationTable(spec.n, spec.l)
        if args.calibration:
            for (kind, pfa), thr in _load_calibration(args.calibration).items():
                calibration.add(kind, pfa, thr)
        else:
            usable = tuple(k for k in args.detector if not (k.needs_full_rank and spec.n > spec.l))
            if usable:
                cfg = CampaignConfig(
                    scenario=ScenarioConfig(0.0, 0.0, spec.l, Hypothesis.H0),
                    array=ArrayConfig(spec.n),
                    trials=args.calibration_trials,
                    seed=args.seed,
                    detectors=usable,
                    workers=args.workers,
                )
                calibration = calibrate(cfg, [args.pfa])

    status = EXIT_OK
    rows = []
    for kind in args.detector:
        try:
            d = decide(kind, spec, args.pfa, policy, calibration)
        except EigenDetectError as exc:
            print(f"error: {kind.value}: {exc}", file=sys.stderr)
            status = EXIT_FAIL
            continue
        rows.append((kind.value, d.statistic, d.threshold,
                     "present" if d.emitter_present else "absent"))
    if args.format == "csv":
        sys.stdout.write(render_csv(["detector", "statistic", "threshold", "decision"], rows))
    else:
        for name, stat, thr, dec in rows:
            print(f"{name:<10} statistic={fmt_value(stat)} threshold={fmt_value(thr)} decision={dec}")
    return status


def cmd_roc(args) -> int:
    cfg = _campaign(args, args.n)
    grid = None
    if args.pfa_grid:
        grid = "order" if args.pfa_grid.strip() == "order" else parse_float_list(args.pfa_grid)
    h0 = run_statistics(cfg, Hypothesis.H0)
    h1 = run_statistics(cfg, Hypothesis.H1)
    rows, series = [], {}
    for kind in cfg.detectors:
        pts = roc_from_statistics(h0[kind], h1[kind], kind, grid)
        rows.extend((kind.value, p.pfa, p.pd) for p in pts)
        series[kind.label] = ([p.pfa for p in pts], [p.pd for p in pts])
    _emit(render_csv(["detector", "pfa", "pd"], rows), args.out)
    if args.svg:
        line_plot(series, args.svg,
                  title=f"ROC, SNR={args.snr_db:g} dB, N={args.n}, L={args.snapshots}",
                  xlabel="false-alarm probability", ylabel="detection probability",
                  logx=args.log_x)
    return EXIT_OK


def cmd_pmiss(args) -> int:
    cfg = _campaign(args, args.n_list[0])
    rows_out = pmiss_vs_n(cfg, args.n_list, args.pfa)
    rows, series = [], {k.label: ([], []) for k in cfg.detectors}
    for row in rows_out:
        for kind in cfg.detectors:
            rows.append((row.n_antennas, kind.value, row.pmiss[kind], row.trials_used[kind]))
            if row.pmiss[kind] is not None:
                series[kind.label][0].append(row.n_antennas)
                series[kind.label][1].append(row.pmiss[kind])
    _emit(render_csv(["n", "detector", "pmiss", "trials_used"], rows), args.out)
    if args.svg:
        line_plot(series, args.svg,
                  title=f"Pmiss vs N, SNR={args.snr_db:g} dB, Pfa={args.pfa:g}",
                  xlabel="number of antennas N", ylabel="miss probability",
                  logx=not args.linear_x, logy=args.log_y)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _campaign(args, args.n)
    table = calibrate(cfg, args.pfa)
    rows = [(k.value, p, thr) for (k, p), thr in table.thresholds.items()]
    _emit(render_csv(["detector", "pfa", "threshold"], rows), args.out)
    return EXIT_OK


def cmd_tw_table(args) -> int:
    table = load_tw_table(args.order, args.table)
    rows = [(float(t), float(f)) for t, f in zip(table.grid, table.cdf)]
    _emit(render_csv(["t", "cdf"], rows), args.out)
    if args.svg:
        line_plot({f"TW{args.order}": (table.grid, table.cdf)}, args.svg,
                  title=f"Tracy-Widom CDF, order {args.order}", xlabel="t", ylabel="F(t)")
    return EXIT_OK


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eigendetect", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write one synthetic EMSNAP01 snapshot file")
    p.add_argument("--n", type=int, required=True, help="number of antennas")
    _add_scenario_flags(p, snr_default=-18.0)
    p.add_argument("--hypothesis", choices=("h0", "h1"), default="h1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0, help="stream id within the seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect", help="run detectors on a snapshot file")
    p.add_argument("--input", required=True)
    p.add_argument("--detector", type=parse_detectors, default=list(DetectorKind))
    p.add_argument("--pfa", type=float, default=0.1)
    p.add_argument("--policy", choices=("analytic", "empirical"), default="empirical")
    p.add_argument("--tw-order", type=int, choices=(1, 2), default=2)
    p.add_argument("--as-written", action="store_true",
                   help="literal lambda_max-dependent R-MaxEV-MinEV threshold")
    p.add_argument("--calibration", help="CSV from 'calibrate' (detector,pfa,threshold)")
    p.add_argument("--calibration-trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0, help="seed for on-the-fly calibration")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("roc", help="ROC curves (CSV: detector,pfa,pd)")
    p.add_argument("--n", type=int, default=64)
    _add_scenario_flags(p, snr_default=-18.0)
    _add_campaign_flags(p)
    p.add_argument("--pfa-grid", help="comma list of Pfa values, or 'order' for every H0 order statistic")
    p.add_argument("--out")
    p.add_argument("--svg")
    p.add_argument("--log-x", action="store_true")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("pmiss", help="Pmiss versus N (CSV: n,detector,pmiss,trials_used)")
    p.add_argument("--n-list", type=parse_n_list, default=parse_n_list("2,4,...,512"))
    p.add_argument("--pfa", type=float, default=0.1)
    _add_scenario_flags(p, snr_default=-20.0)
    _add_campaign_flags(p)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.add_argument("--linear-x", action="store_true")
    p.add_argument("--log-y", action="store_true")
    p.set_defaults(func=cmd_pmiss)

    p = sub.add_parser("calibrate", help="empirical H0 thresholds (CSV: detector,pfa,threshold)")
    p.add_argument("--n", type=int, default=64)
    _add_scenario_flags(p, snr_default=-18.0)
    _add_campaign_flags(p)
    p.add_argument("--pfa", type=parse_float_list, default=[0.01, 0.05, 0.1, 0.3])
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("tw-table", help="dump the loaded Tracy-Widom table (CSV: t,cdf)")
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.add_argument("--table", help="explicit table file (default: package data or $EIGENDETECT_TW_DIR)")
    p.add_argument("--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_tw_table)
    return ap


def _validate(args) -> None:
    """Check numeric flags against the owning modules' preconditions before any work."""
    cmd = args.command
    if cmd in ("synth", "roc", "calibrate"):
        ArrayConfig(args.n, args.spacing)
    if cmd in ("synth", "roc", "pmiss", "calibrate"):
        _scenario(args)
    if cmd == "pmiss":
        for n in args.n_list:
            ArrayConfig(n, args.spacing)
    if cmd in ("roc", "pmiss", "calibrate"):
        _campaign(args, args.n_list[0] if cmd == "pmiss" else args.n)
    if cmd in ("pmiss", "detect") and not 0.0 < args.pfa < 1.0:
        raise UsageError(f"--pfa must lie in (0, 1), got {args.pfa}")
    if cmd == "calibrate" and not all(0.0 < p < 1.0 for p in args.pfa):
        raise UsageError("--pfa values must lie in (0, 1)")
    if cmd == "synth":
        RngStream(args.seed, args.stream)
    if cmd == "detect" and args.calibration_trials < 100:
        raise UsageError("--calibration-trials must be >= 100")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        _validate(args)
    except (EigenDetectError, UsageError, ValueError) as exc:
        print(f"eigendetect {args.command}: invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except EigenDetectError as exc:
        print(f"eigendetect {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"eigendetect {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
