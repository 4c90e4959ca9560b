"""
Command-line front end.

Usage:
    python src/cli.py synth --library --out-dir campaign/
    python src/cli.py extract campaign/*.sweep --out-dir mpcs/ --pathloss-out pathloss.csv
    python src/cli.py fit pathloss.csv --out fits.csv
    python src/cli.py stats mpcs/*.mpc.csv --out stats.csv --svg rms_cdf.svg
    python src/cli.py report campaign/ --out-dir report/

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import pandas as pd

from config import get_settings
from extraction import DEFAULT_THRESHOLD_DB, extract_beam_peaks, extract_padp
from fitting import MODEL_CHOICES, fit_by_scenario, fit_line, fit_residuals, model_name
from ingest import (
    CampaignEntry,
    CampaignIndex,
    load_campaign,
    parse_mpcs,
    parse_pathloss_table,
    parse_sweep,
    write_atomic,
    write_campaign_index,
    write_fit_report,
    write_frame,
    write_mpcs,
    write_pathloss_table,
    write_stats_table,
    write_sweep,
)
from logging_config import run_metrics, setup_logging
from metrics import angular_power_map, delay_stats, empirical_cdf, fit_pool, padp_path_loss, scenario_offsets
from model import CorrectionParams, Padp, PathLossSample, Scenario, SweepRecord, parse_scenario
from plots import cdf_chart, pathloss_chart
from synth import library_campaign, load_campaign_spec, synthesize_campaign
from validation import DomainError, InsufficientDataError, NoSignalError, ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

DATA_ERRORS = (ValidationError, DomainError, InsufficientDataError, NoSignalError, OSError)


class UsageError(Exception):
    """Raised for flag combinations argparse cannot express."""
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextmanager
def _stage(name: str):
    start = time.time()
    ok = False
    try:
        yield
        ok = True
    finally:
        run_metrics.record_stage(name, ok, (time.time() - start) * 1000)


def _emit(path: Path, data: bytes) -> None:
    write_atomic(path, data)
    print(path)


def _map(func: Callable, items: Sequence, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def _correction(args) -> CorrectionParams:
    return CorrectionParams(
        phase_center_radius=args.pc_radius_m,
        drift_rate=args.drift_rate,
        reference_az=args.ref_az_deg,
    )


def _extract(rec: SweepRecord, args, jobs: int = 1) -> tuple[Padp, Optional[PathLossSample]]:
    """Extract one sweep's PADP and, when there is signal, its path-loss sample."""
    params = _correction(args)
    with _stage("extract"):
        padp = extract_padp(
            rec,
            params=params,
            threshold=args.threshold_db,
            gate_tau=args.gate_tau_ns,
            gate_angle=args.gate_angle_deg,
            sidelobe_rejection=not args.no_sidelobe_rejection,
            sidelobe_margin=args.sidelobe_margin_db,
            jobs=jobs,
        )
    if not padp.mpcs:
        return padp, None

    raw = extract_beam_peaks(rec, params, args.threshold_db, jobs) if args.raw_sum else None
    with _stage("path_loss"):
        sample = padp_path_loss(padp, rec.config, rec.pattern, beam_peaks=raw)
    return padp, sample


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    if bool(args.spec) == bool(args.library):
        raise UsageError("give exactly one of --spec FILE or --library")

    if args.library:
        spec = library_campaign(seed=args.seed or 0, n_bins=args.n_bins or 1024)
    else:
        spec = load_campaign_spec(Path(args.spec).read_bytes(), seed=args.seed)
        if args.n_bins:
            spec = replace(spec, n_bins=args.n_bins)

    out_dir = Path(args.out_dir)
    entries = []
    start = time.time()
    # links render one at a time; --jobs spreads each link's beam pairs over threads
    for rec, truth in synthesize_campaign(spec, jobs=args.jobs):
        run_metrics.record_stage("synth", True, (time.time() - start) * 1000)
        link_id = rec.meta.link_id
        _emit(out_dir / f"{link_id}.sweep", write_sweep(rec))
        _emit(out_dir / f"{link_id}.truth.csv", write_mpcs(truth))
        entries.append(CampaignEntry(path=f"{link_id}.sweep", meta=rec.meta))
        start = time.time()

    _emit(out_dir / "index.csv", write_campaign_index(CampaignIndex(entries=tuple(entries))))
    logger.info(f"Synthesized {len(entries)} links into {out_dir}")
    return EXIT_OK


def cmd_extract(args) -> int:
    out_dir = Path(args.out_dir)

    def run(path: Path):
        try:
            rec = parse_sweep(path.read_bytes())
            padp, sample = _extract(rec, args, jobs=1 if len(args.sweeps) > 1 else args.jobs)
            return path, padp, sample, None
        except DATA_ERRORS as e:
            return path, None, None, e

    failures = 0
    samples = []
    for path, padp, sample, error in _map(run, [Path(p) for p in args.sweeps], args.jobs):
        if error is not None:
            failures += 1
            logger.error(f"{path}: {error}")
            print(f"error: {path}: {error}", file=sys.stderr)
            run_metrics.record_error(type(error).__name__, str(error))
            continue
        _emit(out_dir / f"{path.stem}.mpc.csv", write_mpcs(padp))
        if sample is None:
            logger.warning(f"{path}: no MPCs, no path-loss sample")
        else:
            samples.append(sample)

    if args.pathloss_out:
        _emit(Path(args.pathloss_out), write_pathloss_table(samples))
    return EXIT_DATA if failures else EXIT_OK


def _select(samples: list[PathLossSample], scenario: Optional[str], split_glass: bool) -> list[PathLossSample]:
    if not scenario:
        return samples
    wanted = parse_scenario(scenario)
    if split_glass:
        return [s for s in samples if s.scenario is wanted]
    return [s for s in samples if fit_pool(s.scenario) is fit_pool(wanted)]


def _pool_members(samples, label: str, split_glass: bool) -> list[PathLossSample]:
    if split_glass:
        return [s for s in samples if s.scenario.value == label]
    return [s for s in samples if fit_pool(s.scenario).value == label]


def cmd_fit(args) -> int:
    samples = _select(parse_pathloss_table(Path(args.table).read_bytes()), args.scenario, args.split_glass)
    if not samples:
        raise InsufficientDataError("no path-loss samples match the selection")

    with _stage("fit"):
        fits = fit_by_scenario(samples, model=args.model, d0=args.d0_m, freq=args.freq_hz,
                               split_glass=args.split_glass)

    rows = [(label, fit) for label, entry in fits.items() for fit in entry.values()]
    _emit(Path(args.out), write_fit_report(rows))

    residuals = []
    for label, fit in rows:
        frame = fit_residuals(fit, _pool_members(samples, label, args.split_glass))
        frame.insert(0, "pool", label)
        frame.insert(0, "model", model_name(fit))
        residuals.append(frame)
    out = Path(args.out)
    residuals_path = Path(args.residuals_out) if args.residuals_out else out.with_name(f"{out.stem}.residuals.csv")
    _emit(residuals_path, write_frame(pd.concat(residuals, ignore_index=True)))
    return EXIT_OK


def _cdf_frame(stats_rows) -> tuple[pd.DataFrame, dict]:
    curves = {}
    records = []
    for pool in (Scenario.LOS, Scenario.NLOS):
        values = [s.tau_rms for meta, s in stats_rows if fit_pool(meta.scenario) is pool]
        if not values:
            continue
        cdf = empirical_cdf(values)
        curves[pool.value] = cdf
        records += [[pool.value, v, p] for v, p in cdf]
    return pd.DataFrame(records, columns=["pool", "value", "probability"]), curves


def cmd_stats(args) -> int:
    rows = []
    failures = 0
    for name in args.mpcs:
        path = Path(name)
        try:
            padp = parse_mpcs(path.read_bytes())
        except DATA_ERRORS as e:
            failures += 1
            logger.error(f"{path}: {e}")
            print(f"error: {path}: {e}", file=sys.stderr)
            continue
        if not padp.mpcs:
            logger.warning(f"{path}: empty MPC file skipped")
            run_metrics.record_skipped(str(path), "empty")
            continue
        if padp.meta is None:
            logger.warning(f"{path}: no link metadata, skipped")
            run_metrics.record_skipped(str(path), "no metadata")
            continue
        with _stage("delay_stats"):
            rows.append((padp.meta, delay_stats(padp)))

    _emit(Path(args.out), write_stats_table(rows))
    if rows:
        frame, curves = _cdf_frame(rows)
        if args.cdf_out:
            _emit(Path(args.cdf_out), write_frame(frame))
        if args.svg:
            _emit(Path(args.svg), cdf_chart(curves, "RMS delay spread", "RMS delay spread (ns)").encode("utf-8"))
    return EXIT_DATA if failures else EXIT_OK


def cmd_report(args) -> int:
    root = Path(args.campaign)
    out_dir = Path(args.out_dir)
    index = load_campaign(root)
    if not index.entries:
        raise ValidationError(f"no sweeps found in {root}")

    def run(entry: CampaignEntry):
        path = root / entry.path
        try:
            rec = parse_sweep(path.read_bytes())
            padp, sample = _extract(rec, args, jobs=1 if len(index.entries) > 1 else args.jobs)
            padp_map = angular_power_map(padp, rec.grid) if args.padp_maps else None
            return entry, padp_map, padp, sample, None
        except DATA_ERRORS as e:
            return entry, None, None, None, e

    samples, stats_rows = [], []
    maps = []
    for entry, padp_map, padp, sample, error in _map(run, list(index.entries), args.jobs):
        if error is not None:
            logger.warning(f"Skipping {entry.path}: {error}")
            run_metrics.record_skipped(entry.path, str(error))
            continue
        if sample is None:
            logger.warning(f"Skipping {entry.path}: no MPCs extracted")
            run_metrics.record_skipped(entry.path, "no MPCs")
            continue
        samples.append(sample)
        stats_rows.append((padp.meta, delay_stats(padp)))
        if padp_map is not None:
            maps.append((padp.meta.link_id, padp_map))

    if not samples:
        raise ValidationError(f"no usable links in {root}")

    _emit(out_dir / "pathloss.csv", write_pathloss_table(samples))
    _emit(out_dir / "stats.csv", write_stats_table(stats_rows))
    cdf_frame, curves = _cdf_frame(stats_rows)
    _emit(out_dir / "cdf.csv", write_frame(cdf_frame))
    _emit(out_dir / "rms_cdf.svg", cdf_chart(curves, "RMS delay spread", "RMS delay spread (ns)").encode("utf-8"))

    with _stage("fit"):
        fits = fit_by_scenario(samples, model=args.model, d0=args.d0_m, freq=args.freq_hz,
                               split_glass=args.split_glass, skip_insufficient=True)
    rows = [(label, fit) for label, entry in fits.items() for fit in entry.values()]
    _emit(out_dir / "fits.csv", write_fit_report(rows))

    lines, residuals, offsets = [], [], []
    panels = {}
    for label in sorted({s.scenario.value if args.split_glass else fit_pool(s.scenario).value for s in samples},
                        key=lambda v: list(Scenario).index(Scenario(v))):
        members = _pool_members(samples, label, args.split_glass)
        panel = {"points": [(s.distance, s.path_loss) for s in members], "lines": {}}
        for name, fit in fits.get(label, {}).items():
            curve = fit_line(fit, [s.distance for s in members])
            curve.insert(0, "scenario", label)
            curve.insert(0, "model", name)
            lines.append(curve)
            panel["lines"][name] = list(zip(curve["distance_m"], curve["path_loss_db"]))

            frame = fit_residuals(fit, members)
            frame.insert(0, "pool", label)
            frame.insert(0, "model", name)
            residuals.append(frame)

            offset = scenario_offsets(members, fit)
            offset.insert(0, "pool", label)
            offset.insert(0, "model", name)
            offsets.append(offset)
        panels[label] = panel

    def concat(frames, columns):
        return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)

    _emit(out_dir / "fit_lines.csv",
          write_frame(concat(lines, ["model", "scenario", "distance_m", "path_loss_db"])))
    _emit(out_dir / "residuals.csv",
          write_frame(concat(residuals, ["model", "pool", "link_id", "scenario", "distance_m",
                                         "path_loss_db", "predicted_db", "residual_db"])))
    _emit(out_dir / "label_offsets.csv",
          write_frame(concat(offsets, ["model", "pool", "scenario", "n_points", "mean_residual_db"])))
    _emit(out_dir / "pathloss.svg", pathloss_chart(panels).encode("utf-8"))

    for link_id, frame in maps:
        _emit(out_dir / "maps" / f"{link_id}.padp_map.csv", frame.to_csv(lineterminator="\n", float_format="%.4f").encode("utf-8"))

    logger.info(f"Report over {len(samples)} links written to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_extraction_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold-db", type=float, default=DEFAULT_THRESHOLD_DB,
                   help="peak threshold above each beam's median floor (default 6)")
    p.add_argument("--gate-tau-ns", type=float, default=None,
                   help="consolidation delay gate (default two delay bins, 1.302 ns)")
    p.add_argument("--gate-angle-deg", type=float, default=None,
                   help="consolidation angle gate (default 20, widened to the grid's widest azimuth gap)")
    p.add_argument("--pc-radius-m", type=float, default=0.0, help="horn phase-centre radius")
    p.add_argument("--drift-rate", type=float, default=0.0, help="clock drift in s/s")
    p.add_argument("--ref-az-deg", type=float, default=0.0, help="azimuth of zero rotation offset")
    p.add_argument("--sidelobe-margin-db", type=float, default=None,
                   help="drop peaks this far below a stronger one at the same delay "
                        "(default peak gain - floor gain - 2)")
    p.add_argument("--no-sidelobe-rejection", action="store_true", help="keep every beam peak")
    p.add_argument("--raw-sum", action="store_true",
                   help="received power as the sum over all raw beam-pair detections")


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=MODEL_CHOICES, default="both")
    p.add_argument("--d0-m", type=float, default=1.0, help="CIM reference distance")
    p.add_argument("--freq-hz", type=float, default=28e9)
    p.add_argument("--split-glass", action="store_true", help="fit NLOS_GLASS separately from NLOS")


def build_parser(default_jobs: int = 1) -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="chankit", description="mmWave channel sounding toolkit")
    parser.add_argument("--log-level", default=None, help="override CHANKIT_LOG")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    jobs = argparse.ArgumentParser(add_help=False)
    jobs.add_argument("--jobs", type=int, default=default_jobs, help="worker threads")

    p = sub.add_parser("synth", parents=[jobs], help="render synthetic sweeps")
    p.add_argument("--spec", help="JSON campaign description")
    p.add_argument("--library", action="store_true", help="built-in 19-link campaign")
    p.add_argument("--seed", type=int, default=None, help="campaign seed; overrides the seed of a --spec file")
    p.add_argument("--n-bins", type=int, default=None, help="PDP length")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", parents=[jobs], help="extract MPCs from sweep files")
    p.add_argument("sweeps", nargs="+")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--pathloss-out", default=None)
    _add_extraction_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fit", help="fit CIM/FIM path-loss models")
    p.add_argument("table")
    p.add_argument("--out", required=True)
    p.add_argument("--residuals-out", default=None)
    p.add_argument("--scenario", default=None, help="restrict to one scenario pool")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("stats", help="delay statistics and CDFs of MPC files")
    p.add_argument("mpcs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--cdf-out", default=None)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", parents=[jobs], help="end-to-end campaign report")
    p.add_argument("campaign")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--padp-maps", action="store_true", help="also write angular power maps per link")
    _add_extraction_flags(p)
    _add_fit_flags(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    parser = build_parser(default_jobs=settings.jobs)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(
        level=args.log_level or settings.log_level,
        log_file=settings.log_dir is not None,
        log_dir=settings.log_dir or "logs",
    )
    run_metrics.reset()
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE

    try:
        code = args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as e:
        logger.error(f"{args.command} failed: {e}")
        run_metrics.record_error(type(e).__name__, str(e))
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_DATA

    skipped = run_metrics.skipped
    if skipped:
        logger.warning(f"{len(skipped)} input file(s) left out: " + ", ".join(s["path"] for s in skipped))
    logger.info(f"Run summary: {run_metrics.get_summary()}")
    return code


if __name__ == "__main__":
    sys.exit(main())
