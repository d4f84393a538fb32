"""Command-line front end for the evaluation harness.

Subcommands: synth, frr, far, eer, optimize-bands, same-media, report.
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path
from typing import Optional

import numpy as np

from ..decision import ScoringPolicy, default_policy
from .rates import (compute_entry_far, compute_far, compute_frr,
                    optimize_bands, simulate_same_media, sweep_eer)
from .report import RateReport, write_report
from .synth import SynthSpec, synth_generate


def _load_policy(path: Optional[str]) -> ScoringPolicy:
    if not path:
        return default_policy()
    with open(path, "r", encoding="utf-8") as fh:
        return ScoringPolicy.from_record(json.load(fh))


def _parse_tau_grid(spec: Optional[str]) -> Optional[np.ndarray]:
    """Parse "start:stop:step" into an ascending grid."""
    if not spec:
        return None
    start, stop, step = (float(part) for part in spec.split(":"))
    return np.round(np.arange(start, stop + 1e-9, step), 9)


def _emit(report: RateReport, out_dir: Optional[str], name: str) -> None:
    print(report.to_json())
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(report.to_json() + "\n",
                                          encoding="utf-8")
        write_report([report], out)
        print(f"wrote {name} report under {out}")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ambientauth-eval",
        description="FRR/FAR/EER evaluation over recorded or synthetic "
                    "audio-pair corpora")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a deterministic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--lag-ms", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--kind", choices=("colocated", "independent"),
                   default="colocated")
    p.add_argument("--duration-ms", type=int, default=3500)

    p = sub.add_parser("frr", help="false rejection rate of legitimate pairs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--policy")
    p.add_argument("--group-by")
    p.add_argument("--out-dir")

    p = sub.add_parser("far", help="false acceptance rate")
    p.add_argument("--manifest", required=True)
    p.add_argument("--policy")
    p.add_argument("--group-by", default="environment")
    p.add_argument("--pairing", choices=("cross-subject", "entries"),
                   default="cross-subject",
                   help="cross subjects' samples, or treat each manifest "
                        "entry as an attack pair")
    p.add_argument("--out-dir")

    p = sub.add_parser("eer", help="threshold sweep with equal error rate")
    p.add_argument("--manifest", required=True)
    p.add_argument("--policy")
    p.add_argument("--tau-grid", help="start:stop:step")
    p.add_argument("--out-dir")

    p = sub.add_parser("optimize-bands",
                       help="search band sets for min alpha*FRR+(1-alpha)*FAR")
    p.add_argument("--manifest", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--policy")
    p.add_argument("--tau-grid", help="start:stop:step")
    p.add_argument("--out-dir")

    p = sub.add_parser("same-media",
                       help="same-broadcast attack at a provider delay")
    p.add_argument("--source", required=True, help="source WAV")
    p.add_argument("--delay-ms", type=float)
    p.add_argument("--delay-range", nargs=2, type=float,
                   metavar=("LOW", "HIGH"))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--duration-ms", type=int, default=3500)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--policy")
    p.add_argument("--out-dir")

    p = sub.add_parser("report", help="render stored rate reports as CSV")
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   help="rate-report JSON files")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format", default="csv")

    args = parser.parse_args(argv)

    if args.command == "synth":
        spec = SynthSpec(pairs=args.pairs, snr_db=args.snr_db,
                         lag_ms=args.lag_ms, seed=args.seed, kind=args.kind,
                         duration_ms=args.duration_ms)
        manifest = synth_generate(spec, args.out_dir)
        print(f"wrote {args.pairs} {args.kind} pairs; manifest: {manifest}")
        return 0

    if args.command == "frr":
        report = compute_frr(args.manifest, _load_policy(args.policy),
                             group_by=args.group_by)
        _emit(report, args.out_dir, "frr")
        return 0

    if args.command == "far":
        if args.pairing == "entries":
            report = compute_entry_far(args.manifest,
                                       _load_policy(args.policy))
        else:
            report = compute_far(args.manifest, _load_policy(args.policy),
                                 group_by=args.group_by)
        _emit(report, args.out_dir, "far")
        return 0

    if args.command == "eer":
        report = sweep_eer(args.manifest,
                           tau_grid=_parse_tau_grid(args.tau_grid),
                           policy=_load_policy(args.policy))
        _emit(report, args.out_dir, "eer")
        return 0

    if args.command == "optimize-bands":
        report = optimize_bands(args.manifest, args.alpha,
                                tau_grid=_parse_tau_grid(args.tau_grid),
                                policy=_load_policy(args.policy))
        _emit(report, args.out_dir, "optimize_bands")
        print(f"search space: {report.meta['search_space']} band sets; "
              f"best B=[{report.meta['band_low_hz']:g}Hz-"
              f"{report.meta['band_high_hz']:g}Hz] "
              f"tau_c={report.meta['tau_c']:g} "
              f"objective={report.meta['objective']:.6f}")
        return 0

    if args.command == "same-media":
        if args.delay_range is not None:
            delay = (args.delay_range[0], args.delay_range[1])
        elif args.delay_ms is not None:
            delay = args.delay_ms
        else:
            parser.error("one of --delay-ms or --delay-range is required")
        report = simulate_same_media(args.source, delay, args.trials,
                                     policy=_load_policy(args.policy),
                                     duration_ms=args.duration_ms,
                                     seed=args.seed)
        _emit(report, args.out_dir, "same_media")
        return 0

    if args.command == "report":
        reports = [RateReport.from_json(Path(f).read_text(encoding="utf-8"))
                   for f in args.inputs]
        paths = write_report(reports, args.out_dir, fmt=args.format)
        for written in paths:
            print(f"wrote {written}")
        return 0

    parser.error(f"unknown command {args.command}")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
