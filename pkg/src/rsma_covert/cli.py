"""Command-line front end.

    rsma-covert {covertness,outage,ect,optimize,validate} [--config FILE]
        [--seed N] [--out DIR] [--draws N] [--threads N]

Exit codes: 0 success, 1 validation failure, 2 config error, 3 I/O error.
``RSMA_COVERT_SEED`` in the environment overrides ``--seed``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import subprocess
import sys
import time
from dataclasses import replace
from importlib import metadata
from pathlib import Path

from . import experiments
from .config import ConfigError

SEED_ENV = "RSMA_COVERT_SEED"
EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("rsma_covert")


def _version() -> str:
    try:
        base = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        base = "0+unknown"
    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True, text=True, timeout=5, cwd=Path(__file__).parent,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        described = ""
    return f"{base}+{described}" if described else base


def _write_manifest(out: Path, command: str, spec, started: float, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "version": _version(),
        "seed": spec.seed,
        "config": experiments.spec_snapshot(spec),
        "assumed_parameters": experiments.ASSUMED_FIELDS,
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    if extra:
        manifest.update(extra)
    (out / f"{command}_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--seed", type=int, help=f"master seed (overridden by ${SEED_ENV})")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--draws", type=int, help="Monte Carlo draws per point")
    common.add_argument("--threads", type=int, help="worker threads for Monte Carlo chunks")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rsma-covert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("covertness", parents=[common], help="covertness load vs transmit SNR")
    sub.add_parser("outage", parents=[common], help="analytic vs simulated outage for cases C1-C4")
    ect = sub.add_parser("ect", parents=[common], help="RSMA/SDMA/NOMA throughput sweep")
    ect.add_argument("--common", type=float, help="RSMA common power fraction a_c")
    opt = sub.add_parser("optimize", parents=[common], help="AO-GA throughput maximization")
    opt.add_argument("--grid", type=int, help="also run an N x N grid search as a check")
    sub.add_parser("validate", parents=[common], help="closed form vs Monte Carlo cross-checks")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    seed = args.seed
    if os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            print(f"config error: ${SEED_ENV} is not an integer", file=sys.stderr)
            return EXIT_CONFIG
    started = time.perf_counter()

    try:
        spec = experiments.load_spec(
            args.config, seed=seed, draws=args.draws, threads=args.threads,
            out_dir=str(args.out) if args.out else None,
        )
        if getattr(args, "common", None) is not None:
            spec = replace(spec, common=args.common)
        if getattr(args, "grid", None):
            spec = replace(spec, grid_points=args.grid)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    out = Path(spec.out_dir)
    status = EXIT_OK
    try:
        out.mkdir(parents=True, exist_ok=True)
        extra = None
        if args.command == "covertness":
            header, rows = experiments.run_covertness_sweep(spec)
        elif args.command == "outage":
            header, rows = experiments.run_outage_sweep(spec)
        elif args.command == "ect":
            header, rows = experiments.run_ect_sweep(spec)
        elif args.command == "optimize":
            header, rows, _, report = experiments.run_optimize(spec)
            (out / "optimize_report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                                     encoding="utf-8")
            extra = {"report": report}
            print(json.dumps(report, indent=2, sort_keys=True))
        else:
            header, rows = experiments.run_validate(spec)
            failed = [r[0] for r in rows if r[4] and not r[3]]
            summary = {"passed": not failed, "failed_checks": failed,
                       "checks": [dict(zip(header, r)) for r in rows]}
            (out / "validate_summary.json").write_text(
                json.dumps(summary, indent=2, sort_keys=True, default=bool) + "\n", encoding="utf-8")
            for r in rows:
                flag = "PASS" if r[3] else ("FAIL" if r[4] else "info")
                print(f"{flag:4s} {r[0]}: {r[1]:.4g} (tol {r[2]:g})")
            if failed:
                status = EXIT_VALIDATION
        experiments.write_csv(out / f"{args.command}.csv", header, rows)
        _write_manifest(out, args.command, spec, started, extra)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
