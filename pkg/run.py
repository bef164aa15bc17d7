#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Main entry point: anisotropy sweeps, feature reports and oracle checks

Flow (sweep):
  Evolve → Measure → Advance → [next Δ] → CSV

Usage:
  python run.py sweep --config default_sweep                 # full sweep from config/
  python run.py sweep --config quick_sweep --n 2 4 --out results/quick.csv
  python run.py sweep --config default_sweep --quick         # shortened schedule, 8 restarts
  python run.py features --in results/sweep.csv --out results/features.json
  python run.py oracle --check all

Exit codes: 0 success, 2 if any grid point did not converge (CSV still written),
1 on hard errors.
"""

import argparse
import io
import logging
import os
import sys

from dotenv import load_dotenv

# Fix encoding for Windows
if sys.platform == "win32":
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding='utf-8')
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding='utf-8')
from src.oracle.suite import SUITES, run_suite
from src.orchestrator.csv_io import read_csv, write_csv
from src.orchestrator.features import detect_features, write_report
from src.orchestrator.records import classify_hierarchy
from src.orchestrator.workflow import run_sweep_workflow, sweep_provenance
from src.utils.config_loader import apply_overrides, load_sweep_config
from src.utils.errors import XxzBellError

# Load environment variables from .env
load_dotenv()

logger = logging.getLogger("run")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NONCONVERGED = 2


def configure_logging():
    debug = os.getenv("DEBUG", "false").lower() == "true"
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="XXZ Bell: multipartite nonlocality of the infinite XXZ chain via iTEBD"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Run an anisotropy sweep and write a CSV")
    sweep.add_argument("--config", type=str, default="default_sweep",
                       help="Config name in config/ or path to a JSON file (default: default_sweep)")
    sweep.add_argument("--delta-min", type=float, help="Lower end of the Δ range")
    sweep.add_argument("--delta-max", type=float, help="Upper end of the Δ range")
    sweep.add_argument("--delta-step", type=float, help="Coarse Δ step")
    sweep.add_argument("--n", type=int, nargs="+", dest="n_list", help="Subchain lengths, e.g. --n 2 4 6")
    sweep.add_argument("--objective", type=str, nargs="+", dest="objectives",
                       choices=["mermin", "svetlichny"], help="Bell objectives")
    sweep.add_argument("--D", type=int, help="MPS bond dimension")
    sweep.add_argument("--restarts", type=int, help="Optimizer restarts per search")
    sweep.add_argument("--seed", type=int, help="Seed of the initial state and the restarts")
    start = sweep.add_mutually_exclusive_group()
    start.add_argument("--warm-start", dest="warm_start", action="store_true", default=None,
                       help="Seed each Δ from the previous converged state")
    start.add_argument("--cold-start", dest="warm_start", action="store_false",
                       help="Evolve every Δ from a fresh random state")
    sweep.add_argument("--out", type=str, dest="output_path", help="Output CSV path")
    sweep.add_argument("--checkpoint-dir", type=str, help="Directory for MPS checkpoints")
    sweep.add_argument("--quick", action="store_true", default=None,
                       help="Shortened schedule and 8 restarts (QUICK_MODE env var also enables)")

    features = sub.add_parser("features", help="Detect minima, plane crossings and violation onsets")
    features.add_argument("--in", dest="input_path", type=str, required=True, help="Sweep CSV")
    features.add_argument("--out", dest="output_path", type=str, required=True, help="JSON report path")

    oracle = sub.add_parser("oracle", help="Run the built-in property and oracle checks")
    oracle.add_argument("--check", type=str, default="all", choices=list(SUITES) + ["all"],
                        help="Suite to run (default: all)")
    return parser


def sweep_mode(args) -> int:
    """Run the sweep, write the CSV, print the hierarchy summary"""
    quick = args.quick or os.getenv("QUICK_MODE", "false").lower() == "true" or None
    config = load_sweep_config(args.config)
    config = apply_overrides(
        config,
        delta_min=args.delta_min,
        delta_max=args.delta_max,
        delta_step=args.delta_step,
        n_list=args.n_list,
        objectives=args.objectives,
        D=args.D,
        restarts=args.restarts,
        seed=args.seed,
        warm_start=args.warm_start,
        output_path=args.output_path,
        checkpoint_dir=args.checkpoint_dir,
        quick=quick,
    )

    print("\n" + "=" * 70)
    print("XXZ BELL SWEEP")
    print("=" * 70)
    print(f"Config: {config.name}")
    print(f"Grid points: {len(config.resolved_grid())}")
    print(f"Subchains: {config.n_list}  Objectives: {config.objectives}")
    print(f"D: {config.D}  Warm start: {config.warm_start}  Quick: {config.quick}")
    print("=" * 70 + "\n")

    result = run_sweep_workflow(config)
    write_csv(result['records'], config.output_path, sweep_provenance(config))
    print_summary(result)

    if result['nonconverged'] or any(not r.converged for r in result['records']):
        return EXIT_NONCONVERGED
    return EXIT_OK


def print_summary(result):
    """Strongest certified label per (n, objective)"""
    strongest = {}
    for record in result['records']:
        key = (record.n, record.objective)
        if record.value_best is None:
            continue
        if key not in strongest or record.value_best > strongest[key].value_best:
            strongest[key] = record

    print("\n" + "=" * 70)
    print("SWEEP RESULTS")
    print("=" * 70)
    for (n, objective), record in sorted(strongest.items()):
        labels = ", ".join(classify_hierarchy(record))
        print(f"  n={n:<3} {objective:<11} max {record.value_best:.6f} at Δ={record.delta:g}: {labels}")

    if result['errors']:
        print(f"\n Errors:")
        for error in result['errors']:
            print(f"  • {error}")
    if result['nonconverged']:
        print(f"\n Not converged at Δ = {', '.join(f'{d:g}' for d in result['nonconverged'])}")
    print("=" * 70 + "\n")


def features_mode(args) -> int:
    records = read_csv(args.input_path)
    report = detect_features(records)
    write_report(report, args.output_path)
    print(f"Minima: {len(report.local_minima)}  Maxima: {len(report.local_maxima)}  "
          f"Plane crossings: {len(report.plane_crossings)}  Onsets: {len(report.violation_onsets)}")
    return EXIT_OK


def oracle_mode(args) -> int:
    results = run_suite(args.check)
    failed = [r for r in results if not r.passed]
    print(f"\n{len(results) - len(failed)}/{len(results)} checks passed")
    for r in failed:
        print(f"  FAIL {r.suite}/{r.name}: {r.detail}")
    return EXIT_OK if not failed else EXIT_ERROR


def main(argv=None) -> int:
    """Entry point with subcommands"""
    configure_logging()
    args = build_parser().parse_args(argv)
    handlers = {"sweep": sweep_mode, "features": features_mode, "oracle": oracle_mode}

    try:
        return handlers[args.command](args)
    except (FileNotFoundError, XxzBellError) as e:
        print(f"\n ERROR: {e}")
        return EXIT_ERROR
    except Exception as e:
        print(f"\n ERROR: {e}")
        import traceback
        traceback.print_exc()
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
