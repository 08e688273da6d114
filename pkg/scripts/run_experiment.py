#!/usr/bin/env python3
"""
CLI script to run an experiment.

Usage:
    python scripts/run_experiment.py repro-table1 --config default
    python scripts/run_experiment.py sweep-noise --config config/experiments/smoke.yaml --output out/
    python scripts/run_experiment.py --list
"""
import argparse
import json
import sys
from pathlib import Path

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from modules.config_loader import list_configs
from modules.experiment_models import EXPERIMENTS
from modules.harness import RunOptions, execute


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Train and evaluate FHRR, HRR and MLP world models on the grid world"
    )
    parser.add_argument(
        "command",
        nargs="?",
        choices=EXPERIMENTS,
        help="Experiment to run (defaults to the config's 'experiment' key)"
    )
    parser.add_argument(
        "--config", "-c",
        default="default",
        help="Config file path or bundled config name"
    )
    parser.add_argument(
        "--output", "-o",
        help="Output directory (overrides the config's output_dir)"
    )
    parser.add_argument(
        "--threads",
        type=int,
        help="Evaluation threads (overrides HOLOWORLD_THREADS)"
    )
    parser.add_argument(
        "--json",
        action="store_true",
        help="Output result as JSON"
    )
    parser.add_argument(
        "--list",
        action="store_true",
        help="List bundled configs"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.list:
        print("Available configs:")
        for name in list_configs():
            print(f"  - {name}")
        return 0

    options = RunOptions(
        command=args.command,
        output_dir=Path(args.output) if args.output else None,
        threads=args.threads,
    )
    print(f"Running '{args.command or 'config default'}' with config '{args.config}'...")
    result = execute(args.config, options)

    if args.json:
        print(json.dumps(result.to_dict(), indent=2))
    elif result.success:
        print(f"\n\033[92mSuccess!\033[0m")
        print(f"  Experiment: {result.command}")
        print(f"  Metrics: {result.metrics_file}")
        print(f"  Manifest: {result.manifest_file}")
        print(f"  Artifacts: {len(result.artifacts)}")
        print(f"  Duration: {result.duration_ms}ms")
    else:
        print(f"\n\033[91mFailed!\033[0m")
        print(f"  Error: {result.error}")

    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
