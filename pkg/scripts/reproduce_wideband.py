#!/usr/bin/env python3
"""Reproduce the wideband TD-unit sweep (gain profiles + summary table).

Runs the reference scenario (256-element random array, 100 GHz / 10 GHz,
3-bit phase shifters, user at [2, -2] m) for N in {0, 8, 16} twice: once
with the CSI oracles and once with the measurement-only learned pipeline.
Writes CSVs under --out and prints the summary rows.

Usage:
    python3 scripts/reproduce_wideband.py --out results/ [--skip-learned]
"""

import argparse
from pathlib import Path

from beamfocus.cli import run_profile
from beamfocus.config import ExperimentConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=str, default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-learned", action="store_true", help="oracles only")
    args = ap.parse_args()

    ec = ExperimentConfig(learner_seed=args.seed)
    out = Path(args.out)

    print("oracle sweep ...")
    run_profile(ec, out / "oracle", oracle=True)
    print_summary(out / "oracle" / "summary.csv")

    if not args.skip_learned:
        print("learned sweep (a few minutes) ...")
        run_profile(ec, out / "learned", oracle=False)
        print_summary(out / "learned" / "summary.csv")


def print_summary(path):
    for line in Path(path).read_text().splitlines():
        if not line.startswith("#"):
            print("   ", line)


if __name__ == "__main__":
    main()
