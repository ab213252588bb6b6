#!/usr/bin/env python3
"""Export beam-gain maps over user positions at the band edges and center.

Produces one matrix CSV per frequency for the phase-shifter-only combiner
(whose beam walks away from the user toward the band edges) and for the
TD-PS combiner (which keeps focus at all three frequencies).

Usage:
    python3 scripts/beam_focusing_maps.py --out maps/ [--learned]
"""

import argparse
from pathlib import Path

from beamfocus.baselines import pdf_oracle, ps_only_oracle
from beamfocus.cli import learn_pipeline, run_heatmap, search_pipeline
from beamfocus.combiner import CombinerConfig
from beamfocus.config import (
    ExperimentConfig,
    build_channel,
    build_codebook,
    build_geometry,
    build_system,
    build_ue,
)
from beamfocus.sim import center_bin


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=str, default="maps")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument(
        "--learned",
        action="store_true",
        help="use the learned pipeline for the TD-PS map instead of the oracle",
    )
    args = ap.parse_args()

    ec = ExperimentConfig(learner_seed=args.seed)
    geom = build_geometry(ec)
    ue = build_ue(ec)
    cb = build_codebook(ec)
    cfg = build_system(ec)
    H = build_channel(ec, geom, cfg)
    k = center_bin(H.freqs_hz, cfg.center_freq_hz)
    freqs = [H.freqs_hz[0], H.freqs_hz[k], H.freqs_hz[-1]]
    out = Path(args.out)

    ps = ps_only_oracle(H, cfg, cb)
    run_heatmap(ec, out, ps, cfg, freqs, label="ps_only")
    print("wrote PS-only maps")

    if args.learned:
        theta, _ = learn_pipeline(ec, H, cfg, cb)
        result = search_pipeline(ec, theta, geom, H, cfg, cb)
        tdps = CombinerConfig(theta=result.theta, tau=result.tau)
    else:
        tdps = pdf_oracle(geom, ue, H, cfg, cb)
    run_heatmap(ec, out, tdps, cfg, freqs, label="td_ps")
    print("wrote TD-PS maps")


if __name__ == "__main__":
    main()
