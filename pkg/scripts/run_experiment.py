#!/usr/bin/env python3
"""Drive one experiment end to end: simulate, reconstruct, evaluate, plot.

Usage: python scripts/run_experiment.py experiments/full_two_waves_pear.json
       [--seed N] [--chains N] [--prior-only]
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from scatterbayes.cli import main as cli_main  # noqa: E402
from scatterbayes.config import load_config  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("config", help="experiment config JSON")
    parser.add_argument("--seed", type=int, help="override the chain seed")
    parser.add_argument("--chains", type=int, default=1)
    parser.add_argument("--prior-only", action="store_true")
    args = parser.parse_args()

    cfg = load_config(args.config)
    outdir = cfg.output_dir

    rc = cli_main(["simulate", "--config", args.config])
    if rc:
        return rc

    obs = os.path.join(outdir, "observations.txt")
    rec = ["reconstruct", "--config", args.config, obs,
           "--chains", str(args.chains)]
    if args.seed is not None:
        rec += ["--seed", str(args.seed)]
    if args.prior_only:
        rec += ["--prior-only"]
    rc = cli_main(rec)
    if rc:
        return rc

    boundary = os.path.join(outdir, "boundary.csv")
    rc = cli_main(["evaluate", boundary])
    if rc:
        return rc
    return cli_main(["plot", boundary,
                     "--chain", os.path.join(outdir, "chain_00.csv")])


if __name__ == "__main__":
    sys.exit(main())
