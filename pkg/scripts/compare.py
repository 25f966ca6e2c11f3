import argparse
import logging
import sys

import cpinn


# Parse arguments

parser = argparse.ArgumentParser()
parser.add_argument("config",
                    help="experiment file listing the methods to compare (REQUIRED)")
parser.add_argument("--seed", type=int, default=None,
                    help="run a single seed instead of the experiment's seeds (default: None)")
parser.add_argument("--precision", type=int, choices=[32, 64], default=None,
                    help="floating point precision (default: from the experiment, else 64)")
args = parser.parse_args()

logging.basicConfig(level=logging.INFO, format="%(message)s")

# Run every method

sys.exit(cpinn.run_comparison(args.config, seed=args.seed, precision=args.precision))
