import argparse
import logging
import sys

import cpinn


# Parse arguments

parser = argparse.ArgumentParser()
parser.add_argument("config",
                    help="experiment file (REQUIRED)")
parser.add_argument("key",
                    help="solver key to vary, e.g. pm_mu0 (REQUIRED)")
parser.add_argument("values", nargs="+",
                    help="values of the key, parsed as JSON when possible (REQUIRED)")
parser.add_argument("--seed", type=int, default=None,
                    help="random seed (default: first seed of the experiment)")
parser.add_argument("--precision", type=int, choices=[32, 64], default=None,
                    help="floating point precision (default: from the experiment, else 64)")
args = parser.parse_args()

logging.basicConfig(level=logging.INFO, format="%(message)s")

# Run the sweep

sys.exit(cpinn.run_sweep(args.config, args.key, args.values, seed=args.seed, precision=args.precision))
