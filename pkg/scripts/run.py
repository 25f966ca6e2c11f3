import argparse
import logging
import sys

import cpinn


# Parse arguments

parser = argparse.ArgumentParser()
parser.add_argument("config",
                    help="experiment file, or the name of a file in experiments/ (REQUIRED)")
parser.add_argument("--seed", type=int, default=None,
                    help="random seed (default: first seed of the experiment)")
parser.add_argument("--precision", type=int, choices=[32, 64], default=None,
                    help="floating point precision (default: from the experiment, else 64)")
args = parser.parse_args()

logging.basicConfig(level=logging.INFO, format="%(message)s")

# Run the experiment

sys.exit(cpinn.run_experiment(args.config, seed=args.seed, precision=args.precision))
