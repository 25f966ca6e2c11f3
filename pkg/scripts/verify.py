import argparse
import logging
import sys

import cpinn


# Parse arguments

parser = argparse.ArgumentParser()
parser.add_argument("problem",
                    help="benchmark name, one of: {} (REQUIRED)".format(", ".join(cpinn.BENCHMARKS)))
parser.add_argument("--points", type=int, default=1000,
                    help="number of random interior points (default: 1000)")
parser.add_argument("--seed", type=int, default=0,
                    help="seed of the points (default: 0)")
parser.add_argument("--published", action="store_true", default=False,
                    help="check the data as printed in the literature instead of the generated data")
args = parser.parse_args()

logging.basicConfig(level=logging.INFO, format="%(message)s")

# Check the optimality system

sys.exit(cpinn.run_verify(args.problem, args.points, args.seed, args.published))
