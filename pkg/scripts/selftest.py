import argparse
import logging
import sys
import time

import cpinn


# Parse arguments

parser = argparse.ArgumentParser()
parser.add_argument("--nets", type=int, default=100,
                    help="number of random networks of the derivative suite (default: 100)")
parser.add_argument("--pairs", type=int, default=1000,
                    help="number of random network pairs of the bound suite (default: 1000)")
parser.add_argument("--seed", type=int, default=0,
                    help="random seed (default: 0)")
args = parser.parse_args()

logging.basicConfig(level=logging.INFO, format="%(message)s")

# Run the suites

start_time = time.time()
passed = cpinn.run_selftest(args.nets, args.pairs, args.seed)
logging.info("{} in {:.1f}s".format("passed" if passed else "FAILED", time.time() - start_time))

sys.exit(0 if passed else cpinn.EXIT_CHECK_FAILED)
