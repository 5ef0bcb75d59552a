"""DACC against plain averaging (TC) and W-MSR on the IEEE33 attack scenario."""

import argparse
import sys

from dacc import cli

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--scenario", default="ieee33_dacc.scn")
p.add_argument("--out", default="out/baselines")
p.add_argument("--seed", type=int, default=0)
args = p.parse_args()
sys.exit(cli.main(["compare", "--scenario", args.scenario, "--protocols", "dacc,tc,wmsr",
                   "--out", args.out, "--seed", str(args.seed)]))
