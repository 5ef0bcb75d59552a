"""Run the three-stage IEEE33 scenario and write trace, summary and plot CSVs."""

import argparse
import sys

from dacc import cli

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--scenario", default="ieee33_dacc.scn")
p.add_argument("--out", default="out/ieee33_dacc")
p.add_argument("--seed", type=int, default=0)
args = p.parse_args()
sys.exit(cli.main(["simulate", "--scenario", args.scenario, "--out", args.out, "--seed", str(args.seed),
                   "--weights-every", "50"]))
