"""Run the original and both rewired IEEE33 graphs with unchanged parameters."""

import argparse
from pathlib import Path

from dacc import graph, scenario, sim
from dacc.protocol import DaccParams

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--out", default="out/rewired")
p.add_argument("--seed", type=int, default=0)
args = p.parse_args()

for name in ("ieee33_dacc.scn", "ieee33_case1.scn", "ieee33_case2.scn"):
    sf = scenario.read_scenario(scenario.bundled(name))
    g = sf.graph
    tr = sim.run(sf.scenario, g, sim.Dacc(DaccParams(sf.sigma, sf.eta)), args.seed)
    v = sim.check_lruub(tr, sf.safety)
    out = Path(args.out) / Path(name).stem
    out.mkdir(parents=True, exist_ok=True)
    sim.write_plot_data(tr, out)
    print(f"{name}: depth {g.depth}, 5-robust {graph.is_r_robust(g, r=5)}, "
          f"assumption 1 {graph.check_assumption1(g, None, 2, 3)}, safety_ok={v.safety_ok} uub_ok={v.uub_ok} "
          f"k_f={[s.k_f_observed for s in v.stages]}")
