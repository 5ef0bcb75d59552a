"""Design intervals for the IEEE33 network under both in-degree readings."""

import argparse
import math

from dacc import design

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--c-n", type=float, default=math.pi)
p.add_argument("--c-m", type=float, default=3.1 * math.pi)
p.add_argument("--epsilon", type=float, default=1e-3)
args = p.parse_args()

spec = design.SafetySpec(args.c_n, args.c_m, args.epsilon)
print(f"{'d_max':>5} {'sigma_p':>9} {'sigma_f':>9} {'eta_f(0.9)':>10} {'cor1(0.9)':>9} "
      f"{'sigma':>9} {'eta':>9} {'K(0.9,0.4)':>11} {'b(0.9,0.4)':>11}")
for d_max in (5, 9):
    gs = design.GraphSummary(2, 3, 4, d_max)
    res = design.algorithm1(gs, spec)
    p09 = design.DaccParams(0.9, 0.4)
    try:
        k = f"{design.finite_time_bound(gs, spec, p09):11.3g}"
    except design.InfeasibleDesign:
        k = f"{'n/a':>11}"
    sigma = f"{res.params.sigma:9.5f}" if res.feasible else f"{'-':>9}"
    eta = f"{res.params.eta:9.5f}" if res.feasible else f"{'-':>9}"
    print(f"{d_max:>5} {res.sigma_interval_p.lower:9.5f} {res.sigma_interval_f.lower:9.5f} "
          f"{design.eta_interval_f(0.9, gs, spec).lower:10.5f} {design.corollary1_eta_lower(0.9, gs, spec):9.5f} "
          f"{sigma} {eta} {k} {design.ultimate_bound(gs, spec, p09):11.3g}")
