"""Inject the adversary at several steps after convergence and record the excursion."""

import argparse
import csv
import dataclasses
from pathlib import Path

from dacc import design, scenario, sim

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--steps", default="250,300,400,450,520", help="comma-separated injection steps")
p.add_argument("--out", default="out/injection")
args = p.parse_args()

sf = scenario.read_scenario(scenario.bundled("ieee33_late_injection.scn"))
params = sim.Dacc(design.DaccParams(sf.sigma, sf.eta))
k_bound = design.finite_time_bound(sf.summary, sf.safety, params.params)
out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)
rows = []
for k0 in (int(x) for x in args.steps.split(",")):
    s1, s2, s3 = sf.scenario.stages
    t0 = k0 * sf.scenario.t_s
    attacks = tuple(dataclasses.replace(a, start_step=k0) for a in s3.attacks)
    scn = dataclasses.replace(sf.scenario, stages=(s1, dataclasses.replace(s2, t_end=t0),
                                                   dataclasses.replace(s3, t_start=t0, attacks=attacks)))
    tr = sim.run(scn, sf.graph, params, sf.seed)
    post = tr.norms[k0 - scn.start_step:]
    back = next((k for k, v in enumerate(post) if v <= sf.safety.epsilon), None)
    rows.append((k0, tr.norms[k0 - 1], post.max(), back))
    print(f"k0={k0:4d} before={tr.norms[k0 - 1]:.2e} max after={post.max():.2e} "
          f"back below eps after {back} steps (bound {k_bound:.3g})")
    with open(out / f"k0_{k0}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("step", "log1p_norm"))
        w.writerows((int(k), repr(float(m))) for k, m in zip(tr.steps, sim.metric_log1p_norm(tr)))
