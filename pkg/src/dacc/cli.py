"""Command-line entry point: design, simulate, graph-check, compare."""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import design, graph, sim
from .protocol import DaccParams
from .scenario import ConfigError, ScenarioFile, bundled, read_scenario

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_VERDICT = 0, 1, 2, 3


class InfeasibleError(Exception):
    def __init__(self, result: design.DesignResult):
        super().__init__(result.advice or "infeasible design")
        self.result = result


def _resolve_path(p: str) -> Path:
    """Accept a filesystem path or the bare name of a bundled data file."""
    path = Path(p)
    if path.exists() or path.is_absolute():
        return path
    candidate = bundled(p)
    return candidate if candidate.exists() else path


def _load(args) -> ScenarioFile:
    return read_scenario(_resolve_path(args.scenario))


def _print_design(res: design.DesignResult, gs: design.GraphSummary, spec: design.SafetySpec, out=None):
    out = out or sys.stdout
    print(f"inputs: g={gs.g} f={gs.f} h={gs.h} d_max={gs.d_max} "
          f"c_n={spec.c_n:.6g} c_m={spec.c_m:.6g} epsilon={spec.epsilon:.6g}", file=out)
    print(f"sigma_lower_p = {res.sigma_interval_p.lower:.6g}", file=out)
    print(f"I_sigma^p = {res.sigma_interval_p}", file=out)
    print(f"I_sigma^f = {res.sigma_interval_f}", file=out)
    print(f"I_eta^f = {res.eta_interval}", file=out)
    if res.feasible:
        p = res.params
        print(f"sigma = {p.sigma:.6g}", file=out)
        print(f"eta = {p.eta:.6g}", file=out)
        print(f"corollary1_eta_lower = {design.corollary1_eta_lower(p.sigma, gs, spec):.6g}", file=out)
        try:
            print(f"finite_time_bound = {design.finite_time_bound(gs, spec, p):.6g}", file=out)
        except design.InfeasibleDesign as exc:
            print(f"finite_time_bound = unavailable ({exc})", file=out)
        print(f"ultimate_bound = {design.ultimate_bound(gs, spec, p):.6g}", file=out)
    else:
        print(f"infeasible: {res.advice}", file=out)


def resolve_protocol(sf: ScenarioFile, name: str | None = None, sigma: float | None = None,
                     eta: float | None = None) -> sim.ProtocolChoice:
    name = (name or sf.protocol).lower()
    if name == "tc":
        return sim.Tc()
    if name == "wmsr":
        f = sf.wmsr_f if sf.wmsr_f is not None else (sf.summary.f if sf.summary else None)
        if f is None:
            raise ConfigError("wmsr needs wmsr_f or f in the scenario")
        return sim.Wmsr(f)
    if name != "dacc":
        raise ConfigError(f"unknown protocol {name!r}")
    s = sigma if sigma is not None else sf.sigma
    e = eta if eta is not None else sf.eta
    if "auto" in (s, e):
        if sf.summary is None:
            raise ConfigError("auto parameters need a graph summary")
        res = design.algorithm1(sf.summary, sf.safety)
        if not res.feasible:
            raise InfeasibleError(res)
        s = res.params.sigma if s == "auto" else s
        e = res.params.eta if e == "auto" else e
    try:
        return sim.Dacc(DaccParams(float(s), float(e)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _protocol_label(p: sim.ProtocolChoice) -> str:
    if isinstance(p, sim.Dacc):
        return f"dacc(sigma={p.params.sigma:g},eta={p.params.eta:g})"
    if isinstance(p, sim.Wmsr):
        return f"wmsr(f={p.f})"
    return "tc"


# -- subcommands -------------------------------------------------------------------

def cmd_design(args) -> int:
    if args.scenario:
        sf = _load(args)
        if sf.summary is None:
            raise ConfigError("scenario has no g, f, h, d_max for the design")
        gs, spec = sf.summary, sf.safety
    else:
        missing = [k for k in ("g", "f", "h", "d_max") if getattr(args, k) is None]
        if missing:
            raise ConfigError(f"design needs --scenario or all of --g --f --h --d-max (missing {missing})")
        gs = design.GraphSummary(args.g, args.f, args.h, args.d_max)
        spec = design.SafetySpec(args.c_n, args.c_m, args.epsilon)
    res = design.algorithm1(gs, spec)
    _print_design(res, gs, spec)
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def _scenario_for(args, sf: ScenarioFile) -> sim.Scenario:
    return sf.scenario.truncated(stage=args.stage, steps=args.steps) if (args.stage or args.steps) else sf.scenario


def _out_dir(args, sf: ScenarioFile) -> Path:
    out = Path(args.out) if args.out else (sf.out or Path("out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    sf = _load(args)
    protocol = resolve_protocol(sf, args.protocol, args.sigma, args.eta)
    scn = _scenario_for(args, sf)
    seed = sf.seed if args.seed is None else args.seed
    trace = sim.run(scn, sf.graph, protocol, seed, weights_every=args.weights_every)
    verdict = sim.check_lruub(trace, sf.safety)
    out = _out_dir(args, sf)
    sim.write_trace_csv(trace, out / "trace.csv")
    sim.write_summary_csv(trace, verdict, out / "summary.csv", _protocol_label(protocol))
    sim.write_plot_data(trace, out)
    if args.weights_every:
        sim.write_weights_csv(trace, out / "weights.csv")
    print(f"protocol {_protocol_label(protocol)}, seed {seed}, {len(trace) - 1} steps -> {out}")
    for k, v in enumerate(verdict.stages, 1):
        print(f"stage {k}: safety_ok={v.safety_ok} uub_ok={v.uub_ok} k_f={v.k_f_observed} "
              f"tail={v.ultimate_bound_observed:.3g}")
    print(f"overall: safety_ok={verdict.safety_ok} uub_ok={verdict.uub_ok}")
    if args.assert_lruub and not (verdict.safety_ok and verdict.uub_ok):
        return EXIT_VERDICT
    return EXIT_OK


def cmd_graph_check(args) -> int:
    g = graph.read_graph(_resolve_path(args.graph))
    p = g.partition
    print(f"leaders: {' '.join(g.leaders)}")
    for n, level in enumerate(p.levels, 1):
        print(f"level {n}: {' '.join(i for i in g.followers if i in level)}")
    print(f"depth: {p.depth}")
    print(f"d_max: {g.d_max}")
    print(f"effective d_max: {g.effective_d_max}")
    if args.g is not None:
        ok = graph.check_assumption1(g, p, args.g, args.f)
        print(f"assumption 1 (g={args.g}, f={args.f}): {'satisfied' if ok else 'violated'}")
    try:
        r = 0
        while r < len(p.level(1)) and graph.is_r_robust(g, p, r + 1, cap=args.cap):
            r += 1
        print(f"robustness: {r}-robust" + ("" if r < len(p.level(1)) else " (bounded by |level 1|)"))
    except graph.TooLarge:
        print("robustness: unknown: above enumeration cap")
    return EXIT_OK


def _threads() -> int | None:
    v = os.environ.get("DACC_SIM_THREADS")
    if v is None:
        return None
    try:
        n = int(v)
    except ValueError as exc:
        raise ConfigError(f"DACC_SIM_THREADS must be an integer, got {v!r}") from exc
    if n < 1:
        raise ConfigError("DACC_SIM_THREADS must be at least 1")
    return n


def compare(sf: ScenarioFile, protocols: list[sim.ProtocolChoice], seed: int,
            scn: sim.Scenario | None = None, threads: int | None = None) -> list[sim.SimTrace]:
    if len(protocols) < 2:
        raise ConfigError("compare needs at least two protocols")
    scn = scn or sf.scenario
    with ThreadPoolExecutor(max_workers=threads or len(protocols)) as pool:
        return list(pool.map(lambda p: sim.run(scn, sf.graph, p, seed), protocols))


def cmd_compare(args) -> int:
    sf = _load(args)
    names = [x.strip() for x in args.protocols.split(",") if x.strip()]
    protocols = [resolve_protocol(sf, n, args.sigma, args.eta) for n in names]
    seed = sf.seed if args.seed is None else args.seed
    scn = _scenario_for(args, sf)
    traces = compare(sf, protocols, seed, scn, _threads())
    out = _out_dir(args, sf)
    labels = [_protocol_label(p) for p in protocols]
    metrics = [sim.metric_log1p_norm(t) for t in traces]
    with open(out / "compare.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("step", "time", "stage", *labels))
        ref = traces[0]
        for r in range(len(ref)):
            k = int(ref.steps[r])
            w.writerow((k, repr(k * ref.t_s), int(ref.stage[r]) + 1, *(repr(float(m[r])) for m in metrics)))
    for label, t, m in zip(labels, traces, metrics):
        v = sim.check_lruub(t, sf.safety)
        per_stage = " ".join(f"s{k}:max={m[lo:hi].max():.3g}/uub={s.uub_ok}"
                             for k, (s, (lo, hi)) in enumerate(zip(v.stages, t.stage_bounds), 1))
        print(f"{label}: {per_stage}")
    print(f"wrote {out / 'compare.csv'}")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dacc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="run the parameter design and print the intervals")
    d.add_argument("--scenario")
    d.add_argument("--g", type=int)
    d.add_argument("--f", type=int)
    d.add_argument("--h", type=int)
    d.add_argument("--d-max", dest="d_max", type=int)
    d.add_argument("--c-n", dest="c_n", type=float, default=math.pi)
    d.add_argument("--c-m", dest="c_m", type=float, default=3.1 * math.pi)
    d.add_argument("--epsilon", type=float, default=1e-3)
    d.set_defaults(func=cmd_design)

    def run_flags(p):
        p.add_argument("--scenario", required=True)
        p.add_argument("--sigma", type=float)
        p.add_argument("--eta", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--stage", type=int)
        p.add_argument("--steps", type=int)

    s = sub.add_parser("simulate", help="run a scenario and write trace, summary and plot data")
    run_flags(s)
    s.add_argument("--protocol", choices=("dacc", "tc", "wmsr"))
    s.add_argument("--assert-lruub", action="store_true", help="exit 3 unless safety and UUB hold")
    s.add_argument("--weights-every", type=int, default=0, metavar="N")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="ln(1+||e||) of several protocols on one scenario")
    run_flags(c)
    c.add_argument("--protocols", default="dacc,tc,wmsr")
    c.set_defaults(func=cmd_compare)

    gc = sub.add_parser("graph-check", help="partition, degrees, Assumption 1 and robustness")
    gc.add_argument("graph")
    gc.add_argument("--g", type=int)
    gc.add_argument("--f", type=int, default=0)
    gc.add_argument("--cap", type=int, default=graph.DEFAULT_ENUMERATION_CAP)
    gc.set_defaults(func=cmd_graph_check)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, graph.GraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
