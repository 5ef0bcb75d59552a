"""Synchronous discrete-time engine for the secondary layer.

Each step every follower reads its in-neighbors' broadcast composites,
updates its evaluation memories, forms weights with the selected protocol and
moves its reference ``theta`` by ``u``. The plant is re-dispatched from the
new references, and errors are measured against the stage's
``omega_l + P^lm``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import plant
from .adversary import AttackAssignment, attack_error
from .design import SafetySpec
from .graph import LeaderFollowerGraph, MisbehaviorTopology
from .protocol import (DaccParams, control_input, dacc_weights, tc_weights, update_evaluation,
                       wmsr_filter)

DEFAULT_TS = 0.01


class ConfigError(ValueError):
    pass


# -- protocol choice ---------------------------------------------------------------

@dataclass(frozen=True)
class Dacc:
    params: DaccParams
    name: str = "dacc"


@dataclass(frozen=True)
class Tc:
    name: str = "tc"


@dataclass(frozen=True)
class Wmsr:
    f: int
    name: str = "wmsr"


ProtocolChoice = Dacc | Tc | Wmsr


# -- scenario ----------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioStage:
    t_start: float
    t_end: float
    reference: plant.ReferenceSignal
    misbehavior: MisbehaviorTopology = field(default_factory=MisbehaviorTopology)
    attacks: tuple[AttackAssignment, ...] = ()
    load_kw: float | None = None
    shed_nodes: frozenset[str] = frozenset()
    bad_channels_per_subscriber: int = 0

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ConfigError(f"stage must have t_start < t_end, got [{self.t_start}, {self.t_end})")
        object.__setattr__(self, "attacks", tuple(self.attacks))
        object.__setattr__(self, "shed_nodes", frozenset(self.shed_nodes))


@dataclass(frozen=True)
class Scenario:
    stages: tuple[ScenarioStage, ...]
    specs: Mapping[str, plant.DesSpec]
    t_s: float = DEFAULT_TS
    safety: SafetySpec | None = None
    loss_factor: float = plant.DEFAULT_LOSS_FACTOR

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ConfigError("scenario needs at least one stage")
        if not self.t_s > 0:
            raise ConfigError("t_s must be positive")
        for a, b in zip(self.stages, self.stages[1:]):
            if not math.isclose(a.t_end, b.t_start, abs_tol=1e-9):
                raise ConfigError(f"stages are not contiguous at t={a.t_end} / {b.t_start}")
        for s in self.stages:
            for k in (s.t_start / self.t_s, s.t_end / self.t_s):
                if abs(k - round(k)) > 1e-6:
                    raise ConfigError(f"stage boundary {k * self.t_s} is not a multiple of t_s")

    def boundary_steps(self) -> list[tuple[int, int]]:
        return [(round(s.t_start / self.t_s), round(s.t_end / self.t_s)) for s in self.stages]

    @property
    def start_step(self) -> int:
        return round(self.stages[0].t_start / self.t_s)

    @property
    def total_steps(self) -> int:
        return round(self.stages[-1].t_end / self.t_s) - self.start_step

    def stage_index(self, k: int) -> int:
        """Stage containing absolute step ``k``; the final record belongs to the last stage."""
        for idx, (a, b) in enumerate(self.boundary_steps()):
            if a <= k < b:
                return idx
        return len(self.stages) - 1

    def active_set(self, stage: ScenarioStage) -> frozenset[str]:
        return frozenset(self.specs) - stage.misbehavior.m1

    def load_kw(self, stage: ScenarioStage) -> float:
        if stage.load_kw is not None:
            return stage.load_kw
        return plant.load_for_reference(stage.reference.p_l, self.specs, self.active_set(stage),
                                        self.loss_factor)

    def truncated(self, stage: int | None = None, steps: int | None = None) -> "Scenario":
        """Restrict to one stage (1-based) and/or the first ``steps`` steps."""
        stages = list(self.stages)
        if stage is not None:
            if not 1 <= stage <= len(stages):
                raise ConfigError(f"stage {stage} out of range 1..{len(stages)}")
            stages = [stages[stage - 1]]
        if steps is not None:
            if steps < 1:
                raise ConfigError("steps must be positive")
            t_stop = stages[0].t_start + steps * self.t_s
            cut = []
            for s in stages:
                if s.t_start >= t_stop - 1e-12:
                    break
                cut.append(_replace_end(s, min(s.t_end, t_stop)))
            stages = cut
        return Scenario(tuple(stages), self.specs, self.t_s, self.safety, self.loss_factor)


def _replace_end(s: ScenarioStage, t_end: float) -> ScenarioStage:
    return ScenarioStage(s.t_start, t_end, s.reference, s.misbehavior, s.attacks, s.load_kw,
                         s.shed_nodes, s.bad_channels_per_subscriber)


# -- engine ------------------------------------------------------------------------

@dataclass
class SimState:
    k: int
    theta: dict[str, float]
    r: dict[tuple[str, str], float] = field(default_factory=dict)


def reference_offset(scn: Scenario, stage: ScenarioStage) -> float:
    """omega_l + P^lm for the stage's active set and load."""
    state = plant.PlantState({i: 0.0 for i in scn.specs}, scn.active_set(stage), scn.load_kw(stage),
                             scn.loss_factor)
    return stage.reference.omega_l + plant.plm(state, scn.specs)


def broadcasts(g: LeaderFollowerGraph, scn: Scenario, stage: ScenarioStage, state: SimState,
               offset: float) -> dict[str, float]:
    """Value each agent transmits at step k; silent agents are absent."""
    attacks: dict[str, AttackAssignment] = {}
    for a in stage.attacks:
        if a.active(state.k):
            attacks[a.target] = a
    out = {}
    ref = stage.reference
    for n in g.node_ids:
        if n in attacks:
            a = attacks[n]
            out[n] = offset + attack_error(a.attack, state.k - a.start_step, scn.t_s)
        elif n in stage.misbehavior.misbehaving:
            # cut-off or compromised agent with no configured signal stays quiet
            continue
        elif g.is_leader(n):
            out[n] = ref.omega_l + ref.p_l
        else:
            out[n] = state.theta[n]
    return out


def _weights(protocol: ProtocolChoice, own: float, comps: dict[str, float],
             r_row: Sequence[float]) -> dict[str, float]:
    names = list(comps)
    if isinstance(protocol, Dacc):
        w = dacc_weights(r_row, protocol.params.sigma)
        return dict(zip(names, w.tolist()))
    if isinstance(protocol, Tc):
        w = tc_weights(len(names))
        return dict(zip(names, w.tolist()))
    kept = wmsr_filter(own, comps, protocol.f)
    w = tc_weights(len(kept))
    return dict(zip(kept, w.tolist()))


def step(state: SimState, g: LeaderFollowerGraph, protocol: ProtocolChoice, scn: Scenario,
         stage: ScenarioStage, offset: float | None = None) -> SimState:
    if offset is None:
        offset = reference_offset(scn, stage)
    sent = broadcasts(g, scn, stage, state, offset)
    eta = protocol.params.eta if isinstance(protocol, Dacc) else 1.0
    m1 = stage.misbehavior.m1
    theta = dict(state.theta)
    r = dict(state.r)
    for i in g.followers:
        if i in m1:
            continue
        own = state.theta[i]
        comps = {j: sent[j] for j in g.in_neighbors(i) if j in sent}
        if not comps:
            continue
        row = []
        for j, c in comps.items():
            key = (i, j)
            r[key] = update_evaluation(r.get(key, 0.0), own - c, eta, is_initial=key not in r)
            row.append(r[key])
        w = _weights(protocol, own, comps, row)
        theta[i] = own + control_input(own, {j: comps[j] for j in w}, w)
    return SimState(state.k + 1, theta, r)


# -- trace -------------------------------------------------------------------------

@dataclass
class SimTrace:
    agents: tuple[str, ...]
    t_s: float
    steps: np.ndarray          # absolute step index per record
    stage: np.ndarray          # stage index per record
    theta: np.ndarray          # (records, agents)
    p: np.ndarray
    omega_sync: np.ndarray
    error: np.ndarray
    normal: np.ndarray         # bool (records, agents): normal follower at that record
    offsets: np.ndarray        # omega_l + P^lm per record
    stage_bounds: list[tuple[int, int]]   # record-index ranges, last one inclusive of the end
    weights: dict[int, dict[tuple[str, str], float]] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.steps * self.t_s

    @property
    def norms(self) -> np.ndarray:
        """||e(k)||_inf over normal followers."""
        masked = np.where(self.normal, np.abs(self.error), 0.0)
        return masked.max(axis=1)

    def __len__(self) -> int:
        return len(self.steps)


def initial_theta(g: LeaderFollowerGraph, scn: Scenario, seed: int, c_n: float | None = None) -> dict[str, float]:
    if c_n is None:
        c_n = scn.safety.c_n if scn.safety else math.pi
    offset = reference_offset(scn, scn.stages[0])
    rng = np.random.default_rng(seed)
    draws = rng.uniform(-c_n, c_n, size=len(g.followers))
    return {i: offset + float(d) for i, d in zip(g.followers, draws)}


def run(scn: Scenario, g: LeaderFollowerGraph, protocol: ProtocolChoice, seed: int = 0,
        theta0: Mapping[str, float] | None = None, weights_every: int = 0) -> SimTrace:
    missing = set(g.followers) - set(scn.specs)
    if missing:
        raise ConfigError(f"followers without a droop roster entry: {sorted(missing)}")
    for s in scn.stages:
        s.misbehavior.validate(g)
        for a in s.attacks:
            if a.target not in s.misbehavior.misbehaving:
                raise ConfigError(f"attack target {a.target} is not misbehaving in its stage")
    agents = tuple(g.followers)
    state = SimState(scn.start_step, dict(theta0) if theta0 is not None else initial_theta(g, scn, seed))
    n_rec = scn.total_steps + 1
    stage_idx = np.empty(n_rec, dtype=int)
    theta = np.empty((n_rec, len(agents)))
    p = np.empty_like(theta)
    err = np.empty_like(theta)
    normal = np.empty_like(theta, dtype=bool)
    omega = np.empty(n_rec)
    offsets_rec = np.empty(n_rec)
    weights: dict[int, dict[tuple[str, str], float]] = {}
    offsets = [reference_offset(scn, s) for s in scn.stages]

    for rec in range(n_rec):
        k = scn.start_step + rec
        si = scn.stage_index(k)
        stage = scn.stages[si]
        ps = plant.PlantState(state.theta, scn.active_set(stage), scn.load_kw(stage), scn.loss_factor)
        d = plant.dispatch(ps, scn.specs)
        stage_idx[rec] = si
        omega[rec] = d.omega_sync
        offsets_rec[rec] = offsets[si]
        normal_set = set(stage.misbehavior.normal_followers(g))
        for col, i in enumerate(agents):
            theta[rec, col] = state.theta[i]
            p[rec, col] = d.p[i]
            err[rec, col] = state.theta[i] - offsets[si]
            normal[rec, col] = i in normal_set
        if rec == n_rec - 1:
            break
        if weights_every and rec % weights_every == 0:
            weights[k] = _snapshot_weights(state, g, protocol, scn, stage, offsets[si])
        state = step(state, g, protocol, scn, stage, offsets[si])

    bounds = []
    for a, b in scn.boundary_steps():
        bounds.append((a - scn.start_step, b - scn.start_step))
    last_a, last_b = bounds[-1]
    bounds[-1] = (last_a, last_b + 1)
    return SimTrace(agents, scn.t_s, np.arange(scn.start_step, scn.start_step + n_rec), stage_idx,
                    theta, p, omega, err, normal, offsets_rec, bounds, weights)


def _snapshot_weights(state: SimState, g: LeaderFollowerGraph, protocol: ProtocolChoice,
                      scn: Scenario, stage: ScenarioStage, offset: float) -> dict[tuple[str, str], float]:
    """Weights the next step will use, computed on a throwaway copy of the memories."""
    sent = broadcasts(g, scn, stage, state, offset)
    eta = protocol.params.eta if isinstance(protocol, Dacc) else 1.0
    out = {}
    for i in g.followers:
        if i in stage.misbehavior.m1:
            continue
        own = state.theta[i]
        comps = {j: sent[j] for j in g.in_neighbors(i) if j in sent}
        if not comps:
            continue
        row = [update_evaluation(state.r.get((i, j), 0.0), own - c, eta, (i, j) not in state.r)
               for j, c in comps.items()]
        for j, w in _weights(protocol, own, comps, row).items():
            out[(j, i)] = w
    return out


# -- verdicts ----------------------------------------------------------------------

@dataclass(frozen=True)
class LruubVerdict:
    safety_ok: bool
    uub_ok: bool
    k_f_observed: int | None
    ultimate_bound_observed: float
    violations: tuple[tuple[int, str, float], ...] = ()
    stages: tuple["LruubVerdict", ...] = ()


def _window_verdict(trace: SimTrace, lo: int, hi: int, spec: SafetySpec, min_tail: int,
                    max_violations: int) -> LruubVerdict:
    err = np.where(trace.normal[lo:hi], np.abs(trace.error[lo:hi]), 0.0)
    norms = err.max(axis=1)
    bad = np.argwhere(err > spec.c_n)
    violations = tuple((int(trace.steps[lo + r]), trace.agents[c], float(trace.error[lo + r, c]))
                       for r, c in bad[:max_violations])
    outside = np.flatnonzero(norms > spec.epsilon)
    k_f = 0 if outside.size == 0 else int(outside[-1]) + 1
    n = hi - lo
    if n - k_f >= min(min_tail, n):
        tail = float(norms[k_f:].max()) if k_f < n else math.nan
        return LruubVerdict(bad.size == 0, k_f < n, k_f if k_f < n else None, tail, violations)
    return LruubVerdict(bad.size == 0, False, None, math.nan, violations)


def check_lruub(trace: SimTrace, spec: SafetySpec, stage_bounds: Sequence[tuple[int, int]] | None = None,
                min_tail: int = 10, max_violations: int = 100) -> LruubVerdict:
    """Safety over every normal follower and UUB judged stage by stage.

    ``k_f`` is relative to each stage's first record: the smallest offset after
    which every normal error stays inside [-epsilon, epsilon] to the end of the
    stage, with at least ``min_tail`` records of evidence. The aggregate verdict
    reports the worst stage.
    """
    if len(trace) == 0:
        raise ConfigError("empty trace")
    bounds = list(stage_bounds) if stage_bounds is not None else trace.stage_bounds
    parts = tuple(_window_verdict(trace, lo, hi, spec, min_tail, max_violations) for lo, hi in bounds)
    k_fs = [v.k_f_observed for v in parts]
    uub = all(v.uub_ok for v in parts)
    tails = [v.ultimate_bound_observed for v in parts if v.uub_ok]
    return LruubVerdict(
        safety_ok=all(v.safety_ok for v in parts),
        uub_ok=uub,
        k_f_observed=max(k_fs) if uub else None,
        ultimate_bound_observed=max(tails) if uub else math.nan,
        violations=tuple(x for v in parts for x in v.violations)[:max_violations],
        stages=parts,
    )


def metric_log1p_norm(trace: SimTrace | np.ndarray) -> np.ndarray:
    norms = trace.norms if isinstance(trace, SimTrace) else np.asarray(trace, dtype=float)
    # clamp only the logged metric so diverged baselines stay finite
    return np.log1p(np.minimum(norms, np.finfo(float).max))


# -- CSV output --------------------------------------------------------------------

TRACE_HEADER = ("step", "time", "stage", "agent", "theta", "p", "omega_sync", "error")


def write_trace_csv(trace: SimTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for r in range(len(trace)):
            k = int(trace.steps[r])
            for c, a in enumerate(trace.agents):
                w.writerow((k, repr(k * trace.t_s), int(trace.stage[r]) + 1, a, repr(float(trace.theta[r, c])),
                            repr(float(trace.p[r, c])), repr(float(trace.omega_sync[r])),
                            repr(float(trace.error[r, c]))))


def read_trace_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_summary_csv(trace: SimTrace, verdict: LruubVerdict, path: str | Path, label: str = "") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("label", "stage", "safety_ok", "uub_ok", "k_f_observed", "ultimate_bound_observed",
                    "max_norm", "final_norm", "violations"))
        norms = trace.norms
        rows = [("all", verdict, 0, len(trace))] + [
            (str(i + 1), v, lo, hi) for i, (v, (lo, hi)) in enumerate(zip(verdict.stages, trace.stage_bounds))]
        for name, v, lo, hi in rows:
            w.writerow((label, name, v.safety_ok, v.uub_ok, "" if v.k_f_observed is None else v.k_f_observed,
                        repr(v.ultimate_bound_observed), repr(float(norms[lo:hi].max())),
                        repr(float(norms[hi - 1])), len(v.violations)))


def write_plot_data(trace: SimTrace, out_dir: str | Path, prefix: str = "") -> list[Path]:
    """Wide CSVs for the frequency, power and ln(1+||e||) figure families."""
    out_dir = Path(out_dir)
    paths = []
    families = {
        "frequency": ("omega_sync", trace.omega_sync[:, None]),
        "theta": (None, trace.theta),
        "power": (None, trace.p),
        "log1p_norm": ("log1p_norm", metric_log1p_norm(trace)[:, None]),
    }
    for name, (col, data) in families.items():
        p = out_dir / f"{prefix}{name}.csv"
        cols = [col] if col else list(trace.agents)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("step", "time", "stage", *cols))
            for r in range(len(trace)):
                k = int(trace.steps[r])
                w.writerow((k, repr(k * trace.t_s), int(trace.stage[r]) + 1, *(repr(float(x)) for x in data[r])))
        paths.append(p)
    return paths


def write_weights_csv(trace: SimTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("step", "source", "target", "weight"))
        for k, ws in sorted(trace.weights.items()):
            for (j, i), a in sorted(ws.items()):
                w.writerow((k, j, i, repr(a)))
