"""Reader for the flat ``.scn`` scenario format.

A file has one ``[scenario]`` section, any number of ``[profile NAME]``
attack profiles and one ``[stage]`` section per stage, in time order::

    [scenario]
    graph = ieee33.graph        # paths are relative to the scenario file
    roster = ieee33.roster
    c_n = pi
    sigma = 0.9                 # or "auto" to run the parameter design

    [profile sec5]
    chi0 = 120
    components = (41*pi, 20), (151*pi, 11)
    sign = positive

    [stage]
    t_start = 2
    t_end = 4
    omega_l = 99.6*pi
    p_l = 0.24755
    m1 = 19 20 21
    m2 = 22 23 24 L1 L2
    attack = 19 20 21 22 23 24 : sec5
    attack = L1 L2 : sec5 @ 250 300     # optional absolute start/end step

Values are arithmetic expressions over numbers and ``pi``.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path

from . import plant
from .adversary import AttackAssignment, FourierAttack, SignPattern
from .design import GraphSummary, SafetySpec
from .graph import LeaderFollowerGraph, MisbehaviorTopology, read_graph
from .sim import ConfigError, Scenario, ScenarioStage

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi}


def evaluate(expr: str) -> float:
    """Evaluate a numeric expression such as ``3.1*pi`` without ``eval``."""
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {expr!r}") from exc

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](walk(node.operand))
        raise ConfigError(f"unsupported element in expression {expr!r}")

    return walk(tree)


def _pairs(text: str) -> tuple[tuple[float, float], ...]:
    try:
        tree = ast.parse(f"[{text}]", mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad component list {text!r}") from exc
    out = []
    for elt in tree.body.elts:
        if not (isinstance(elt, ast.Tuple) and len(elt.elts) == 2):
            raise ConfigError(f"components must be (omega, chi) pairs, got {text!r}")
        out.append(tuple(evaluate(ast.unparse(e)) for e in elt.elts))
    return tuple(out)


@dataclass
class Section:
    kind: str
    name: str | None
    lineno: int
    items: list[tuple[str, str, int]] = field(default_factory=list)

    def get(self, key: str, default: str | None = None) -> str | None:
        vals = [v for k, v, _ in self.items if k == key]
        if len(vals) > 1:
            raise ConfigError(f"line {self.lineno}: key {key!r} repeated in [{self.kind}]")
        return vals[0] if vals else default

    def all(self, key: str) -> list[tuple[str, int]]:
        return [(v, n) for k, v, n in self.items if k == key]


def parse_sections(text: str) -> list[Section]:
    sections: list[Section] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: unterminated section header")
            head = line[1:-1].split()
            if not head:
                raise ConfigError(f"line {lineno}: empty section header")
            sections.append(Section(head[0].lower(), " ".join(head[1:]) or None, lineno))
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if not sections:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, value = (s.strip() for s in line.split("=", 1))
        sections[-1].items.append((key.lower(), value, lineno))
    return sections


@dataclass
class ScenarioFile:
    path: Path | None
    graph: LeaderFollowerGraph
    scenario: Scenario
    safety: SafetySpec
    protocol: str = "dacc"
    sigma: float | str = "auto"
    eta: float | str = "auto"
    wmsr_f: int | None = None
    summary: GraphSummary | None = None
    seed: int = 0
    out: Path | None = None
    profiles: dict[str, FourierAttack] = field(default_factory=dict)


def _ids(value: str | None) -> frozenset[str]:
    return frozenset((value or "").replace(",", " ").split())


def _profile(sec: Section) -> FourierAttack:
    if not sec.name:
        raise ConfigError(f"line {sec.lineno}: profile needs a name")
    try:
        return FourierAttack(
            chi0=evaluate(sec.get("chi0", "0")),
            components=_pairs(sec.get("components", "")),
            sign_pattern=SignPattern(sec.get("sign", "seeded-random")),
            seed=int(evaluate(sec.get("seed", "0"))),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"profile {sec.name}: {exc}") from exc


def _stage(sec: Section, profiles: dict[str, FourierAttack], t_s: float) -> ScenarioStage:
    def need(key):
        v = sec.get(key)
        if v is None:
            raise ConfigError(f"line {sec.lineno}: stage is missing {key!r}")
        return evaluate(v)

    t_start, t_end = need("t_start"), need("t_end")
    m1, m2 = _ids(sec.get("m1")), _ids(sec.get("m2"))
    f_bound = int(evaluate(sec.get("f", "0")))
    attacks = []
    first_step = round(t_start / t_s)
    for value, lineno in sec.all("attack"):
        if ":" not in value:
            raise ConfigError(f"line {lineno}: attack needs 'TARGETS : PROFILE'")
        targets, rhs = value.split(":", 1)
        rhs, _, window = rhs.partition("@")
        name = rhs.strip()
        if name not in profiles:
            raise ConfigError(f"line {lineno}: unknown attack profile {name!r}")
        steps = [int(evaluate(x)) for x in window.split()]
        if len(steps) > 2:
            raise ConfigError(f"line {lineno}: attack window takes at most START END")
        start = steps[0] if steps else first_step
        end = steps[1] if len(steps) == 2 else None
        for t in _ids(targets):
            attacks.append(AttackAssignment(t, profiles[name], start, end))
    load = sec.get("load_kw")
    try:
        return ScenarioStage(
            t_start, t_end, plant.ReferenceSignal(need("omega_l"), need("p_l")),
            MisbehaviorTopology(m1, m2, f_bound), tuple(attacks),
            None if load is None else evaluate(load), _ids(sec.get("shed")),
            int(evaluate(sec.get("bad_channels", "0"))))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"line {sec.lineno}: {exc}") from exc


def _param(value: str | None) -> float | str:
    if value is None or value.strip().lower() == "auto":
        return "auto"
    return evaluate(value)


def parse_scenario(text: str, base: Path | None = None) -> ScenarioFile:
    base = base or Path.cwd()
    sections = parse_sections(text)
    heads = [s for s in sections if s.kind == "scenario"]
    if len(heads) != 1:
        raise ConfigError("need exactly one [scenario] section")
    head = heads[0]
    unknown = {s.kind for s in sections} - {"scenario", "profile", "stage"}
    if unknown:
        raise ConfigError(f"unknown section kinds: {sorted(unknown)}")

    def path(key):
        v = head.get(key)
        if v is None:
            raise ConfigError(f"[scenario] is missing {key!r}")
        p = (base / v).resolve()
        if not p.exists():
            raise ConfigError(f"{key} file not found: {p}")
        return p

    g = read_graph(path("graph"))
    specs = plant.read_roster(path("roster"))
    safety = SafetySpec(evaluate(head.get("c_n", "pi")), evaluate(head.get("c_m", "3.1*pi")),
                        evaluate(head.get("epsilon", "0.001")))
    t_s = evaluate(head.get("t_s", "0.01"))
    profiles = {}
    for s in sections:
        if s.kind == "profile":
            if s.name in profiles:
                raise ConfigError(f"line {s.lineno}: profile {s.name!r} defined twice")
            profiles[s.name] = _profile(s)
    stages = [_stage(s, profiles, t_s) for s in sections if s.kind == "stage"]
    scn = Scenario(tuple(stages), specs, t_s, safety,
                   evaluate(head.get("loss_factor", str(plant.DEFAULT_LOSS_FACTOR))))
    summary = None
    keys = ("g", "f", "h", "d_max")
    given = [head.get(k) for k in keys]
    if all(v is not None for v in given):
        summary = GraphSummary(*(int(evaluate(v)) for v in given))
    elif any(v is not None for v in given):
        raise ConfigError("graph summary needs all of g, f, h, d_max")
    sigma, eta = _param(head.get("sigma")), _param(head.get("eta"))
    explicit = [v for v in (head.get("sigma"), head.get("eta")) if v is not None]
    if any(v.strip().lower() == "auto" for v in explicit) and summary is None:
        raise ConfigError("sigma/eta = auto needs g, f, h and d_max in [scenario]")
    protocol = (head.get("protocol", "dacc") or "dacc").lower()
    if protocol not in ("dacc", "tc", "wmsr"):
        raise ConfigError(f"unknown protocol {protocol!r}")
    wf = head.get("wmsr_f")
    out = head.get("out")
    return ScenarioFile(None, g, scn, safety, protocol, sigma, eta,
                        None if wf is None else int(evaluate(wf)), summary,
                        int(evaluate(head.get("seed", "0"))),
                        None if out is None else base / out, profiles)


def read_scenario(path: str | Path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    sf = parse_scenario(text, path.parent)
    sf.path = path
    return sf


def bundled(name: str) -> Path:
    """Path of a scenario/graph/roster file shipped with the package."""
    return Path(__file__).with_name("data") / name
