import math
from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

from dacc import graph, scenario, sim
from dacc.design import GraphSummary, SafetySpec
from dacc.protocol import DaccParams

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SPEC = SafetySpec(math.pi, 3.1 * math.pi, 1e-3)
SUMMARY = GraphSummary(g=2, f=3, h=4, d_max=5)
DESIGNED = DaccParams(0.9, 0.4)

ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def load(name: str) -> scenario.ScenarioFile:
    return scenario.read_scenario(scenario.bundled(name))


@lru_cache(maxsize=None)
def cached_run(name: str, protocol: sim.ProtocolChoice, seed: int = 0) -> sim.SimTrace:
    sf = load(name)
    return sim.run(sf.scenario, sf.graph, protocol, seed)


@pytest.fixture(scope="session")
def ieee33():
    return graph.ieee33_graph()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
