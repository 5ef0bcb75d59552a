"""Confidence-weighted resilient secondary control for leader-follower microgrids."""

from .design import DesignResult, GraphSummary, SafetySpec, algorithm1
from .graph import LeaderFollowerGraph, MisbehaviorTopology, ieee33_graph
from .protocol import DaccParams
from .sim import Dacc, LruubVerdict, Scenario, ScenarioStage, SimTrace, Tc, Wmsr, check_lruub, run

__all__ = [
    "Dacc", "DaccParams", "DesignResult", "GraphSummary", "LeaderFollowerGraph", "LruubVerdict",
    "MisbehaviorTopology", "SafetySpec", "Scenario", "ScenarioStage", "SimTrace", "Tc", "Wmsr",
    "algorithm1", "check_lruub", "ieee33_graph", "run",
]
