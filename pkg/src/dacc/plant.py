"""Quasi-steady droop abstraction of the islanded microgrid.

Between two secondary-control steps the primary (droop) layer is taken to be
settled at one synchronous frequency, so every active DES satisfies
``omega_sync = theta_i - m_i * P_i`` and the dispatched powers add up to the
demand. Powers are in kW, frequencies in rad/s, droop gains in rad/(s kW).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

DEFAULT_LOSS_FACTOR = 0.06


class EmptyActiveSet(ValueError):
    pass


@dataclass(frozen=True)
class DesSpec:
    id: str
    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"droop coefficient of {self.id} must be positive")


@dataclass
class PlantState:
    theta: dict[str, float]
    active_set: frozenset[str]
    p_load: float
    loss_factor: float = DEFAULT_LOSS_FACTOR

    def __post_init__(self):
        self.active_set = frozenset(self.active_set)
        if not self.active_set:
            raise EmptyActiveSet("no DES is dispatching")
        if self.p_load < 0:
            raise ValueError("load must be nonnegative")

    @property
    def p_total(self) -> float:
        return self.p_load * (1.0 + self.loss_factor)


@dataclass(frozen=True)
class ReferenceSignal:
    omega_l: float
    p_l: float


@dataclass(frozen=True)
class Dispatch:
    omega_sync: float
    p: dict[str, float] = field(default_factory=dict)


def _inv_m_sum(specs: Mapping[str, DesSpec], active: Iterable[str]) -> float:
    active = list(active)
    if not active:
        raise EmptyActiveSet("no DES is dispatching")
    return sum(1.0 / specs[i].m for i in active)


def dispatch(state: PlantState, specs: Mapping[str, DesSpec]) -> Dispatch:
    """Solve the one-unknown power balance for the common frequency."""
    active = [i for i in state.theta if i in state.active_set]
    inv_sum = _inv_m_sum(specs, active)
    # work relative to the mean setpoint so the balance is not lost to the ~300 rad/s offset
    base = math.fsum(state.theta[i] for i in active) / len(active)
    shift = (math.fsum((state.theta[i] - base) / specs[i].m for i in active) - state.p_total) / inv_sum
    p = {i: (((state.theta[i] - base) - shift) / specs[i].m if i in state.active_set else 0.0)
         for i in state.theta}
    return Dispatch(base + shift, p)


def reference_power(p_load: float, specs: Mapping[str, DesSpec], active_set: Iterable[str],
                    loss_factor: float = DEFAULT_LOSS_FACTOR) -> float:
    """Droop-scaled power reference (rad/s) the tertiary layer broadcasts."""
    return (1.0 + loss_factor) * p_load / _inv_m_sum(specs, active_set)


def load_for_reference(p_l: float, specs: Mapping[str, DesSpec], active_set: Iterable[str],
                       loss_factor: float = DEFAULT_LOSS_FACTOR) -> float:
    """Inverse of :func:`reference_power`: the total load that yields ``p_l``."""
    return p_l * _inv_m_sum(specs, active_set) / (1.0 + loss_factor)


def plm(state: PlantState, specs: Mapping[str, DesSpec], d: Dispatch | None = None) -> float:
    """Dispatched power over the active (not cut-off) DESs, scaled by their droop gains."""
    d = d or dispatch(state, specs)
    active = [i for i in state.theta if i in state.active_set]
    return sum(d.p[i] for i in active) / _inv_m_sum(specs, active)


def error_coords(theta: Mapping[str, float], ref: ReferenceSignal, plm_value: float) -> dict[str, float]:
    offset = ref.omega_l + plm_value
    return {i: v - offset for i, v in theta.items()}


def theta_from_errors(errors: Mapping[str, float], ref: ReferenceSignal, plm_value: float) -> dict[str, float]:
    offset = ref.omega_l + plm_value
    return {i: e + offset for i, e in errors.items()}


# -- DES roster file: one "id m" record per line -------------------------------

def parse_roster(text: str) -> dict[str, DesSpec]:
    specs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ValueError(f"roster line {lineno}: expected 'id m', got {raw!r}")
        specs[parts[0]] = DesSpec(parts[0], float(parts[1]))
    return specs


def read_roster(path: str | Path) -> dict[str, DesSpec]:
    return parse_roster(Path(path).read_text())


def format_roster(specs: Mapping[str, DesSpec]) -> str:
    return "".join(f"{s.id} {s.m!r}\n" for s in specs.values())


IEEE33_DROOP = {**{i: 5e-4 for i in ("19", "11", "7", "20", "13", "8", "21", "15", "9", "17", "10")},
                **{i: 1e-3 for i in ("28", "30", "32", "22", "23", "24")}}


def ieee33_roster() -> dict[str, DesSpec]:
    return {i: DesSpec(i, m) for i, m in IEEE33_DROOP.items()}
