"""Confidence-weighted consensus: discounted evaluation filter, softmax
weights, the secondary control input, and the TC / W-MSR baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


class EmptyNeighborhood(ValueError):
    pass


class KeyMismatch(KeyError):
    pass


@dataclass(frozen=True)
class DaccParams:
    sigma: float
    eta: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")


def update_evaluation(r_prev: float, theta_diff: float, eta: float, is_initial: bool = False) -> float:
    """One step of the discounted squared-disagreement accumulator r_ij."""
    if is_initial:
        return theta_diff * theta_diff
    return r_prev + eta * (theta_diff * theta_diff - r_prev)


def confidence(r: float, sigma: float) -> float:
    return math.exp(-sigma * r)


def dacc_weights(r_row: Sequence[float], sigma: float) -> np.ndarray:
    """softmax(-sigma * r) with the usual max-shift, so large sigma*r never underflows to 0/0."""
    z = -sigma * np.asarray(r_row, dtype=float)
    if z.size == 0:
        raise EmptyNeighborhood("weights need at least one in-neighbor")
    z = z - z.max()
    w = np.exp(z)
    return w / w.sum()


def tc_weights(neighbor_count: int) -> np.ndarray:
    if neighbor_count < 1:
        raise EmptyNeighborhood("weights need at least one in-neighbor")
    return np.full(neighbor_count, 1.0 / neighbor_count)


def control_input(own_composite: float, neighbor_composites: Mapping[str, float],
                  weights: Mapping[str, float]) -> float:
    """u_i = -sum_j a_ij (own - composite_j)."""
    if set(neighbor_composites) != set(weights):
        raise KeyMismatch("weight and neighbor sets differ")
    return -sum(weights[j] * (own_composite - c) for j, c in neighbor_composites.items())


def wmsr_filter(own: float, neighbor_values: Mapping[str, float], f: int) -> list[str]:
    """Neighbors kept by W-MSR: drop up to ``f`` of the largest values strictly
    above ``own`` and up to ``f`` of the smallest strictly below.

    Ties at the trim boundary drop the neighbor that comes first in
    ``neighbor_values`` order.
    """
    if f < 0:
        raise ValueError("f must be nonnegative")
    order = {j: k for k, j in enumerate(neighbor_values)}
    above = sorted((j for j, v in neighbor_values.items() if v > own),
                   key=lambda j: (-neighbor_values[j], order[j]))
    below = sorted((j for j, v in neighbor_values.items() if v < own),
                   key=lambda j: (neighbor_values[j], order[j]))
    dropped = set(above[:f]) | set(below[:f])
    return [j for j in neighbor_values if j not in dropped]
