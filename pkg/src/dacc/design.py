"""One-time parameter design for the confidence-weighted protocol and the
analytic bounds that come with it.

All quantities are plain floats; the safety interval is [-c_n, c_n], the
ultimate-bound interval is [-epsilon, epsilon] and c_m is the floor on the
(filtered) misbehaving error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .protocol import DaccParams

SELECTION_MARGIN = 1e-3
ENDPOINT_TOL = 1e-12
ADVICE = "increase g,c_m or decrease f,h,c_n"


class DomainError(ValueError):
    pass


class InfeasibleDesign(ValueError):
    pass


@dataclass(frozen=True)
class SafetySpec:
    c_n: float
    c_m: float
    epsilon: float

    def __post_init__(self):
        if not 0 < self.epsilon < self.c_n < self.c_m:
            raise ValueError(f"need 0 < epsilon < c_n < c_m, got {self}")


@dataclass(frozen=True)
class GraphSummary:
    g: int
    f: int
    h: int
    d_max: int

    def __post_init__(self):
        if self.g < 1 or self.f < 0 or self.h < 1:
            raise ValueError(f"need g >= 1, f >= 0, h >= 1, got {self}")
        if self.d_max < self.g + self.f:
            raise ValueError(f"d_max must be at least g + f, got {self}")


@dataclass(frozen=True)
class Interval:
    """Closed real interval; ``lower > upper`` encodes the empty set."""
    lower: float
    upper: float = math.inf

    @property
    def empty(self) -> bool:
        return self.lower > self.upper + ENDPOINT_TOL

    def __contains__(self, x: float) -> bool:
        return (not self.empty) and self.lower - ENDPOINT_TOL <= x <= self.upper + ENDPOINT_TOL

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lower, other.lower), min(self.upper, other.upper))

    def __str__(self) -> str:
        if self.empty:
            return "empty"
        return f"[{self.lower:.6g}, {self.upper:.6g}]"


EMPTY = Interval(math.inf, -math.inf)


@dataclass(frozen=True)
class DesignResult:
    params: DaccParams | None
    sigma_interval_p: Interval
    sigma_interval_f: Interval
    eta_interval: Interval
    advice: str | None = None

    @property
    def feasible(self) -> bool:
        return self.params is not None


# -- interval construction -----------------------------------------------------

def sigma_lower_p(spec: SafetySpec) -> float:
    return max(1.0 / (2.0 * (spec.c_m - spec.c_n) ** 2),
               (math.sqrt(6.0) + 3.0) / (2.0 * (spec.c_m - spec.epsilon) ** 2))


def q_sum_upper(gs: GraphSummary, spec: SafetySpec) -> float:
    """Worst-case confidence mass: d_max - f normal neighbors at confidence 1
    plus f misbehaving ones at the largest confidence they can keep."""
    return gs.d_max - gs.f + gs.f * math.exp(-sigma_lower_p(spec) * (spec.c_m - spec.c_n) ** 2)


def f_t(x: float, gs: GraphSummary, spec: SafetySpec) -> float:
    if not 0 < x < spec.c_m:
        raise DomainError(f"f_t is defined on (0, c_m), got x={x}")
    if gs.f == 0:
        return -math.inf
    return (math.log(gs.h * gs.f * (spec.c_m - x) / x)
            + (gs.h - 1) * math.log(q_sum_upper(gs, spec)) - gs.h * math.log(gs.g))


def f_m(x: float, gs: GraphSummary, spec: SafetySpec) -> float:
    return spec.c_m ** 2 - 2.0 * spec.c_m * x - (gs.h - 1) * x ** 2


def _solve_linear(a: float, b: float) -> Interval:
    """{sigma > 0 : a * sigma >= b}."""
    if a > 0:
        return Interval(max(0.0, b / a))
    if a < 0:
        return Interval(0.0, b / a)
    return Interval(0.0) if b <= 0 else EMPTY


def sigma_interval_f(gs: GraphSummary, spec: SafetySpec) -> Interval:
    if gs.f == 0:
        return Interval(0.0)
    out = Interval(0.0)
    for x in (spec.c_n, spec.epsilon):
        out = out.intersect(_solve_linear(f_m(x, gs, spec), f_t(x, gs, spec)))
    return out


def eta_lower_terms(sigma: float, gs: GraphSummary, spec: SafetySpec) -> tuple[float, float, float]:
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    c_n, c_m, eps, h = spec.c_n, spec.c_m, spec.epsilon, gs.h
    t1 = (1.0 + math.sqrt(h)) ** 2 / (2.0 * sigma * h * c_m ** 2)
    t2 = 1.0 / (2.0 * sigma * (c_m - c_n) ** 2)
    t3 = ((f_t(eps, gs, spec) / sigma - f_m(c_n, gs, spec))
          / ((c_n - eps) * (2.0 * c_m + (h - 1) * (c_n + eps))))
    return t1, t2, t3


def eta_interval_f(sigma: float, gs: GraphSummary, spec: SafetySpec) -> Interval:
    lower = max(eta_lower_terms(sigma, gs, spec))
    if lower >= 1.0:
        return EMPTY
    return Interval(max(lower, 0.0), 1.0)


def algorithm1(gs: GraphSummary, spec: SafetySpec, margin: float = SELECTION_MARGIN) -> DesignResult:
    """Pick (sigma, eta) just above the lower endpoints of the admissible intervals."""
    i_p = Interval(sigma_lower_p(spec))
    i_f = sigma_interval_f(gs, spec)
    both = i_p.intersect(i_f)
    if both.empty:
        return DesignResult(None, i_p, i_f, EMPTY, ADVICE)
    sigma = both.lower * (1.0 + margin)
    if sigma > both.upper:
        sigma = both.lower
    i_eta = eta_interval_f(sigma, gs, spec)
    if i_eta.empty:
        return DesignResult(None, i_p, i_f, i_eta, ADVICE)
    eta = i_eta.lower * (1.0 + margin) if i_eta.lower > 0 else margin
    if eta >= 1.0:
        eta = 0.5 * (i_eta.lower + 1.0)
    return DesignResult(DaccParams(sigma, eta), i_p, i_f, i_eta)


# -- influence function and the necessary conditions ----------------------------

def influence(theta: float, sigma: float) -> float:
    return math.exp(-sigma * theta * theta) * theta


def influence_derivative(theta: float, sigma: float, order: int = 1) -> float:
    """Closed-form first three derivatives of exp(-sigma x^2) x."""
    x, s = theta, sigma
    e = math.exp(-s * x * x)
    if order == 1:
        return (1.0 - 2.0 * s * x * x) * e
    if order == 2:
        return 2.0 * s * x * (2.0 * s * x * x - 3.0) * e
    if order == 3:
        return (-8.0 * s ** 3 * x ** 4 + 24.0 * s ** 2 * x ** 2 - 6.0 * s) * e
    raise ValueError("order must be 1, 2 or 3")


@dataclass(frozen=True)
class DecayConditions:
    decays: bool
    decays_rapidly: bool


def check_decay_conditions(sigma: float, spec: SafetySpec) -> DecayConditions:
    return DecayConditions(
        decays=sigma >= 1.0 / (2.0 * (spec.c_m - spec.c_n) ** 2),
        decays_rapidly=sigma >= (math.sqrt(6.0) + 3.0) / (2.0 * (spec.c_m - spec.epsilon) ** 2),
    )


def corollary1_eta_lower(sigma: float, gs: GraphSummary, spec: SafetySpec) -> float:
    """Smallest eta for which a post-convergence attack is absorbed in one step."""
    c_n, c_m, eps = spec.c_n, spec.c_m, spec.epsilon
    if gs.f == 0:
        first = -math.inf
    else:
        first = ((math.log(gs.f * (c_m - eps)) - math.log(q_sum_upper(gs, spec) * c_n))
                 / (sigma * (c_m - eps) ** 2))
    second = ((c_m - c_n) ** 2 - gs.h * (c_n ** 2 - eps ** 2)) / (c_m - eps) ** 2
    return max(first, second)


# -- convergence-rate bounds -----------------------------------------------------

def leader_weight_lower(q_l_lower: float, gs: GraphSummary, spec: SafetySpec) -> float:
    return q_l_lower / q_sum_upper(gs, spec)


def contraction_factor(gs: GraphSummary, spec: SafetySpec, sigma: float, a_l_lower: float) -> float:
    """(g * a_l)^h, the guaranteed shrink of ||e|| over one sweep of the graph depth."""
    xi = (gs.g * a_l_lower) ** gs.h
    if not 0 < xi < 1:
        raise DomainError(f"contraction factor {xi} is outside (0, 1)")
    return xi


def steady_state_contraction_range(gs: GraphSummary) -> tuple[float, float]:
    return (gs.g / (gs.d_max - gs.f)) ** gs.h, 1.0


def f_d(e_norm: float, r_l_upper: float, r_m_lower: float, gs: GraphSummary,
        spec: SafetySpec, params: DaccParams) -> float:
    """Upper bound on ||e(k+1)|| - ||e(k)|| given the evaluation-memory bounds."""
    if not spec.epsilon - ENDPOINT_TOL <= e_norm <= spec.c_n + ENDPOINT_TOL:
        raise DomainError(f"e_norm must lie in [epsilon, c_n], got {e_norm}")
    s, eta, c_m = params.sigma, params.eta, spec.c_m
    q_bar = q_sum_upper(gs, spec)
    pull = (gs.g / q_bar * math.exp(-s * ((1 - eta) * r_l_upper + eta * e_norm ** 2))) ** gs.h
    push = (gs.f / q_bar * math.exp(-s * ((1 - eta) * r_m_lower + eta * (c_m - e_norm) ** 2))
            * (c_m - e_norm))
    return -e_norm * pull / gs.h + push


def f_psi(e_norm: float, gs: GraphSummary, spec: SafetySpec, params: DaccParams) -> float:
    """f_d with the memory bounds that hold inside the safety interval."""
    return f_d(e_norm, spec.c_n ** 2, (spec.c_m - spec.c_n) ** 2, gs, spec, params)


def finite_time_bound(gs: GraphSummary, spec: SafetySpec, params: DaccParams) -> float:
    """Steps needed to enter [-epsilon, epsilon] from anywhere in the safety interval."""
    ends = (f_psi(spec.c_n, gs, spec, params), f_psi(spec.epsilon, gs, spec, params))
    if max(ends) >= 0:
        raise InfeasibleDesign(f"decrease rate is not negative at the interval ends: {ends}")
    return (spec.c_n - spec.epsilon) / min(abs(v) for v in ends)


def ultimate_bound(gs: GraphSummary, spec: SafetySpec, params: DaccParams) -> float:
    return (gs.g ** (-gs.h) * (gs.d_max - gs.f) ** (gs.h - 1) * gs.f * gs.h
            * influence(spec.c_m - spec.epsilon, params.sigma))
