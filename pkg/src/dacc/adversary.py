"""Misbehaving-state generation and the filter/DFT machinery used to reason
about it.

An attack is described by the spectrum of the *squared* error it injects:
``e_m(k)^2 = |chi0 + sum chi_w exp(j w t_s k)|``. The sign of ``e_m`` is not
determined by that description and is chosen by a sign pattern.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class EmptyWindow(ValueError):
    pass


class SignPattern(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ALTERNATING = "alternating"
    SEEDED_RANDOM = "seeded-random"


@dataclass(frozen=True)
class FourierAttack:
    chi0: float
    components: tuple[tuple[float, float], ...] = ()
    sign_pattern: SignPattern = SignPattern.SEEDED_RANDOM
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "components", tuple((float(w), float(c)) for w, c in self.components))
        object.__setattr__(self, "sign_pattern", SignPattern(self.sign_pattern))
        omegas = [w for w, _ in self.components]
        if any(w <= 0 for w in omegas) or len(set(omegas)) != len(omegas):
            raise ValueError("component frequencies must be positive and distinct")
        if any(c < 0 for _, c in self.components):
            raise ValueError("component amplitudes must be nonnegative")
        if self.chi0 < sum(c for _, c in self.components):
            raise ValueError("chi0 must dominate the summed component amplitudes")

    def with_seed(self, seed: int) -> "FourierAttack":
        return FourierAttack(self.chi0, self.components, self.sign_pattern, seed)


@dataclass(frozen=True)
class AttackAssignment:
    """``attack`` applied to ``target`` on steps [start_step, end_step).

    The attack's own clock starts at ``start_step``: step k of the run
    emits ``attack_error(attack, k - start_step, t_s)``.
    """
    target: str
    attack: FourierAttack
    start_step: int = 0
    end_step: int | None = None

    def __post_init__(self):
        if self.end_step is not None and self.end_step < self.start_step:
            raise ValueError("attack window ends before it starts")

    def active(self, k: int) -> bool:
        return self.start_step <= k and (self.end_step is None or k < self.end_step)


def attack_sign(a: FourierAttack, k: int) -> float:
    pattern = a.sign_pattern
    if pattern is SignPattern.POSITIVE:
        return 1.0
    if pattern is SignPattern.NEGATIVE:
        return -1.0
    if pattern is SignPattern.ALTERNATING:
        return 1.0 if k % 2 == 0 else -1.0
    # stateless in k so any step can be evaluated on its own
    return 1.0 if random.Random(a.seed * 1_000_003 + k).random() < 0.5 else -1.0


def attack_squared(a: FourierAttack, k: int, t_s: float) -> float:
    z = complex(a.chi0)
    for w, c in a.components:
        z += c * complex(math.cos(w * t_s * k), math.sin(w * t_s * k))
    return abs(z)


def attack_error(a: FourierAttack, k: int, t_s: float) -> float:
    return attack_sign(a, k) * math.sqrt(attack_squared(a, k, t_s))


def filter_gain(omega: float, eta: float, t_s: float) -> float:
    """Amplitude gain of the first-order filter with time constant (1/eta - 1) t_s."""
    return (1.0 + ((1.0 / eta - 1.0) * t_s * omega) ** 2) ** -0.5


def filter_margin(a: FourierAttack, eta: float, t_s: float) -> float:
    """Lower bound on the filtered squared attack error; compare against c_m^2."""
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    return a.chi0 - sum(c * filter_gain(w, eta, t_s) for w, c in a.components)


def lowpass(y_prev: float, x: float, eta: float) -> float:
    return y_prev + eta * (x - y_prev)


def lowpass_series(x: Sequence[float], eta: float, y0: float | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.empty_like(x)
    prev = x[0] if y0 is None else y0
    for k, v in enumerate(x):
        prev = lowpass(prev, v, eta)
        y[k] = prev
    return y


@dataclass(frozen=True)
class Spectrum:
    """Complex amplitudes at 0, w0, ..., (K-1) w0 of a K-sample window."""
    omegas: np.ndarray
    chi: np.ndarray
    t_s: float

    @property
    def chi0(self) -> complex:
        return complex(self.chi[0])

    def synthesize(self, n: int | None = None) -> np.ndarray:
        k = np.arange(len(self.chi) if n is None else n)
        basis = np.exp(1j * np.outer(k, self.omegas) * self.t_s)
        return basis @ self.chi


def dft_decompose(window: Sequence[float], t_s: float) -> Spectrum:
    x = np.asarray(window, dtype=float)
    if x.size == 0:
        raise EmptyWindow("window must hold at least one sample")
    k_n = x.size
    w0 = 2.0 * math.pi / (k_n * t_s)
    return Spectrum(w0 * np.arange(k_n), np.fft.fft(x) / k_n, t_s)


def default_window_length(a: FourierAttack, t_s: float) -> int:
    """One period of the slowest component, rounded to whole samples."""
    if not a.components:
        return 1
    w_min = min(w for w, _ in a.components)
    return max(1, round(2.0 * math.pi / (w_min * t_s)))


# -- attack profiles used by the IEEE33 scenario ----------------------------------

def sec5_attack(sign_pattern: SignPattern | str = SignPattern.SEEDED_RANDOM, seed: int = 0) -> FourierAttack:
    """DC 120 with 20.5 Hz and 75.5 Hz ripple on the squared error."""
    return FourierAttack(120.0, ((41 * math.pi, 20.0), (151 * math.pi, 11.0)), sign_pattern, seed)
