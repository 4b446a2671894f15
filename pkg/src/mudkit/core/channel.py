"""Fading-channel laws and the gain of the selected (best active) user.

Only unit-mean Rayleigh fading is supported: every channel gain, to the base
station or to the primary receiver, is exponential with mean 1. The selected
gain is gamma* = max over the active set S, and gamma* = 0 when S is empty,
so its CDF U_N(F(x)) carries an atom of mass Pr[N=0] at zero.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..distributions import UserCountDistribution
from ..utils.errors import DomainError, ScenarioError


def _check_non_negative(x, name: str):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        raise DomainError(f"{name} must be non-negative, got {x}")
    return arr


def _out(value):
    return float(value) if np.ndim(value) == 0 else value


def rayleigh_gain_cdf(x):
    """F(x) = 1 - e^(-x), the CDF of a unit-mean Rayleigh power gain."""
    return _out(-np.expm1(-_check_non_negative(x, "x")))


def success_prob(threshold: float) -> float:
    """Pr[gamma_p < Q]: probability that a user passes the interference test."""
    if not threshold >= 0:
        raise DomainError(f"interference threshold Q must be non-negative, got {threshold}")
    return float(-math.expm1(-threshold))


@dataclass(frozen=True)
class FadingLaw:
    """Single-user gain law; only ``rayleigh`` (unit-mean exponential gain) exists."""

    kind: str = "rayleigh"

    def __post_init__(self):
        if self.kind != "rayleigh":
            raise ScenarioError("fading", f"only unit-mean Rayleigh fading is supported, got {self.kind!r}")

    def cdf(self, x):
        return rayleigh_gain_cdf(x)

    def pdf(self, x):
        return _out(np.exp(-_check_non_negative(x, "x")))


RAYLEIGH = FadingLaw()


@dataclass(frozen=True)
class SelectedGainLaw:
    """Law of gamma*, the gain of the best active user."""

    count: UserCountDistribution
    fading: FadingLaw = RAYLEIGH

    def cdf(self, x):
        """F_gamma*(x) = U_N(F(x)); equals Pr[N=0] at x = 0."""
        return self.count.pgf(self.fading.cdf(x))

    def pdf(self, x):
        """Density of the continuous part: U_N'(F(x)) f(x) for x > 0."""
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0):
            raise DomainError(f"selected_gain_pdf requires x > 0, got {x}")
        return _out(np.asarray(self.count.pgf_derivative(self.fading.cdf(x))) * np.exp(-x))

    def atom_at_zero(self) -> float:
        """Pr[gamma* = 0] = Pr[N = 0]."""
        return self.count.prob_empty()

    def quantile(self, q: float) -> float:
        """Smallest x with F_gamma*(x) >= q (0 when q is inside the atom)."""
        if not 0.0 <= q < 1.0:
            raise DomainError(f"quantile must lie in [0, 1), got {q}")
        if q <= self.atom_at_zero():
            return 0.0
        hi = 1.0
        while self.cdf(hi) < q:
            hi *= 2.0
        return float(brentq(lambda x: self.cdf(x) - q, 0.0, hi, xtol=1e-14, rtol=1e-13))


def selected_gain_cdf(law: SelectedGainLaw, x):
    return law.cdf(x)


def selected_gain_pdf(law: SelectedGainLaw, x):
    return law.pdf(x)


def atom_at_zero(law: SelectedGainLaw) -> float:
    return law.atom_at_zero()
