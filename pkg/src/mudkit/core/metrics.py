"""
Analytic performance metrics of the selected secondary link.

Outage probability, ergodic capacity and average bit error rate (BER) for a
random number of active users N, in closed form where one exists and by
adaptive quadrature otherwise. Every semi-infinite integral over the gain x
is taken in the variable y = e^(-x) on (0, 1].

Units: the rate R is interpreted in ``Scenario.rate_units`` (bits by
default, so the outage threshold is (2^R - 1)/rho); capacities are returned
in nats.
"""
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..distributions import (Binomial, Deterministic, NegBinomial, PoissonBinomial,
                             UserCountDistribution)
from ..utils.config import default_tol
from ..utils.errors import DomainError, ScenarioError
from ..utils.quadrature import breakpoints_for_scale, integrate_unit_interval
from ..utils.specfun import beta, gauss_2f1, log_incomplete_beta, q_function
from .channel import rayleigh_gain_cdf

CLOSED_FORM = "closed_form"
QUADRATURE = "quadrature"
MONTE_CARLO = "monte_carlo"
METHODS = (CLOSED_FORM, QUADRATURE, MONTE_CARLO)

EXPONENTIAL = "exponential"
Q_FORM = "q"
BER_MODELS = (EXPONENTIAL, Q_FORM)
RATE_UNITS = ("bits", "nats")


@dataclass(frozen=True)
class MetricEstimate:
    """A metric value tagged with how it was obtained."""

    value: float
    method: str
    std_err: Optional[float] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if (self.std_err is not None) != (self.method == MONTE_CARLO):
            raise DomainError("std_err is reported for Monte-Carlo estimates only")
        if self.std_err is not None and self.std_err < 0:
            raise DomainError(f"std_err must be non-negative, got {self.std_err}")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to evaluate the link metrics.

    ``ber_model`` selects P_e(rho x) = alpha e^(-eta rho x) (``exponential``)
    or alpha Q(sqrt(eta rho x)) (``q``).
    """

    count: UserCountDistribution
    snr: float = 10.0
    rate: float = 1.0
    ber_alpha: float = 0.5
    ber_eta: float = 1.0
    ber_model: str = EXPONENTIAL
    rate_units: str = "bits"

    def __post_init__(self):
        if not isinstance(self.count, UserCountDistribution):
            raise ScenarioError("count", "must be a user-count distribution")
        if not self.snr > 0:
            raise ScenarioError("snr", f"must be positive, got {self.snr!r}")
        if not self.rate > 0:
            raise ScenarioError("rate", f"must be positive, got {self.rate!r}")
        if not 0.0 < self.ber_alpha <= 1.0:
            raise ScenarioError("ber_alpha", f"must lie in (0, 1], got {self.ber_alpha!r}")
        if not self.ber_eta > 0:
            raise ScenarioError("ber_eta", f"must be positive, got {self.ber_eta!r}")
        if self.ber_model not in BER_MODELS:
            raise ScenarioError("ber_model", f"must be one of {BER_MODELS}, got {self.ber_model!r}")
        if self.rate_units not in RATE_UNITS:
            raise ScenarioError("rate_units", f"must be one of {RATE_UNITS}, got {self.rate_units!r}")

    def with_count(self, count: UserCountDistribution) -> "Scenario":
        return replace(self, count=count)

    @property
    def eta_rho(self) -> float:
        return self.ber_eta * self.snr

    def outage_threshold(self) -> float:
        """Gain below which the rate R is not supported: (2^R - 1)/rho, or (e^R - 1)/rho in nats."""
        if self.rate_units == "bits":
            return math.expm1(self.rate * math.log(2.0)) / self.snr
        return math.expm1(self.rate) / self.snr

    def error_rate(self, gain):
        """Instantaneous P_e(rho * gain)."""
        gain = np.asarray(gain, dtype=float)
        if self.ber_model == EXPONENTIAL:
            value = self.ber_alpha * np.exp(-self.eta_rho * gain)
        else:
            value = self.ber_alpha * q_function(np.sqrt(self.eta_rho * gain))
        return float(value) if np.ndim(value) == 0 else value

    def error_rate_at_zero(self) -> float:
        """P_e(0): alpha for the exponential model, alpha/2 for the Q-form."""
        return self.ber_alpha if self.ber_model == EXPONENTIAL else 0.5 * self.ber_alpha


class _PowerCount:
    """Deterministic-like law with U(z) = z^n for real n >= 0 (continuous extension in N)."""

    def __init__(self, n: float):
        if not n >= 0:
            raise DomainError(f"user count must be non-negative, got {n}")
        self.n = float(n)
        self.mean = self.n

    def pgf(self, z):
        return np.power(z, self.n)

    def pgf_derivative(self, z):
        if self.n == 0.0:
            return np.zeros_like(np.asarray(z, dtype=float))
        return self.n * np.power(z, self.n - 1.0)

    def pgf_tail(self, y):
        if self.n == 0.0:
            return np.zeros_like(np.asarray(y, dtype=float))
        with np.errstate(divide="ignore"):
            return -np.expm1(self.n * np.log1p(-np.asarray(y, dtype=float)))

    def prob_empty(self) -> float:
        return 1.0 if self.n == 0.0 else 0.0


def _mean_of(count) -> float:
    return count.mean if isinstance(count, _PowerCount) else count.moments()[0]


def _capacity_integral(count, snr: float, tol: float) -> float:
    # rho * integral_0^1 (1 - U(1-y)) / ((1 - rho ln y) y) dy
    def integrand(y: float) -> float:
        return float(count.pgf_tail(y)) / ((1.0 - snr * math.log(y)) * y)

    points = breakpoints_for_scale(_mean_of(count))
    return snr * integrate_unit_interval(integrand, tol, points, what="ergodic capacity")


def _ber_continuous_integral(count, s: Scenario, tol: float) -> float:
    # integral_0^1 P_e(-rho ln y) U'(1-y) dy, the part of E[P_e] with N >= 1
    def integrand(y: float) -> float:
        return s.error_rate(-math.log(y)) * float(count.pgf_derivative(1.0 - y))

    points = breakpoints_for_scale(_mean_of(count))
    if s.eta_rho > 1.0:
        points += [1.0 - 1.0 / s.eta_rho, 1.0 - 10.0 / s.eta_rho]
    return integrate_unit_interval(integrand, tol, points, what="average BER")


def outage_probability(s: Scenario) -> float:
    """P_out = U_N(F((2^R - 1)/rho)), exact."""
    return float(s.count.pgf(rayleigh_gain_cdf(s.outage_threshold())))


def ergodic_capacity(s: Scenario, tol: Optional[float] = None) -> MetricEstimate:
    """E_N[C(rho, N)] = rho * integral_0^inf (1 - U_N(F(x))) / (1 + rho x) dx, in nats."""
    tol = default_tol() if tol is None else tol
    return MetricEstimate(_capacity_integral(s.count, s.snr, tol), QUADRATURE)


def ber_numeric(s: Scenario, tol: Optional[float] = None,
                include_empty_atom: bool = False) -> MetricEstimate:
    """Average BER by quadrature against the selected-gain density.

    With ``include_empty_atom`` the slots where no user is active contribute
    P_e(0) * Pr[N=0]; without it only the continuous part is integrated,
    matching the closed forms.
    """
    tol = default_tol() if tol is None else tol
    value = _ber_continuous_integral(s.count, s, tol)
    if include_empty_atom:
        value += s.error_rate_at_zero() * s.count.prob_empty()
    return MetricEstimate(value, QUADRATURE)


def ber_closed_binomial(mean: float, p: float, alpha: float, eta: float, snr: float) -> float:
    """alpha p^(-1-eta rho) lambda beta(p, 1+eta rho, lambda/p), exponential error model.

    Continuous part only (the Pr[N=0] atom is excluded).
    """
    if not 0.0 < p <= 1.0:
        raise DomainError(f"p must lie in (0, 1], got {p}")
    trials = mean / p
    if not trials >= 1.0 - 1e-12:
        raise DomainError(f"lambda/p must be at least 1, got {trials}")
    trials = max(trials, 1.0)
    a = 1.0 + eta * snr
    if p == 1.0:
        return alpha * mean * beta(a, trials)
    # p^(-a) and B_p(a, L) leave the float range separately once a is in the hundreds
    return math.exp(math.log(alpha * mean) - a * math.log(p) + log_incomplete_beta(p, a, trials))


def ber_closed_negbinomial(failures: float, p: float, alpha: float, eta: float, snr: float) -> float:
    """(r u alpha / (1+eta rho)) 2F1(1+r, 1+eta rho; 2+eta rho; -u), u = p/(1-p).

    Continuous part only (the Pr[N=0] atom is excluded).
    """
    if not failures > 0:
        raise DomainError(f"r must be positive, got {failures}")
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    u = p / (1.0 - p)
    er = eta * snr
    return failures * u * alpha / (1.0 + er) * gauss_2f1(1.0 + failures, 1.0 + er, 2.0 + er, -u)


def ber_closed_form(s: Scenario) -> Optional[MetricEstimate]:
    """Closed-form continuous-part BER where one exists, else None.

    Available for the exponential error model with binomial, negative
    binomial or deterministic counts.
    """
    if s.ber_model != EXPONENTIAL:
        return None
    count = s.count
    args = (s.ber_alpha, s.ber_eta, s.snr)
    if isinstance(count, Binomial):
        value = ber_closed_binomial(count.mean, count.success, *args)
    elif isinstance(count, NegBinomial):
        value = ber_closed_negbinomial(count.failures, count.success, *args)
    elif isinstance(count, Deterministic):
        value = 0.0 if count.n == 0 else ber_closed_binomial(float(count.n), 1.0, *args)
    else:
        return None
    return MetricEstimate(value, CLOSED_FORM)


def fixed_count_capacity(snr: float, n: float, tol: Optional[float] = None) -> float:
    """C(rho, n) for a fixed (possibly non-integer) number of users n, in nats."""
    tol = default_tol() if tol is None else tol
    return _capacity_integral(_PowerCount(n), snr, tol)


def fixed_count_ber(s: Scenario, n: float, tol: Optional[float] = None) -> float:
    """P_e(rho, n) for a fixed number of users; n = 0 gives P_e(0)."""
    tol = default_tol() if tol is None else tol
    count = _PowerCount(n)
    if count.n == 0.0:
        return s.error_rate_at_zero()
    return _ber_continuous_integral(count, s, tol)


def fixed_count_outage(s: Scenario, n: float) -> float:
    """P_out(rho, n, R) = F(tau)^n for a fixed number of users."""
    if not n >= 0:
        raise DomainError(f"user count must be non-negative, got {n}")
    return float(rayleigh_gain_cdf(s.outage_threshold()) ** n)


def selection_delay(count: UserCountDistribution) -> float:
    """Mean number of interference tests needed to form the active set.

    Exhaustive search (binomial, Poisson-binomial) tests all L users; the
    negative-binomial procedure stops at the r-th failure, i.e. after
    r + E[N] = r / (1 - p) tests on average.
    """
    if isinstance(count, Binomial):
        return float(count.trials)
    if isinstance(count, PoissonBinomial):
        return float(count.size)
    if isinstance(count, NegBinomial):
        return count.failures / (1.0 - count.success)
    raise DomainError(f"no selection procedure is defined for {count.kind} counts")
