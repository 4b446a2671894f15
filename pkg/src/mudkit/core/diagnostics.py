"""
Asymptotic and approximation diagnostics.

These report the quantities behind the scaling law of the ergodic capacity,
the direction and tightness of Jensen's inequality for random user counts,
the capacity gap of the Poisson approximation to a Poisson-binomial count,
and the regular-variation exponent that makes Jensen's inequality tight.
Results are pandas DataFrames (one row per grid point) or small dataclasses.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import gammaln
from scipy.stats import poisson

from ..distributions import CountFamily, Poisson, PoissonBinomial
from ..utils.config import default_tol
from ..utils.errors import DomainError, ScenarioError
from ..utils.log import get_logger
from .metrics import (EXPONENTIAL, Q_FORM, Scenario, ber_numeric, ergodic_capacity,
                      fixed_count_ber, fixed_count_capacity, fixed_count_outage,
                      outage_probability)

logger = get_logger(__name__)


@dataclass(frozen=True)
class JensenGaps:
    """Loss from randomizing the number of users, at equal mean.

    cap_gap = C(rho, lambda) - E_N[C(rho, N)], ber_gap = E_N[P_e] - P_e(rho, lambda),
    outage_gap = E_N[P_out] - P_out(rho, lambda, R). All are >= 0.
    """

    cap_gap: float
    ber_gap: float
    outage_gap: float


def _check_grid(grid: Sequence[float], name: str = "grid", minimum: float = 0.0) -> np.ndarray:
    arr = np.asarray(grid, dtype=float)
    if arr.ndim != 1 or arr.size == 0 or np.any(np.diff(arr) <= 0):
        raise ScenarioError(name, "must be non-empty and strictly increasing")
    if arr[0] < minimum:
        raise ScenarioError(name, f"entries must be >= {minimum:g}")
    return arr


def jensen_gaps(s: Scenario, tol: Optional[float] = None) -> JensenGaps:
    """Jensen gaps of capacity, BER (empty-set atom included) and outage.

    A count with zero variance is evaluated through the same fixed-count
    routines on both sides, so its gaps are exactly zero.
    """
    tol = default_tol() if tol is None else tol
    mean, variance = s.count.moments()
    if not mean > 0:
        raise DomainError("Jensen gaps need a positive mean number of users")
    cap_at_mean = fixed_count_capacity(s.snr, mean, tol)
    ber_at_mean = fixed_count_ber(s, mean, tol)
    outage_at_mean = fixed_count_outage(s, mean)
    if variance == 0.0:
        return JensenGaps(0.0, 0.0, 0.0)
    expected_cap = ergodic_capacity(s, tol).value
    expected_ber = ber_numeric(s, tol, include_empty_atom=True).value
    expected_outage = outage_probability(s)
    return JensenGaps(cap_at_mean - expected_cap, expected_ber - ber_at_mean,
                      expected_outage - outage_at_mean)


def jensen_tightness_diagnostic(snr: float, alpha: float, eta: float, lambda_grid: Sequence[float],
                                ber_model: str = EXPONENTIAL, family: Optional[CountFamily] = None,
                                tol: Optional[float] = None) -> pd.DataFrame:
    """Normalized Jensen residual (E_N[P_e] - P_e(rho, lambda)) * lambda / P_e(rho, lambda).

    Poisson counts by default; the residual stays bounded as lambda grows
    when P_e(rho, N) is regularly varying in N.
    """
    tol = default_tol() if tol is None else tol
    grid = _check_grid(lambda_grid, "lambda_grid", minimum=1.0)
    family = CountFamily("poisson") if family is None else family
    rows = []
    for target in grid:
        count = family.at_mean(float(target))
        s = Scenario(count, snr=snr, ber_alpha=alpha, ber_eta=eta, ber_model=ber_model)
        mean, variance = count.moments()
        at_mean = fixed_count_ber(s, mean, tol)
        expected = at_mean if variance == 0.0 else ber_numeric(s, tol, include_empty_atom=True).value
        rows.append({
            "distribution": family.label(),
            "lambda": mean,
            "expected_ber": expected,
            "ber_at_mean": at_mean,
            "normalized_residual": (expected - at_mean) * mean / at_mean,
        })
        logger.info("jensen tightness: lambda=%g residual=%.6g", mean, rows[-1]["normalized_residual"])
    return pd.DataFrame(rows)


def jensen_poisson_exponential_closed_form(mean: float, eta_rho: int, alpha: float = 1.0) -> float:
    """Exact E_N[P_e(rho, N)] for Poisson N and P_e = alpha e^(-eta rho x), integer eta*rho.

    P_e(rho, N) = alpha k! N! / (N+k)! with k = eta*rho (N = 0 gives alpha), so
    the Poisson average is alpha k! lambda^(-k) Pr[Poisson(lambda) >= k].
    """
    k = int(round(eta_rho))
    if k != eta_rho or k < 1:
        raise DomainError(f"eta*rho must be a positive integer, got {eta_rho}")
    if not mean > 0:
        raise DomainError(f"mean must be positive, got {mean}")
    return alpha * math.exp(gammaln(k + 1) - k * math.log(mean)) * float(poisson.sf(k - 1, mean))


def capacity_scaling_gap(family: CountFamily, snr: float, lambda_grid: Sequence[float],
                         tol: Optional[float] = None) -> pd.DataFrame:
    """Residual of the scaling law E[C] = log(1 + rho log lambda) + O(1/sqrt(log lambda)).

    Columns: ``lambda``, ``capacity``, ``gap`` = capacity - log(1 + rho log lambda)
    and ``normalized_gap`` = |gap| sqrt(log lambda), which must stay bounded.
    """
    tol = default_tol() if tol is None else tol
    grid = _check_grid(lambda_grid, "lambda_grid", minimum=3.0)
    rows = []
    for target in grid:
        count = family.at_mean(float(target))
        mean = count.moments()[0]
        capacity = ergodic_capacity(Scenario(count, snr=snr), tol).value
        gap = capacity - math.log1p(snr * math.log(mean))
        rows.append({
            "distribution": family.label(),
            "lambda": mean,
            "capacity": capacity,
            "gap": gap,
            "normalized_gap": abs(gap) * math.sqrt(math.log(mean)),
        })
        logger.info("scaling gap: %s lambda=%g gap=%.6g", family.label(), mean, gap)
    return pd.DataFrame(rows)


def capacity_gap_pb_poisson(probs: Sequence[float], snr: float,
                            tol: Optional[float] = None) -> Tuple[float, float]:
    """Capacity gap between a Poisson-binomial count and its equal-mean Poisson approximation.

    Returns (gap, bound_witness) with gap = |E_W[C] - E_N[C]| and
    bound_witness = log log L * sum p_i^2, the trend the gap must follow
    (NaN for L < 3 where log log L is not positive).
    """
    tol = default_tol() if tol is None else tol
    pb = PoissonBinomial(tuple(probs))
    arr = np.asarray(pb.probs)
    if np.any(arr <= 0.0):
        raise ScenarioError("probs", "entries must lie in (0, 1]")
    mean = float(arr.sum())
    c_pb = ergodic_capacity(Scenario(pb, snr=snr), tol).value
    c_poisson = ergodic_capacity(Scenario(Poisson(mean), snr=snr), tol).value
    size = arr.size
    witness = math.log(math.log(size)) * float(np.sum(arr * arr)) if size >= 3 else float("nan")
    return abs(c_pb - c_poisson), witness


def regvar_target(ber_model: str, eta_rho: float) -> float:
    """Limit exponent of t(u) at u = 0: eta*rho - 1 (exponential) or eta*rho/2 - 1 (Q-form)."""
    if ber_model == EXPONENTIAL:
        return eta_rho - 1.0
    if ber_model == Q_FORM:
        return 0.5 * eta_rho - 1.0
    raise ScenarioError("ber_model", f"unknown error model {ber_model!r}")


def _log_t(ber_model: str, snr: float, eta: float, u: np.ndarray, alpha: float) -> np.ndarray:
    """log t(u), t(u) = rho B(rho F^-1(e^-u)) e^-u / f(F^-1(e^-u)) for unit-exponential F."""
    er = eta * snr
    log_one_minus = np.log(-np.expm1(-u))  # log(1 - e^-u) = log f(F^-1(e^-u))
    if ber_model == EXPONENTIAL:
        return math.log(alpha * er) + (er - 1.0) * log_one_minus - u
    if ber_model == Q_FORM:
        gain = -log_one_minus  # F^-1(e^-u)
        return (math.log(alpha * math.sqrt(er) / (2.0 * math.sqrt(2.0 * math.pi)))
                + (0.5 * er - 1.0) * log_one_minus - u - 0.5 * np.log(gain))
    raise ScenarioError("ber_model", f"unknown error model {ber_model!r}")


def regvar_profile(ber_model: str, snr: float, eta: float, u_grid: Sequence[float],
                   kappa: float = 2.0, alpha: float = 1.0) -> pd.DataFrame:
    """log_kappa(t(kappa u) / t(u)) at each u of the grid."""
    u = np.sort(np.asarray(u_grid, dtype=float))[::-1]
    if u.size == 0 or np.any(u <= 0.0) or np.any(u > 0.1):
        raise ScenarioError("u_grid", "entries must lie in (0, 0.1]")
    if not kappa > 0 or kappa == 1.0:
        raise ScenarioError("kappa", f"must be positive and different from 1, got {kappa}")
    if np.min(u) * min(kappa, 1.0) < 1e-290:
        raise DomainError("u too small: t(u) underflows")
    if np.max(u) * kappa > 30.0:
        raise DomainError("kappa * u too large: 1 - e^(-kappa u) rounds to 1")
    ratio = (_log_t(ber_model, snr, eta, kappa * u, alpha) - _log_t(ber_model, snr, eta, u, alpha))
    return pd.DataFrame({"u": u, "exponent": ratio / math.log(kappa)})


def regvar_exponent(ber_model: str, snr: float, eta: float, u_grid: Sequence[float],
                    kappa: float = 2.0) -> float:
    """Regular-variation exponent of t(u) at u = 0, extrapolated from the grid.

    The two smallest u values are extrapolated linearly in 1/log(1/u), the
    rate at which the slowly varying factor of the Q-form dies out.
    """
    profile = regvar_profile(ber_model, snr, eta, u_grid, kappa)
    if len(profile) == 1:
        return float(profile["exponent"].iloc[0])
    tail = profile.nsmallest(2, "u")
    s = 1.0 / np.log(1.0 / tail["u"].to_numpy())
    e = tail["exponent"].to_numpy()
    return float(e[0] - s[0] * (e[1] - e[0]) / (s[1] - s[0]))
