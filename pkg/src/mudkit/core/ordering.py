"""Comparisons between user-count distributions.

Laplace-transform order via PGFs, majorization and the Schur-concavity of the
Poisson-binomial PGF, Le Cam's Poisson approximation bound, complete
monotonicity on integer grids, and the scaling-law conditions on Pr[N=0] and
the variance.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import poisson

from ..distributions import CountFamily, PoissonBinomial, UserCountDistribution
from ..distributions.poisson_binomial import poisson_binomial_pmf
from ..utils.config import get_settings
from ..utils.errors import DomainError, ScenarioError
from ..utils.log import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class OrderingVerdict:
    """Outcome of a pointwise comparison on a grid.

    ``max_violation`` is the largest amount by which the claimed inequality
    fails (0 when it holds everywhere); ``witness_z`` is where that happens.
    """

    holds: bool
    max_violation: float
    witness_z: Optional[float] = None


def _verdict(difference: np.ndarray, grid: np.ndarray, tol: float) -> OrderingVerdict:
    """Judge ``difference >= 0`` on ``grid`` with additive tolerance ``tol``."""
    worst = int(np.argmin(difference))
    violation = max(0.0, -float(difference[worst]))
    holds = violation <= tol
    return OrderingVerdict(holds, violation, None if holds else float(grid[worst]))


def _check_probs(probs: Sequence[float]) -> np.ndarray:
    arr = np.asarray(probs, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ScenarioError("probs", "must be a non-empty list of probabilities")
    if np.any((arr <= 0.0) | (arr > 1.0)) or np.any(np.isnan(arr)):
        raise ScenarioError("probs", "entries must lie in (0, 1]")
    return arr


def lecam_bound(probs: Sequence[float]) -> float:
    """Le Cam's bound 2 * sum p_i^2 on the L1 distance to the equal-mean Poisson law."""
    arr = _check_probs(probs)
    return float(2.0 * np.sum(arr * arr))


def pb_poisson_l1_distance(probs: Sequence[float]) -> float:
    """Exact sum over k of |Pr[W=k] - Poisson(sum p_i)(k)|.

    W is Poisson-binomial, supported on 0..L; the Poisson terms are summed
    until their cumulative mass exceeds 1 - 1e-12 and the rest of the tail is
    added in one piece.
    """
    arr = _check_probs(probs)
    limit = get_settings().pb_max_len
    if arr.size > limit:
        raise ScenarioError("probs", f"L={arr.size} exceeds the L <= {limit} limit of the exact PMF")
    mean = float(arr.sum())
    kmax = max(arr.size, int(poisson.ppf(1.0 - 1e-12, mean)))
    k = np.arange(kmax + 1)
    pb = np.zeros(kmax + 1)
    pb[: arr.size + 1] = poisson_binomial_pmf(arr)
    distance = np.abs(pb - poisson.pmf(k, mean)).sum()
    return float(distance + poisson.sf(kmax, mean))


def lt_order_check(dist_a: UserCountDistribution, dist_b: UserCountDistribution,
                   grid_size: Optional[int] = None, tol: Optional[float] = None) -> OrderingVerdict:
    """Whether A <=_Lt B, i.e. U_A(z) >= U_B(z) on a uniform grid over [0, 1]."""
    settings = get_settings()
    grid_size = settings.order_grid_size if grid_size is None else int(grid_size)
    if grid_size < 2:
        raise DomainError(f"grid_size must be at least 2, got {grid_size}")
    tol = settings.order_tol if tol is None else tol
    z = np.linspace(0.0, 1.0, grid_size)
    verdict = _verdict(np.asarray(dist_a.pgf(z)) - np.asarray(dist_b.pgf(z)), z, tol)
    logger.debug("LT order %s <= %s: %s", dist_a.label(), dist_b.label(), verdict)
    return verdict


def majorization_less(a: Sequence[float], b: Sequence[float]) -> bool:
    """Whether ``a`` is majorized by ``b`` (sorted partial sums of a never exceed those of b)."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ScenarioError("probs", f"vectors must have equal length, got {x.size} and {y.size}")
    if abs(x.sum() - y.sum()) > 1e-12:
        raise ScenarioError("probs", f"vectors must have equal sums, got {x.sum()} and {y.sum()}")
    partial_x = np.cumsum(np.sort(x)[::-1])
    partial_y = np.cumsum(np.sort(y)[::-1])
    return bool(np.all(partial_x <= partial_y + 1e-12))


def schur_pgf_check(a: Sequence[float], b: Sequence[float],
                    grid_size: Optional[int] = None) -> OrderingVerdict:
    """Schur-concavity of prod(1 - p_i + p_i z): if a is majorized by b, U_a >= U_b.

    Raises DomainError when ``a`` is not majorized by ``b`` since the claim
    says nothing in that case.
    """
    if not majorization_less(a, b):
        raise DomainError("first vector is not majorized by the second")
    return lt_order_check(PoissonBinomial(tuple(a)), PoissonBinomial(tuple(b)), grid_size)


def completely_monotone_check(values: Sequence[float], max_order: int = 2,
                              tol: float = 0.0) -> OrderingVerdict:
    """(-1)^k times the k-th forward difference is non-negative for k = 1..max_order.

    ``values`` are f(N) on consecutive integers. ``witness_z`` reports the
    order k of the worst violation.
    """
    f = np.asarray(values, dtype=float)
    if f.size < max_order + 1:
        raise DomainError(f"need at least {max_order + 1} values for order {max_order}")
    worst = 0.0
    worst_order = None
    for order in range(1, max_order + 1):
        signed = (-1) ** order * np.diff(f, n=order)
        violation = max(0.0, -float(signed.min()))
        if violation > worst:
            worst, worst_order = violation, order
    holds = worst <= tol
    return OrderingVerdict(holds, worst, None if holds else float(worst_order))


def scaling_conditions(family: CountFamily, lambda_grid: Sequence[float]) -> pd.DataFrame:
    """Diagnostics of the two scaling-law conditions along increasing means.

    Columns: ``lambda`` (realised mean), ``p0_loglog`` = Pr[N=0] log log lambda
    and ``var_ratio`` = variance / lambda^2. Both must decay toward 0.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ScenarioError("grid", "lambda grid must be non-empty and strictly increasing")
    if grid[0] < 3.0:
        raise ScenarioError("grid", "lambda grid entries must be >= 3 so that log log lambda > 0")
    rows = []
    for target in grid:
        dist = family.at_mean(float(target))
        mean, variance = dist.moments()
        rows.append({
            "distribution": family.label(),
            "lambda": mean,
            "p0_loglog": dist.prob_empty() * math.log(math.log(mean)),
            "var_ratio": variance / (mean * mean),
        })
    return pd.DataFrame(rows, columns=["distribution", "lambda", "p0_loglog", "var_ratio"])
