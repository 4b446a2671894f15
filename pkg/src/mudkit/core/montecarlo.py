"""
Seeded Monte-Carlo simulation of the selection procedure.

Each trial draws the number of active users (or every user's interference
test in threshold mode), draws the unit-exponential gains of the active
users, keeps the best one and records the instantaneous outage indicator,
capacity ln(1 + rho gamma*) and error rate P_e(rho gamma*).

Trials are split into fixed-size blocks; block i always uses the generator
keyed by (seed, i) and blocks are merged in index order, so a report is a
pure function of (scenario, n_trials, seed) whatever the number of workers.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..distributions import PoissonBinomial
from ..utils.config import get_settings
from ..utils.errors import ScenarioError
from ..utils.log import get_logger
from ..utils.rng import block_generator, check_seed, plan_blocks
from .channel import SelectedGainLaw, success_prob
from .metrics import MONTE_CARLO, MetricEstimate, Scenario

logger = get_logger(__name__)

# exponential draws held in memory at once inside a block
_MAX_DRAWS = 1 << 22
_CDF_LEVELS = np.linspace(0.025, 0.975, 20)


@dataclass(frozen=True)
class TrialConfig:
    scenario: Scenario
    n_trials: int
    seed: int = 0
    workers: int = 1
    include_empty_atom: bool = True

    def __post_init__(self):
        if isinstance(self.n_trials, bool) or int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise ScenarioError("trials", f"must be a positive integer, got {self.n_trials!r}")
        check_seed(self.seed)
        if isinstance(self.workers, bool) or int(self.workers) != self.workers or self.workers < 1:
            raise ScenarioError("workers", f"must be a positive integer, got {self.workers!r}")


@dataclass
class _Moments:
    """Running (n, mean, M2) merged with Chan's pairwise update."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "_Moments":
        mean = float(values.mean())
        return cls(int(values.size), mean, float(np.sum((values - mean) ** 2)))

    def merge(self, other: "_Moments") -> None:
        if other.n == 0:
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean += delta * other.n / n
        self.m2 += other.m2 + delta * delta * self.n * other.n / n
        self.n = n

    def estimate(self) -> MetricEstimate:
        var = self.m2 / (self.n - 1) if self.n > 1 else 0.0
        return MetricEstimate(self.mean, MONTE_CARLO, math.sqrt(var / self.n))


@dataclass
class _BlockResult:
    outage: _Moments
    capacity: _Moments
    ber: _Moments
    histogram: np.ndarray
    gains: np.ndarray
    activity: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class McReport:
    """Monte-Carlo estimates with standard errors.

    ``empirical_count_pmf`` has columns k, count, frequency, std_err and its
    counts sum to ``n_trials``; ``empirical_gain_cdf`` samples the empirical
    CDF of gamma* at 20 quantiles of the exact law, next to the exact CDF.
    ``activity_rate`` is filled in threshold mode only (per-user pass rate of
    the interference test).
    """

    outage: MetricEstimate
    capacity: MetricEstimate
    ber: MetricEstimate
    empirical_count_pmf: pd.DataFrame
    empirical_gain_cdf: pd.DataFrame
    n_trials: int
    seed: int
    activity_rate: Optional[pd.DataFrame] = None
    _gains: np.ndarray = field(default=None, repr=False)

    def ks_distance(self, law: SelectedGainLaw) -> float:
        """Sup distance between the empirical CDF of gamma* and ``law.cdf``."""
        x = np.unique(self._gains)
        n = self._gains.size
        upper = np.searchsorted(self._gains, x, side="right") / n
        lower = np.searchsorted(self._gains, x, side="left") / n
        exact = np.asarray(law.cdf(x), dtype=float)
        exact_left = np.where(x == 0.0, 0.0, exact)
        return float(max(np.max(np.abs(upper - exact)), np.max(np.abs(lower - exact_left))))

    def to_frame(self) -> pd.DataFrame:
        row = {"n_trials": self.n_trials, "seed": self.seed}
        for name in ("outage", "capacity", "ber"):
            estimate = getattr(self, name)
            row[name] = estimate.value
            row[f"{name}_std_err"] = estimate.std_err
        return pd.DataFrame([row])


def _best_gains(rng: np.random.Generator, counts: np.ndarray) -> np.ndarray:
    """Max of ``counts[i]`` unit-exponential draws per trial (0 for empty trials)."""
    gains = np.zeros(counts.size)
    active = np.flatnonzero(counts)
    start = 0
    while start < active.size:
        # grow the piece until it would exceed the draw budget
        totals = np.cumsum(counts[active[start:]])
        stop = start + max(1, int(np.searchsorted(totals, _MAX_DRAWS, side="right")))
        piece = active[start:stop]
        sizes = counts[piece]
        draws = rng.exponential(size=int(sizes.sum()))
        offsets = np.concatenate(([0], np.cumsum(sizes)[:-1]))
        gains[piece] = np.maximum.reduceat(draws, offsets)
        start = stop
    return gains


def _score(scenario: Scenario, counts: np.ndarray, gains: np.ndarray,
           include_empty_atom: bool, activity: Optional[np.ndarray] = None) -> _BlockResult:
    outage = (gains < scenario.outage_threshold()).astype(float)
    capacity = np.log1p(scenario.snr * gains)
    ber = np.asarray(scenario.error_rate(gains), dtype=float).reshape(gains.shape)
    if not include_empty_atom:
        ber = np.where(counts == 0, 0.0, ber)
    return _BlockResult(_Moments.of(outage), _Moments.of(capacity), _Moments.of(ber),
                        np.bincount(counts), gains, activity)


def _count_block(config: TrialConfig, block: Tuple[int, int]) -> _BlockResult:
    index, size = block
    rng = block_generator(config.seed, index)
    counts = np.asarray(config.scenario.count.sample(rng, size), dtype=np.int64)
    return _score(config.scenario, counts, _best_gains(rng, counts), config.include_empty_atom)


def _threshold_block(config: TrialConfig, probs: Optional[np.ndarray], thresholds: Optional[np.ndarray],
                     block: Tuple[int, int]) -> _BlockResult:
    index, size = block
    rng = block_generator(config.seed, index)
    users = probs.size if probs is not None else thresholds.size
    rows = max(1, _MAX_DRAWS // users)
    counts = np.empty(size, dtype=np.int64)
    gains = np.empty(size)
    activity = np.zeros(users, dtype=np.int64)
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        shape = (stop - start, users)
        if thresholds is not None:
            # gamma_p < Q_i: the interference test of each user
            active = rng.exponential(size=shape) < thresholds
        else:
            active = rng.random(shape) < probs
        link = rng.exponential(size=shape)
        counts[start:stop] = active.sum(axis=1)
        gains[start:stop] = np.where(active, link, 0.0).max(axis=1)
        activity += active.sum(axis=0)
    return _score(config.scenario, counts, gains, config.include_empty_atom, activity)


def _simulate(config: TrialConfig, worker) -> McReport:
    settings = get_settings()
    blocks = plan_blocks(int(config.n_trials), settings.mc_block_size)
    logger.info("monte carlo: %d trials in %d blocks on %d workers",
                config.n_trials, len(blocks), config.workers)
    if config.workers == 1:
        results = [worker(block) for block in blocks]
    else:
        with ThreadPoolExecutor(max_workers=int(config.workers)) as pool:
            # map yields in submission order
            results = list(pool.map(worker, blocks))
    return _assemble(config, results)


def _assemble(config: TrialConfig, results: List[_BlockResult]) -> McReport:
    outage, capacity, ber = _Moments(), _Moments(), _Moments()
    histogram = np.zeros(max(r.histogram.size for r in results), dtype=np.int64)
    for result in results:
        outage.merge(result.outage)
        capacity.merge(result.capacity)
        ber.merge(result.ber)
        histogram[: result.histogram.size] += result.histogram
    n = int(config.n_trials)
    gains = np.sort(np.concatenate([r.gains for r in results]))

    frequency = histogram / n
    count_pmf = pd.DataFrame({
        "k": np.arange(histogram.size),
        "count": histogram,
        "frequency": frequency,
        "std_err": np.sqrt(frequency * (1.0 - frequency) / n),
    })
    law = SelectedGainLaw(config.scenario.count)
    x = np.array([law.quantile(level) for level in _CDF_LEVELS])
    cdf = np.searchsorted(gains, x, side="right") / n
    gain_cdf = pd.DataFrame({"x": x, "cdf": cdf, "std_err": np.sqrt(cdf * (1.0 - cdf) / n),
                             "exact": np.asarray(law.cdf(x), dtype=float)})

    activity_rate = None
    if results[0].activity is not None:
        passed = np.sum([r.activity for r in results], axis=0)
        rate = passed / n
        activity_rate = pd.DataFrame({
            "user": np.arange(passed.size),
            "rate": rate,
            "std_err": np.sqrt(rate * (1.0 - rate) / n),
        })
    logger.info("monte carlo: outage=%.6g capacity=%.6g ber=%.6g", outage.mean, capacity.mean, ber.mean)
    return McReport(outage.estimate(), capacity.estimate(), ber.estimate(), count_pmf, gain_cdf,
                    n, int(config.seed), activity_rate, gains)


def run(config: TrialConfig) -> McReport:
    """Simulate ``config.n_trials`` slots with N drawn from the scenario's count law."""
    return _simulate(config, lambda block: _count_block(config, block))


def run_threshold_mode(config: TrialConfig, users: Optional[int] = None,
                       threshold: Union[float, Sequence[float], None] = None,
                       probs: Optional[Sequence[float]] = None) -> McReport:
    """Simulate the interference test of every user instead of drawing N.

    Give either ``users`` with an interference threshold Q (one value or one
    per user; user i passes when its unit-exponential gain to the primary
    receiver is below Q_i), or the per-user pass probabilities ``probs``.
    The scenario's count is replaced by the matching Poisson-binomial law.
    """
    if (probs is None) == (threshold is None):
        raise ScenarioError("probs", "give either a threshold Q or per-user probabilities")
    if probs is not None:
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any((p < 0.0) | (p > 1.0)):
            raise ScenarioError("probs", "must be a non-empty list of probabilities in [0, 1]")
        q = None
    else:
        if users is None or int(users) != users or users < 1:
            raise ScenarioError("L", f"must be a positive integer, got {users!r}")
        q = np.broadcast_to(np.asarray(threshold, dtype=float), (int(users),)).copy()
        if np.any(q < 0.0) or np.any(np.isnan(q)):
            raise ScenarioError("Q", "interference thresholds must be non-negative")
        p = np.array([success_prob(value) for value in q])
    count = PoissonBinomial(tuple(float(v) for v in p))
    config = replace(config, scenario=config.scenario.with_count(count))
    return _simulate(config, lambda block: _threshold_block(config, None if q is not None else p, q, block))
