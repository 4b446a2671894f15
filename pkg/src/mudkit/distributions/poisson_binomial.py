from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial

from ..utils.config import get_settings
from ..utils.errors import ScenarioError
from .base import UserCountDistribution

# keep Bernoulli draw matrices around this many elements per chunk
_SAMPLE_CHUNK = 1 << 22


def poisson_binomial_pmf(probs: Sequence[float]) -> np.ndarray:
    """Exact PMF of a sum of independent Bernoulli(p_i) by O(L^2) convolution."""
    masses = np.zeros(len(probs) + 1)
    masses[0] = 1.0
    for i, p in enumerate(probs, start=1):
        masses[1:i + 1] = masses[1:i + 1] * (1.0 - p) + masses[0:i] * p
        masses[0] *= 1.0 - p
    return masses


@dataclass(frozen=True)
class PoissonBinomial(UserCountDistribution):
    """Number of users passing independent, non-identical interference tests.

    User i is active with probability ``probs[i]``. Probabilities of exactly 0
    or 1 are allowed (a user that never or always passes), which makes the
    deterministic count a special case.
    """

    probs: Tuple[float, ...] = field()
    kind = "pb"

    def __post_init__(self):
        try:
            values = tuple(float(p) for p in self.probs)
        except (TypeError, ValueError):
            raise ScenarioError("probs", "must be a list of probabilities")
        limit = get_settings().pb_max_len
        if not values:
            raise ScenarioError("probs", "must contain at least one probability")
        if len(values) > limit:
            raise ScenarioError(
                "probs", f"L={len(values)} exceeds the L <= {limit} limit of the exact PMF"
            )
        bad = [p for p in values if not 0.0 <= p <= 1.0]
        if bad:
            raise ScenarioError("probs", f"entries must lie in [0, 1], got {bad[0]!r}")
        object.__setattr__(self, "probs", values)

    @cached_property
    def _probs(self) -> np.ndarray:
        return np.asarray(self.probs)

    @cached_property
    def _masses(self) -> np.ndarray:
        return poisson_binomial_pmf(self.probs)

    @property
    def size(self) -> int:
        return len(self.probs)

    def pmf(self, k: int) -> float:
        if k < 0 or k > self.size:
            return 0.0
        return float(self._masses[k])

    def pmf_array(self, kmax: Optional[int] = None) -> np.ndarray:
        kmax = self.size if kmax is None else int(kmax)
        out = np.zeros(kmax + 1)
        n = min(kmax, self.size) + 1
        out[:n] = self._masses[:n]
        return out

    def _pgf(self, z):
        z = np.asarray(z, dtype=float)
        factors = 1.0 - self._probs + np.multiply.outer(z, self._probs)
        return np.prod(factors, axis=-1)

    def _pgf_derivative(self, z):
        k = np.arange(1, self.size + 1)
        return polynomial.polyval(z, k * self._masses[1:])

    def _pgf_tail(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            logs = np.log1p(-np.multiply.outer(y, self._probs))
        return -np.expm1(logs.sum(axis=-1))

    def moments(self) -> Tuple[float, float]:
        p = self._probs
        return float(p.sum()), float((p * (1.0 - p)).sum())

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        if size is None:
            return int((rng.random(self.size) < self._probs).sum())
        rows = max(1, _SAMPLE_CHUNK // self.size)
        out = np.empty(size, dtype=np.int64)
        for start in range(0, size, rows):
            stop = min(size, start + rows)
            draws = rng.random((stop - start, self.size)) < self._probs
            out[start:stop] = draws.sum(axis=1)
        return out

    def support_max(self) -> int:
        return self.size

    def params(self) -> Dict[str, Any]:
        return {"probs": list(self.probs)}
