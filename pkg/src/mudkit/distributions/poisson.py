from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.stats import poisson

from ..utils.errors import ScenarioError
from .base import UserCountDistribution


@dataclass(frozen=True)
class Poisson(UserCountDistribution):
    """Poisson number of active users with mean ``mean``."""

    mean_count: float
    kind = "poisson"

    def __post_init__(self):
        if not self.mean_count > 0:
            raise ScenarioError("mean", f"must be positive, got {self.mean_count!r}")
        object.__setattr__(self, "mean_count", float(self.mean_count))

    def pmf(self, k: int) -> float:
        return float(poisson.pmf(k, self.mean_count))

    def _pgf(self, z):
        return np.exp(self.mean_count * (z - 1.0))

    def _pgf_derivative(self, z):
        return self.mean_count * np.exp(self.mean_count * (z - 1.0))

    def _pgf_tail(self, y):
        return -np.expm1(-self.mean_count * y)

    def moments(self) -> Tuple[float, float]:
        return self.mean_count, self.mean_count

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        return rng.poisson(self.mean_count, size=size)

    def support_max(self) -> int:
        return int(poisson.isf(1e-16, self.mean_count)) + 1

    def params(self) -> Dict[str, Any]:
        return {"lambda": self.mean_count}
