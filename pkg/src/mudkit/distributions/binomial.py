from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.stats import binom

from ..utils.errors import ScenarioError
from .base import UserCountDistribution


@dataclass(frozen=True)
class Binomial(UserCountDistribution):
    """Each of ``trials`` users independently passes the interference test with prob. ``success``."""

    trials: int
    success: float
    kind = "binomial"

    def __post_init__(self):
        if isinstance(self.trials, bool) or int(self.trials) != self.trials or self.trials < 1:
            raise ScenarioError("trials", f"must be a positive integer, got {self.trials!r}")
        if not 0.0 < self.success <= 1.0:
            raise ScenarioError("success", f"must lie in (0, 1], got {self.success!r}")
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "success", float(self.success))

    def pmf(self, k: int) -> float:
        return float(binom.pmf(k, self.trials, self.success))

    def _pgf(self, z):
        return np.power(1.0 - self.success + self.success * z, self.trials)

    def _pgf_derivative(self, z):
        return self.trials * self.success * np.power(
            1.0 - self.success + self.success * z, self.trials - 1
        )

    def _pgf_tail(self, y):
        with np.errstate(divide="ignore"):
            return -np.expm1(self.trials * np.log1p(-self.success * y))

    def moments(self) -> Tuple[float, float]:
        mean = self.trials * self.success
        return mean, mean * (1.0 - self.success)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        return rng.binomial(self.trials, self.success, size=size)

    def support_max(self) -> int:
        return self.trials

    def params(self) -> Dict[str, Any]:
        return {"L": self.trials, "p": self.success}
