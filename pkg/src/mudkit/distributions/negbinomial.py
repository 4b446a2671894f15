from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.stats import nbinom

from ..utils.errors import ScenarioError
from .base import UserCountDistribution


@dataclass(frozen=True)
class NegBinomial(UserCountDistribution):
    """Users are admitted until ``failures`` interference-test failures occur.

    ``failures`` may be non-integer (Polya form):
    Pr[N=k] = Gamma(r+k) / (Gamma(r) k!) p^k (1-p)^r.
    """

    failures: float
    success: float
    kind = "negbinomial"

    def __post_init__(self):
        if not self.failures > 0:
            raise ScenarioError("failures", f"must be positive, got {self.failures!r}")
        if not 0.0 < self.success < 1.0:
            raise ScenarioError("success", f"must lie in (0, 1), got {self.success!r}")
        object.__setattr__(self, "failures", float(self.failures))
        object.__setattr__(self, "success", float(self.success))

    @property
    def odds(self) -> float:
        """u = p / (1 - p)."""
        return self.success / (1.0 - self.success)

    def pmf(self, k: int) -> float:
        # scipy counts failures before n successes, so the roles of p and 1-p swap
        return float(nbinom.pmf(k, self.failures, 1.0 - self.success))

    def _pgf(self, z):
        p = self.success
        return np.power((1.0 - p) / (1.0 - p * z), self.failures)

    def _pgf_derivative(self, z):
        p = self.success
        r = self.failures
        return r * p * (1.0 - p) ** r * np.power(1.0 - p * z, -r - 1.0)

    def _pgf_tail(self, y):
        return -np.expm1(-self.failures * np.log1p(self.odds * y))

    def moments(self) -> Tuple[float, float]:
        mean = self.failures * self.odds
        return mean, mean / (1.0 - self.success)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        # Gamma-Poisson mixture, valid for real r
        return rng.poisson(rng.gamma(self.failures, self.odds, size=size))

    def support_max(self) -> int:
        return int(nbinom.isf(1e-16, self.failures, 1.0 - self.success)) + 1

    def params(self) -> Dict[str, Any]:
        return {"r": self.failures, "p": self.success}
