from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..utils.errors import ScenarioError
from .base import UserCountDistribution


@dataclass(frozen=True)
class Deterministic(UserCountDistribution):
    """Point mass: exactly ``n`` users are always active."""

    n: int
    kind = "deterministic"

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 0:
            raise ScenarioError("n", f"must be a non-negative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    def pmf(self, k: int) -> float:
        return 1.0 if k == self.n else 0.0

    def _pgf(self, z):
        return np.power(z, self.n)

    def _pgf_derivative(self, z):
        if self.n == 0:
            return np.zeros_like(z)
        return self.n * np.power(z, self.n - 1)

    def _pgf_tail(self, y):
        if self.n == 0:
            return np.zeros_like(y)
        with np.errstate(divide="ignore"):
            return -np.expm1(self.n * np.log1p(-y))

    def moments(self) -> Tuple[float, float]:
        return float(self.n), 0.0

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        if size is None:
            return self.n
        return np.full(size, self.n, dtype=np.int64)

    def support_max(self) -> int:
        return self.n

    def params(self) -> Dict[str, Any]:
        return {"n": self.n}
