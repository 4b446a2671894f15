from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..utils.errors import DomainError

ArrayLike = Union[float, np.ndarray]


def _check_unit(z, name: str = "z"):
    arr = np.asarray(z, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(np.isnan(arr)):
        raise DomainError(f"{name} must lie in [0, 1], got {z}")
    return arr


def _scalar_or_array(value):
    if np.ndim(value) == 0:
        return float(value)
    return value


class UserCountDistribution(ABC):
    """Base class for distributions of the active-user count N = |S|.

    Subclasses are frozen dataclasses; instances are immutable and can be
    shared between threads. Sampling needs a caller-owned generator.
    """

    kind: str = ""

    @abstractmethod
    def pmf(self, k: int) -> float:
        """Probability that exactly ``k`` users are active."""
        pass

    @abstractmethod
    def _pgf(self, z: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _pgf_derivative(self, z: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _pgf_tail(self, y: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def moments(self) -> Tuple[float, float]:
        """Exact (mean, variance)."""
        pass

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        """Draw from the distribution with a caller-owned generator."""
        pass

    @abstractmethod
    def support_max(self) -> int:
        """Largest k carrying non-negligible mass (tail below 1e-16)."""
        pass

    @abstractmethod
    def params(self) -> Dict[str, Any]:
        """Constructor parameters in scenario-file spelling."""
        pass

    def pgf(self, z: ArrayLike) -> ArrayLike:
        """U_N(z) = E[z^N] on [0, 1]."""
        return _scalar_or_array(self._pgf(_check_unit(z)))

    def pgf_derivative(self, z: ArrayLike) -> ArrayLike:
        """U_N'(z) on [0, 1]."""
        return _scalar_or_array(self._pgf_derivative(_check_unit(z)))

    def pgf_tail(self, y: ArrayLike) -> ArrayLike:
        """1 - U_N(1 - y), computed without cancellation for small y."""
        return _scalar_or_array(self._pgf_tail(_check_unit(y, "y")))

    @property
    def mean(self) -> float:
        return self.moments()[0]

    @property
    def variance(self) -> float:
        return self.moments()[1]

    def pgf_bounds(self, z: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
        """Moment bounds lower <= U_N(z) <= upper on [0, 1].

        lower = 1 + (z-1) mean; the upper bound replaces the unknown
        normalized PGF m(z) by its largest value sigma^2 + mean^2 - mean.
        """
        z = _check_unit(z)
        mean, variance = self.moments()
        lower = 1.0 + (z - 1.0) * mean
        upper = lower + 0.5 * (z - 1.0) ** 2 * (variance + mean * mean - mean)
        return _scalar_or_array(lower), _scalar_or_array(upper)

    def prob_empty(self) -> float:
        """Pr[N = 0] = U_N(0)."""
        return float(self.pgf(0.0))

    def pmf_array(self, kmax: Optional[int] = None) -> np.ndarray:
        """Masses for k = 0..kmax (defaults to the effective support)."""
        kmax = self.support_max() if kmax is None else int(kmax)
        return np.array([self.pmf(k) for k in range(kmax + 1)])

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, **self.params()}

    def label(self) -> str:
        inner = ",".join(f"{k}={_short(v)}" for k, v in self.params().items())
        return f"{self.kind}({inner})"


def _short(value) -> str:
    if isinstance(value, (list, tuple)):
        return f"[{len(value)} probs]"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
