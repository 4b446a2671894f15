"""Parameterized families of user-count distributions.

A family fixes everything except the mean (or the swept parameter) so that
sweeps and scaling diagnostics can realise equal-mean members on demand.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from ..utils.errors import ScenarioError
from .base import UserCountDistribution
from .binomial import Binomial
from .deterministic import Deterministic
from .negbinomial import NegBinomial
from .poisson import Poisson
from .poisson_binomial import PoissonBinomial

KIND_ALIASES = {
    "deterministic": "deterministic",
    "fixed": "deterministic",
    "binomial": "binomial",
    "negbinomial": "negbinomial",
    "negative_binomial": "negbinomial",
    "nb": "negbinomial",
    "poisson": "poisson",
    "pb": "pb",
    "poisson_binomial": "pb",
}


def normalize_kind(kind: Any) -> str:
    try:
        return KIND_ALIASES[str(kind).strip().lower()]
    except KeyError:
        raise ScenarioError("kind", f"unknown distribution kind {kind!r}; "
                                    f"expected one of {sorted(set(KIND_ALIASES.values()))}")


def spread_probs(size: int, mean: float, spread: float) -> np.ndarray:
    """``size`` probabilities summing to ``mean``, linearly spread by +/- ``spread`` around mean/size."""
    if size < 1:
        raise ScenarioError("L", f"must be a positive integer, got {size}")
    if not 0.0 <= spread < 1.0:
        raise ScenarioError("spread", f"must lie in [0, 1), got {spread}")
    base = mean / size
    if size == 1:
        offsets = np.zeros(1)
    else:
        offsets = np.linspace(-1.0, 1.0, size)
    probs = base * (1.0 + spread * offsets)
    if probs.max() > 1.0:
        raise ScenarioError("spread", f"mean {mean} over L={size} users with spread {spread} "
                                      f"needs a probability above 1")
    return probs


@dataclass(frozen=True)
class CountFamily:
    """A distribution template: a kind, its shape parameters, and an optional fixed member."""

    kind: str
    p: Optional[float] = None
    spread: float = 0.0
    explicit: Optional[UserCountDistribution] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_kind(self.kind))
        if self.p is not None and not 0.0 < self.p <= 1.0:
            raise ScenarioError("p", f"must lie in (0, 1], got {self.p!r}")
        if self.kind == "negbinomial" and self.p is not None and self.p >= 1.0:
            raise ScenarioError("p", "a negative binomial family needs p < 1")

    def at_mean(self, mean: float) -> UserCountDistribution:
        """Member whose mean is ``mean`` (rounded where the family is integer-valued)."""
        if not mean > 0:
            raise ScenarioError("lambda", f"must be positive, got {mean}")
        if self.kind == "deterministic":
            return Deterministic(max(0, int(round(mean))))
        if self.kind == "poisson":
            return Poisson(mean)
        if self.p is None:
            raise ScenarioError("p", f"a {self.kind} family needs a per-user success probability p")
        if self.kind == "negbinomial":
            return NegBinomial(mean * (1.0 - self.p) / self.p, self.p)
        trials = max(1, int(round(mean / self.p)))
        if self.kind == "binomial":
            return Binomial(trials, min(1.0, mean / trials))
        return PoissonBinomial(tuple(spread_probs(trials, mean, self.spread)))

    def at_failures(self, failures: float) -> UserCountDistribution:
        if self.kind != "negbinomial":
            raise ScenarioError("sweep_var", f"r sweeps need negative binomial families, not {self.kind}")
        if self.p is None:
            raise ScenarioError("p", "an r sweep needs a fixed p")
        return NegBinomial(failures, self.p)

    def at_trials(self, trials: int, mean: Optional[float] = None) -> UserCountDistribution:
        """Member with ``trials`` users; with ``mean`` the per-user probability is mean/trials."""
        trials = int(trials)
        if self.kind not in ("binomial", "pb"):
            raise ScenarioError("sweep_var", f"L sweeps need binomial or pb families, not {self.kind}")
        if mean is None:
            if self.p is None:
                raise ScenarioError("p", "an L sweep without a fixed lambda needs p")
            mean = trials * self.p
        if self.kind == "binomial":
            return Binomial(trials, mean / trials)
        return PoissonBinomial(tuple(spread_probs(trials, mean, self.spread)))

    def realise(self, mean: Optional[float] = None) -> UserCountDistribution:
        """The explicit member if there is one, else the member of the given mean."""
        if self.explicit is not None:
            return self.explicit
        if mean is None:
            raise ScenarioError("lambda", f"a {self.kind} template needs lambda")
        return self.at_mean(float(mean))

    def label(self) -> str:
        if self.explicit is not None:
            return self.explicit.label()
        if self.kind in ("deterministic", "poisson") or self.p is None:
            return self.kind
        if self.kind == "pb" and self.spread:
            return f"pb(p={self.p:g},spread={self.spread:g})"
        return f"{self.kind}(p={self.p:g})"

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind}
        if self.p is not None:
            out["p"] = self.p
        if self.spread:
            out["spread"] = self.spread
        return out
