"""User-count distributions N = |S| and their scenario-file spelling."""
from typing import Any, Dict, Mapping

from ..utils.errors import ScenarioError
from .base import UserCountDistribution
from .binomial import Binomial
from .deterministic import Deterministic
from .family import CountFamily, normalize_kind, spread_probs
from .negbinomial import NegBinomial
from .poisson import Poisson
from .poisson_binomial import PoissonBinomial, poisson_binomial_pmf

__all__ = [
    "Binomial",
    "CountFamily",
    "Deterministic",
    "NegBinomial",
    "Poisson",
    "PoissonBinomial",
    "UserCountDistribution",
    "distribution_from_dict",
    "family_from_dict",
    "poisson_binomial_pmf",
]

# scenario-file key -> accepted spellings
_KEYS = {
    "deterministic": {"n": ("n",)},
    "binomial": {"trials": ("L", "trials"), "success": ("p", "success")},
    "negbinomial": {"failures": ("r", "failures"), "success": ("p", "success")},
    "poisson": {"mean": ("lambda", "mean", "lam")},
    "pb": {"probs": ("probs",)},
}
_PB_GENERATOR_KEYS = ("L", "lambda", "mean", "spread")


def _pick(data: Mapping[str, Any], name: str, spellings) -> Any:
    for key in spellings:
        if key in data:
            return data[key]
    raise ScenarioError(name, f"missing (expected one of {', '.join(spellings)})")


def _check_keys(data: Mapping[str, Any], allowed) -> None:
    for key in data:
        if key not in allowed:
            raise ScenarioError(str(key), "unknown field")


def distribution_from_dict(data: Mapping[str, Any]) -> UserCountDistribution:
    """Build a distribution from e.g. ``{"kind": "binomial", "L": 8, "p": 0.5}``.

    A PB distribution takes either ``probs`` or the generator fields
    ``L``, ``lambda`` and optional ``spread``.
    """
    if not isinstance(data, Mapping):
        raise ScenarioError("kind", "a distribution must be an object with a 'kind' field")
    kind = normalize_kind(data.get("kind"))
    keys = _KEYS[kind]
    if kind == "pb" and "probs" not in data:
        _check_keys(data, ("kind",) + _PB_GENERATOR_KEYS)
        size = _pick(data, "L", ("L",))
        mean = _pick(data, "lambda", ("lambda", "mean"))
        try:
            size = int(size)
            mean = float(mean)
        except (TypeError, ValueError):
            raise ScenarioError("L", "L and lambda must be numbers")
        return PoissonBinomial(tuple(spread_probs(size, mean, float(data.get("spread", 0.0)))))
    _check_keys(data, ("kind",) + tuple(s for spellings in keys.values() for s in spellings))
    values = {name: _pick(data, name, spellings) for name, spellings in keys.items()}
    if kind == "deterministic":
        return Deterministic(values["n"])
    if kind == "binomial":
        return Binomial(values["trials"], values["success"])
    if kind == "negbinomial":
        return NegBinomial(values["failures"], values["success"])
    if kind == "poisson":
        return Poisson(values["mean"])
    return PoissonBinomial(tuple(values["probs"]))


def family_from_dict(data: Mapping[str, Any]) -> CountFamily:
    """Template for sweeps: ``{"kind": "nb", "p": 0.5}`` or a fully specified distribution."""
    if not isinstance(data, Mapping):
        raise ScenarioError("kind", "a distribution template must be an object with a 'kind' field")
    kind = normalize_kind(data.get("kind"))
    shape_only = set(data) <= {"kind", "p", "success", "spread"}
    p = data.get("p", data.get("success"))
    explicit = None if shape_only else distribution_from_dict(data)
    if kind in ("binomial", "negbinomial") and not shape_only:
        p = explicit.params()["p"]
    try:
        p = None if p is None else float(p)
        spread = float(data.get("spread", 0.0))
    except (TypeError, ValueError):
        raise ScenarioError("p", "p and spread must be numbers")
    return CountFamily(kind, p=p, spread=spread, explicit=explicit)


def describe(dist: UserCountDistribution) -> Dict[str, Any]:
    mean, variance = dist.moments()
    return {"distribution": dist.label(), "mean": mean, "variance": variance,
            "prob_empty": dist.prob_empty()}
