"""
Scenario files: one JSON document describing an experiment.

    {
      "scenario": {"count": {"kind": "binomial", "L": 8, "p": 0.5},
                   "snr": 10, "rate": 1, "ber_alpha": 0.5, "ber_eta": 1,
                   "ber_model": "exponential", "rate_units": "bits"},
      "distributions": [{"kind": "binomial", "p": 0.5}, {"kind": "poisson"}],
      "sweep": {"metric": "capacity", "sweep_var": "lambda",
                "grid": {"start": 2, "stop": 64, "count": 6, "scale": "log"}},
      "mc": {"trials": 100000, "seed": 7, "workers": 1}
    }

Every section is optional. Errors name the offending field by its dotted
path (``scenario.count.success``); JSON syntax errors carry the line.
"""
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

from ..core.metrics import Scenario
from ..core.sweep import SweepSpec, sweep_spec_from_dict
from ..distributions import CountFamily, distribution_from_dict, family_from_dict
from ..utils.errors import ScenarioError

_SECTIONS = ("scenario", "distributions", "sweep", "mc")
_SCENARIO_KEYS = ("count", "lambda", "snr", "rho", "rate", "ber_alpha", "ber_eta", "ber_model", "rate_units")
_MC_KEYS = ("trials", "seed", "workers", "include_empty_atom")


@dataclass(frozen=True, eq=False)
class ScenarioFile:
    """Parsed contents of a scenario file."""

    path: str
    fixed: Dict[str, Any] = field(default_factory=dict)
    scenario: Optional[Scenario] = None
    families: Tuple[CountFamily, ...] = ()
    sweep: Optional[SweepSpec] = None
    mc: Dict[str, Any] = field(default_factory=dict)


def _fixed_fields(section: Mapping[str, Any]) -> Dict[str, Any]:
    fixed = {}
    for key, value in section.items():
        if key not in _SCENARIO_KEYS:
            raise ScenarioError(f"scenario.{key}", "unknown field")
        if key == "count":
            continue
        fixed["snr" if key == "rho" else key] = value
    return fixed


def parse_scenario_document(data: Any, path: str = "<string>") -> ScenarioFile:
    if not isinstance(data, Mapping):
        raise ScenarioError("file", "top level must be a JSON object")
    for key in data:
        if key not in _SECTIONS:
            raise ScenarioError(str(key), f"unknown section; expected {', '.join(_SECTIONS)}")

    section = data.get("scenario", {})
    if not isinstance(section, Mapping):
        raise ScenarioError("scenario", "must be an object")
    fixed = _fixed_fields(section)
    scenario = None
    if "count" in section:
        try:
            count = distribution_from_dict(section["count"])
        except ScenarioError as e:
            raise e.under("scenario.count")
        fields = {k: v for k, v in fixed.items() if k != "lambda"}
        try:
            scenario = Scenario(count, **fields)
        except ScenarioError as e:
            raise e.under("scenario")

    templates = data.get("distributions", [])
    if not isinstance(templates, list):
        raise ScenarioError("distributions", "must be a list of distribution objects")
    families = []
    for i, item in enumerate(templates):
        try:
            families.append(family_from_dict(item))
        except ScenarioError as e:
            raise e.under(f"distributions[{i}]")
    if not families and scenario is not None:
        families.append(family_from_dict(section["count"]))

    sweep = None
    if "sweep" in data:
        if not isinstance(data["sweep"], Mapping):
            raise ScenarioError("sweep", "must be an object")
        sweep = sweep_spec_from_dict(data["sweep"], families, fixed)

    mc = data.get("mc", {})
    if not isinstance(mc, Mapping):
        raise ScenarioError("mc", "must be an object")
    for key in mc:
        if key not in _MC_KEYS:
            raise ScenarioError(f"mc.{key}", "unknown field")
    return ScenarioFile(path, fixed, scenario, tuple(families), sweep, dict(mc))


def load_scenario_file(path: str) -> ScenarioFile:
    """Read and validate a scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ScenarioError("file", f"cannot read {path}: {e.strerror or e}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError("file", e.msg, line=e.lineno)
    return parse_scenario_document(data, path)
