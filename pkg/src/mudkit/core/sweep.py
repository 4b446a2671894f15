"""Parameter sweeps over user-count distributions, run on a bounded thread pool."""
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..distributions import CountFamily, PoissonBinomial, UserCountDistribution
from ..utils.errors import ConvergenceError, ScenarioError
from ..utils.log import get_logger
from . import diagnostics, montecarlo, ordering
from .metrics import (CLOSED_FORM, MONTE_CARLO, QUADRATURE, Scenario, ber_closed_form, ber_numeric,
                      ergodic_capacity, outage_probability, selection_delay)

logger = get_logger(__name__)

METRICS = ("outage", "capacity", "ber", "ordering", "lecam", "scaling", "jensen", "regvar")
SWEEP_VARS = ("lambda", "rho", "r", "L", "R")
METHOD_CHOICES = (CLOSED_FORM, QUADRATURE, MONTE_CARLO, "all")

# methods each metric can be computed with, in column order
_METRIC_METHODS = {
    "outage": (CLOSED_FORM, MONTE_CARLO),
    "capacity": (QUADRATURE, MONTE_CARLO),
    "ber": (CLOSED_FORM, QUADRATURE, MONTE_CARLO),
}
_SCENARIO_FIELDS = ("snr", "rate", "ber_alpha", "ber_eta", "ber_model", "rate_units")


def parse_grid(text: str) -> Tuple[float, ...]:
    """Grid from ``"2,4,8"`` or ``"start:stop:count[:linear|log]"``."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) not in (3, 4):
                raise ValueError(text)
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            scale = parts[3].strip().lower() if len(parts) == 4 else "linear"
            return grid_values(start, stop, count, scale)
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ScenarioError("grid", f"cannot parse {text!r}; use 'a,b,c' or 'start:stop:count[:log]'")


def grid_values(start: float, stop: float, count: int, scale: str = "linear") -> Tuple[float, ...]:
    if count < 1:
        raise ScenarioError("grid", f"count must be at least 1, got {count}")
    if scale == "log":
        if not (start > 0 and stop > 0):
            raise ScenarioError("grid", "a log grid needs positive end points")
        return tuple(float(v) for v in np.geomspace(start, stop, count))
    if scale != "linear":
        raise ScenarioError("grid", f"scale must be linear or log, got {scale!r}")
    return tuple(float(v) for v in np.linspace(start, stop, count))


@dataclass(frozen=True)
class SweepSpec:
    """What to compute, for which distributions, over which grid.

    ``fixed`` holds the Scenario fields that are not swept, plus ``lambda``
    when the sweep variable is rho, R or L, and ``kappa`` for regvar.
    For ``regvar`` the grid holds u values and ``distributions`` may be empty.
    """

    metric: str
    distributions: Tuple[CountFamily, ...]
    grid: Tuple[float, ...]
    sweep_var: str = "lambda"
    fixed: Mapping[str, Any] = field(default_factory=dict)
    method: str = "all"
    trials: int = 100_000
    seed: int = 0
    include_empty_atom: bool = False
    workers: int = 1
    tol: Optional[float] = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ScenarioError("metric", f"must be one of {', '.join(METRICS)}, got {self.metric!r}")
        if self.sweep_var not in SWEEP_VARS:
            raise ScenarioError("sweep_var", f"must be one of {', '.join(SWEEP_VARS)}, got {self.sweep_var!r}")
        if self.method not in METHOD_CHOICES:
            raise ScenarioError("method", f"must be one of {', '.join(METHOD_CHOICES)}, got {self.method!r}")
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ScenarioError("grid", "must be non-empty")
        steps = np.diff(grid)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ScenarioError("grid", "must be strictly monotone")
        if self.metric != "regvar" and not self.distributions:
            raise ScenarioError("distributions", "at least one distribution is needed")
        available = _METRIC_METHODS.get(self.metric)
        if available is None and self.method == MONTE_CARLO:
            raise ScenarioError("method", f"{self.metric} is analytic and has no monte_carlo evaluation")
        if available is not None and self.method not in ("all",) + available:
            raise ScenarioError("method", f"{self.metric} has no {self.method} evaluation")
        if self.workers < 1:
            raise ScenarioError("workers", f"must be a positive integer, got {self.workers}")
        unknown = set(self.fixed) - set(_SCENARIO_FIELDS) - {"lambda", "kappa"}
        if unknown:
            raise ScenarioError(sorted(unknown)[0], "unknown scenario field")

    def methods(self) -> Tuple[str, ...]:
        """Methods evaluated per grid point (empty for the analytic diagnostics)."""
        available = _METRIC_METHODS.get(self.metric, ())
        if self.method == "all":
            return available
        return tuple(m for m in available if m == self.method)

    def base_scenario_fields(self) -> Dict[str, Any]:
        return {k: self.fixed[k] for k in _SCENARIO_FIELDS if k in self.fixed}


@dataclass(frozen=True, eq=False)
class SweepResult:
    spec: SweepSpec
    frame: pd.DataFrame


class SweepStatus:
    """Thread-safe progress of a running sweep."""

    def __init__(self, total: int = 0):
        self._lock = threading.Lock()
        self._status = "idle"  # idle, running, completed, failed
        self._total = total
        self._done = 0
        self._error: Optional[Exception] = None
        self._start_time = None
        self._end_time = None

    def start(self, total: int):
        with self._lock:
            self._status = "running"
            self._total = total
            self._done = 0
            self._start_time = datetime.now()

    def point_done(self) -> int:
        with self._lock:
            self._done += 1
            return self._done

    def finish(self, error: Optional[Exception] = None):
        with self._lock:
            self._error = error
            self._status = "failed" if error else "completed"
            self._end_time = datetime.now()

    def get_status(self) -> dict:
        with self._lock:
            return {
                "status": self._status,
                "done": self._done,
                "total": self._total,
                "error": str(self._error) if self._error else None,
                "duration": (self._end_time - self._start_time).total_seconds()
                            if self._start_time and self._end_time else None,
            }


def _scenario_at(spec: SweepSpec, family: CountFamily, value: float) -> Scenario:
    fields = spec.base_scenario_fields()
    var = spec.sweep_var
    if var == "lambda":
        count = family.at_mean(value)
    elif var == "r":
        count = family.at_failures(value)
    elif var == "L":
        if value != int(value) or value < 1:
            raise ScenarioError("grid", f"L must be a positive integer, got {value:g}")
        mean = spec.fixed.get("lambda")
        count = family.at_trials(int(value), None if mean is None else float(mean))
    else:
        fields["snr" if var == "rho" else "rate"] = value
        count = _count_at_fixed_mean(spec, family)
    return Scenario(count, **fields)


def _count_at_fixed_mean(spec: SweepSpec, family: CountFamily) -> UserCountDistribution:
    if family.explicit is None and "lambda" not in spec.fixed:
        raise ScenarioError("lambda", f"a {spec.sweep_var} sweep over a {family.kind} template needs a fixed lambda")
    return family.realise(spec.fixed.get("lambda"))


def _capacity_scale(s: Scenario) -> float:
    return 1.0 / math.log(2.0) if s.rate_units == "bits" else 1.0


def _metric_row(spec: SweepSpec, family: CountFamily, value: float) -> Dict[str, Any]:
    s = _scenario_at(spec, family, value)
    mean = s.count.moments()[0]
    row: Dict[str, Any] = {"distribution": s.count.label(), spec.sweep_var: value, "mean": mean}
    scale = _capacity_scale(s) if spec.metric == "capacity" else 1.0
    report = None
    for method in spec.methods():
        column = f"{spec.metric}_{method}"
        if method == MONTE_CARLO:
            if report is None:
                config = montecarlo.TrialConfig(s, spec.trials, spec.seed, 1, spec.include_empty_atom)
                report = montecarlo.run(config)
            estimate = getattr(report, spec.metric)
            row[column] = estimate.value * scale
            row[f"{column}_std_err"] = estimate.std_err * scale
        elif spec.metric == "outage":
            row[column] = outage_probability(s)
        elif spec.metric == "capacity":
            row[column] = ergodic_capacity(s, spec.tol).value * scale
        elif method == CLOSED_FORM:
            estimate = ber_closed_form(s)
            closed = np.nan if estimate is None else estimate.value
            if estimate is not None and spec.include_empty_atom:
                closed += s.error_rate_at_zero() * s.count.prob_empty()
            row[column] = closed
        else:
            row[column] = ber_numeric(s, spec.tol, include_empty_atom=spec.include_empty_atom).value
    if spec.sweep_var == "r":
        row["mean_delay"] = selection_delay(s.count)
    return row


def _diagnostic_rows(spec: SweepSpec, family: CountFamily, value: float) -> List[Dict[str, Any]]:
    s = _scenario_at(spec, family, value)
    mean, variance = s.count.moments()
    base = {"distribution": s.count.label(), spec.sweep_var: value, "mean": mean}
    if spec.metric == "jensen":
        gaps = diagnostics.jensen_gaps(s, spec.tol)
        return [{**base, "cap_gap": gaps.cap_gap, "ber_gap": gaps.ber_gap, "outage_gap": gaps.outage_gap}]
    if spec.metric == "lecam":
        if not isinstance(s.count, PoissonBinomial):
            raise ScenarioError("distributions", "lecam rows need Poisson-binomial distributions")
        probs = s.count.probs
        return [{**base, "L": s.count.size, "l1_distance": ordering.pb_poisson_l1_distance(probs),
                 "lecam_bound": ordering.lecam_bound(probs)}]
    # scaling
    capacity = ergodic_capacity(s, spec.tol).value
    gap = capacity - math.log1p(s.snr * math.log(mean)) if mean > 1.0 else np.nan
    loglog = math.log(math.log(mean)) if mean > math.e else np.nan
    return [{**base, "capacity": capacity, "gap": gap,
             "normalized_gap": abs(gap) * math.sqrt(math.log(mean)) if mean > 1.0 else np.nan,
             "p0_loglog": s.count.prob_empty() * loglog, "var_ratio": variance / (mean * mean)}]


def _ordering_rows(spec: SweepSpec, value: float) -> List[Dict[str, Any]]:
    counts = [_scenario_at(spec, family, value).count for family in spec.distributions]
    rows = []
    for first, second in zip(counts, counts[1:]):
        verdict = ordering.lt_order_check(first, second)
        rows.append({"first": first.label(), "second": second.label(), spec.sweep_var: value,
                     "holds": verdict.holds, "max_violation": verdict.max_violation,
                     "witness_z": verdict.witness_z})
    return rows


def _regvar_rows(spec: SweepSpec) -> List[Dict[str, Any]]:
    fields = spec.base_scenario_fields()
    model = fields.get("ber_model", "exponential")
    snr = float(fields.get("snr", 10.0))
    eta = float(fields.get("ber_eta", 1.0))
    kappa = float(spec.fixed.get("kappa", 2.0))
    profile = diagnostics.regvar_profile(model, snr, eta, spec.grid, kappa)
    target = diagnostics.regvar_target(model, eta * snr)
    profile = profile.sort_values("u", kind="stable").reset_index(drop=True)
    profile["target"] = target
    return profile.to_dict("records")


def run_sweep(spec: SweepSpec, status: Optional[SweepStatus] = None) -> SweepResult:
    """Evaluate every (distribution, grid point) and return rows in grid order.

    Points are dispatched to at most ``spec.workers`` threads; a non-converging
    point raises ConvergenceError tagged with the distribution and grid value.
    """
    status = status or SweepStatus()
    if spec.metric == "regvar":
        status.start(1)
        frame = pd.DataFrame(_regvar_rows(spec))
        status.point_done()
        status.finish()
        return SweepResult(spec, frame)

    if spec.metric == "ordering":
        tasks = [(None, value) for value in spec.grid]
    else:
        tasks = [(family, value) for family in spec.distributions for value in spec.grid]
    status.start(len(tasks))
    logger.info("sweep %s: %d points on %d workers", spec.metric, len(tasks), spec.workers)

    def evaluate(task) -> List[Dict[str, Any]]:
        family, value = task
        try:
            if family is None:
                rows = _ordering_rows(spec, value)
            elif spec.metric in _METRIC_METHODS:
                rows = [_metric_row(spec, family, value)]
            else:
                rows = _diagnostic_rows(spec, family, value)
        except ConvergenceError as e:
            where = f"{spec.sweep_var}={value:g}" if family is None else f"{family.label()} {spec.sweep_var}={value:g}"
            raise e.at(where) from e
        done = status.point_done()
        logger.info("sweep %s: point %d/%d done", spec.metric, done, len(tasks))
        return rows

    try:
        if spec.workers == 1:
            chunks = [evaluate(task) for task in tasks]
        else:
            with ThreadPoolExecutor(max_workers=spec.workers) as pool:
                chunks = list(pool.map(evaluate, tasks))
    except Exception as e:
        status.finish(e)
        raise
    status.finish()
    frame = pd.DataFrame([row for chunk in chunks for row in chunk])
    return SweepResult(spec, frame)


def sweep_spec_from_dict(data: Mapping[str, Any], families: Sequence[CountFamily],
                         fixed: Mapping[str, Any]) -> SweepSpec:
    """Build a SweepSpec from the ``sweep`` section of a scenario file."""
    known = {"metric", "sweep_var", "grid", "method", "trials", "seed", "workers",
             "include_empty_atom", "kappa", "tol"}
    for key in data:
        if key not in known:
            raise ScenarioError(f"sweep.{key}", "unknown field")
    grid = data.get("grid")
    if isinstance(grid, str):
        grid = parse_grid(grid)
    elif isinstance(grid, Mapping):
        try:
            grid = grid_values(float(grid["start"]), float(grid["stop"]), int(grid["count"]),
                               str(grid.get("scale", "linear")))
        except KeyError as e:
            raise ScenarioError(f"sweep.grid.{e.args[0]}", "missing")
    elif isinstance(grid, (list, tuple)):
        grid = tuple(float(v) for v in grid)
    else:
        raise ScenarioError("sweep.grid", "missing or not a list, range object or grid string")
    fixed = dict(fixed)
    if "kappa" in data:
        fixed["kappa"] = float(data["kappa"])
    try:
        return SweepSpec(
            metric=str(data.get("metric", "capacity")),
            distributions=tuple(families),
            grid=grid,
            sweep_var=str(data.get("sweep_var", "lambda")),
            fixed=fixed,
            method=str(data.get("method", "all")),
            trials=int(data.get("trials", 100_000)),
            seed=int(data.get("seed", 0)),
            include_empty_atom=bool(data.get("include_empty_atom", False)),
            workers=int(data.get("workers", 1)),
            tol=None if data.get("tol") is None else float(data["tol"]),
        )
    except ScenarioError as e:
        raise e.under("sweep")
