"""Command-line front end.

Every subcommand writes a CSV table (``--out``, stdout by default) and logs
progress to stderr. Exit codes: 0 success, 2 invalid scenario or arguments,
3 numerical non-convergence.
"""
import argparse
import math
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from ..core import diagnostics, montecarlo, ordering
from ..core.metrics import Scenario
from ..core.sweep import METHOD_CHOICES, METRICS, SWEEP_VARS, SweepSpec, SweepStatus, parse_grid, run_sweep
from ..distributions import CountFamily, PoissonBinomial, describe, family_from_dict
from ..storage.csv_handler import STDOUT, save_frame_to_csv
from ..storage.scenario_file import ScenarioFile, load_scenario_file
from ..utils.errors import ConvergenceError, MudkitError, ScenarioError
from ..utils.log import configure_logging, get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_CONVERGENCE = 3

EPILOG = """
Examples:
  # Capacity of four count laws against lambda, log grid
  mudkit sweep --metric capacity --dist binomial:p=0.5 --dist poisson --dist nb:p=0.5 --grid 2:64:6:log

  # Everything from a scenario file, CSV to a file
  mudkit sweep --scenario fig2.json --out fig2.csv

  # Monte-Carlo check of a scenario, reproducible for any --workers
  mudkit mc --scenario binomial.json --trials 1000000 --seed 7 --workers 4

  # Le Cam bound against the exact L1 distance
  mudkit lecam --probs 0.1,0.2,0.05
"""


def parse_dist(text: str) -> CountFamily:
    """``kind[:key=value,...]``, e.g. ``binomial:p=0.5`` or ``binomial:L=8,p=0.5``.

    List values (PB ``probs``) are separated by ``/``.
    """
    kind, _, rest = text.partition(":")
    data: Dict[str, Any] = {"kind": kind}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ScenarioError("dist", f"expected key=value, got {item!r}")
        try:
            data[key.strip()] = ([float(v) for v in value.split("/")] if "/" in value or key.strip() == "probs"
                                 else float(value))
        except ValueError:
            raise ScenarioError(f"dist.{key.strip()}", f"not a number: {value!r}")
    return family_from_dict(data)


def parse_probs(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ScenarioError("probs", f"cannot parse {text!r}; use comma-separated probabilities")


def _load(args) -> Optional[ScenarioFile]:
    return load_scenario_file(args.scenario) if getattr(args, "scenario", None) else None


def _fixed_overrides(args) -> Dict[str, Any]:
    mapping = {"rho": "snr", "rate": "rate", "alpha": "ber_alpha", "eta": "ber_eta",
               "ber_model": "ber_model", "rate_units": "rate_units", "lam": "lambda"}
    return {target: getattr(args, name) for name, target in mapping.items()
            if getattr(args, name, None) is not None}


def _families(args, loaded: Optional[ScenarioFile]) -> tuple:
    if getattr(args, "dist", None):
        return tuple(parse_dist(text) for text in args.dist)
    return loaded.families if loaded else ()


def _scenario_fields(fixed: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in fixed.items() if k not in ("lambda", "kappa")}


def _single_scenario(args, loaded: Optional[ScenarioFile]) -> Scenario:
    """The scenario of the file, or the first --dist realised at --lambda; flags override."""
    fixed = dict(loaded.fixed) if loaded else {}
    fixed.update(_fixed_overrides(args))
    families = _families(args, loaded)
    if getattr(args, "dist", None) or loaded is None or loaded.scenario is None:
        if not families:
            raise ScenarioError("dist", "give a scenario file with a count or at least one --dist")
        family = families[0]
        if family.explicit is not None and getattr(args, "lam", None) is not None:
            raise ScenarioError("lambda", f"{family.label()} is fully specified; --lambda applies to templates only")
        count = family.realise(fixed.get("lambda"))
    else:
        if getattr(args, "lam", None) is not None:
            raise ScenarioError("lambda", "the scenario file fixes the count; pass --dist to realise a template at --lambda")
        count = loaded.scenario.count
    return Scenario(count, **_scenario_fields(fixed))


def _write(frame: pd.DataFrame, args) -> None:
    save_frame_to_csv(frame, args.out)
    if args.out != STDOUT:
        logger.info("wrote %d rows to %s", len(frame), args.out)


def cmd_sweep(args) -> int:
    loaded = _load(args)
    fixed = dict(loaded.fixed) if loaded else {}
    fixed.update(_fixed_overrides(args))
    families = _families(args, loaded)
    overrides: Dict[str, Any] = {"fixed": fixed, "distributions": families}
    for name in ("metric", "sweep_var", "method", "trials", "seed", "workers"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.grid is not None:
        overrides["grid"] = parse_grid(args.grid)
    if args.include_empty_atom:
        overrides["include_empty_atom"] = True
    if loaded and loaded.sweep:
        spec = replace(loaded.sweep, **overrides)
    else:
        if "grid" not in overrides:
            raise ScenarioError("grid", "give --grid or a scenario file with a sweep section")
        overrides.setdefault("metric", "capacity")
        spec = SweepSpec(**overrides)
    status = SweepStatus()
    try:
        result = run_sweep(spec, status)
    except ConvergenceError:
        info = status.get_status()
        logger.warning("sweep stopped after %d of %d points", info["done"], info["total"])
        raise
    info = status.get_status()
    logger.info("swept %d points in %.3fs", info["done"], info["duration"])
    _write(result.frame, args)
    return EXIT_OK


def cmd_validate(args) -> int:
    path = args.file or args.scenario
    if not path:
        raise ScenarioError("file", "no scenario file given")
    loaded = load_scenario_file(path)
    lines = [f"file: {loaded.path}"]
    if loaded.scenario is not None:
        s = loaded.scenario
        info = describe(s.count)
        lines += [
            f"distribution: {info['distribution']}",
            f"mean={info['mean']:.12g}",
            f"variance={info['variance']:.12g}",
            f"prob_empty={info['prob_empty']:.12g}",
            f"snr={s.snr:g} rate={s.rate:g} {s.rate_units} ber_model={s.ber_model} "
            f"alpha={s.ber_alpha:g} eta={s.ber_eta:g}",
        ]
        mean = info["mean"]
        if mean > math.e:
            lines.append(f"p0_loglog={info['prob_empty'] * math.log(math.log(mean)):.6g}")
        if mean > 0:
            lines.append(f"var_ratio={info['variance'] / (mean * mean):.6g}")
    for family in loaded.families:
        lines.append(f"template: {family.label()}")
    if loaded.sweep is not None:
        sweep = loaded.sweep
        lines.append(f"sweep: {sweep.metric} over {sweep.sweep_var}, {len(sweep.grid)} points, "
                     f"method={sweep.method}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_ordering(args) -> int:
    loaded = _load(args)
    families = _families(args, loaded)
    if len(families) < 2:
        raise ScenarioError("dist", "ordering needs at least two distributions")
    fixed = dict(loaded.fixed) if loaded else {}
    fixed.update(_fixed_overrides(args))
    counts = [family.realise(fixed.get("lambda")) for family in families]
    rows = []
    for first, second in zip(counts, counts[1:]):
        verdict = ordering.lt_order_check(first, second, args.grid_size)
        rows.append({"first": first.label(), "second": second.label(), "first_mean": first.mean,
                     "second_mean": second.mean, "holds": verdict.holds,
                     "max_violation": verdict.max_violation, "witness_z": verdict.witness_z})
    _write(pd.DataFrame(rows), args)
    return EXIT_OK


def cmd_lecam(args) -> int:
    if args.probs:
        probs = parse_probs(args.probs)
    else:
        loaded = _load(args)
        if loaded is None or not isinstance(getattr(loaded.scenario, "count", None), PoissonBinomial):
            raise ScenarioError("probs", "give --probs or a scenario file with a pb count")
        probs = list(loaded.scenario.count.probs)
    row = {"L": len(probs), "mean": sum(probs),
           "l1_distance": ordering.pb_poisson_l1_distance(probs),
           "lecam_bound": ordering.lecam_bound(probs)}
    if args.rho is not None:
        gap, witness = diagnostics.capacity_gap_pb_poisson(probs, args.rho)
        row.update({"capacity_gap": gap, "gap_witness": witness})
    _write(pd.DataFrame([row]), args)
    return EXIT_OK


def cmd_mc(args) -> int:
    loaded = _load(args)
    options = dict(loaded.mc) if loaded else {}
    for name in ("trials", "seed", "workers"):
        if getattr(args, name) is not None:
            options[name] = getattr(args, name)
    if args.include_empty_atom is not None:
        options["include_empty_atom"] = args.include_empty_atom
    threshold_mode = args.threshold is not None or args.probs is not None
    if threshold_mode:
        fields = dict(loaded.fixed) if loaded else {}
        fields.update(_fixed_overrides(args))
        # placeholder count, replaced by the simulated Poisson-binomial law
        scenario = Scenario(PoissonBinomial((0.5,)), **_scenario_fields(fields))
    else:
        scenario = _single_scenario(args, loaded)
    config = montecarlo.TrialConfig(
        scenario,
        n_trials=int(options.get("trials", 100_000)),
        seed=int(options.get("seed", 0)),
        workers=int(options.get("workers", 1)),
        include_empty_atom=bool(options.get("include_empty_atom", True)),
    )
    if args.probs is not None:
        report = montecarlo.run_threshold_mode(config, probs=parse_probs(args.probs))
    elif args.threshold is not None:
        report = montecarlo.run_threshold_mode(config, users=args.users, threshold=args.threshold)
    else:
        report = montecarlo.run(config)

    if args.table == "counts":
        frame = report.empirical_count_pmf
    elif args.table == "gain_cdf":
        frame = report.empirical_gain_cdf
    elif args.table == "activity":
        if report.activity_rate is None:
            raise ScenarioError("table", "per-user activity is only recorded in threshold mode")
        frame = report.activity_rate
    else:
        frame = report.to_frame()
        if config.scenario.rate_units == "bits":
            frame["capacity"] /= math.log(2.0)
            frame["capacity_std_err"] /= math.log(2.0)
        frame.insert(0, "distribution", config.scenario.count.label() if not threshold_mode else "threshold")
    _write(frame, args)
    return EXIT_OK


def cmd_diag_scaling(args) -> int:
    loaded = _load(args)
    families = _families(args, loaded)
    if not families:
        raise ScenarioError("dist", "give at least one --dist")
    grid = parse_grid(args.grid)
    frames = [diagnostics.capacity_scaling_gap(family, args.rho, grid) for family in families]
    conditions = [ordering.scaling_conditions(family, grid) for family in families]
    frame = pd.concat(frames, ignore_index=True)
    cond = pd.concat(conditions, ignore_index=True)
    frame["p0_loglog"] = cond["p0_loglog"]
    frame["var_ratio"] = cond["var_ratio"]
    _write(frame, args)
    return EXIT_OK


def cmd_diag_jensen(args) -> int:
    loaded = _load(args)
    families = _families(args, loaded) or (CountFamily("poisson"),)
    grid = parse_grid(args.grid)
    frames = [diagnostics.jensen_tightness_diagnostic(args.rho, args.alpha, args.eta, grid,
                                                      args.ber_model, family) for family in families]
    _write(pd.concat(frames, ignore_index=True), args)
    return EXIT_OK


def cmd_diag_regvar(args) -> int:
    grid = parse_grid(args.grid)
    frame = diagnostics.regvar_profile(args.ber_model, args.rho, args.eta, grid, args.kappa)
    exponent = diagnostics.regvar_exponent(args.ber_model, args.rho, args.eta, grid, args.kappa)
    target = diagnostics.regvar_target(args.ber_model, args.eta * args.rho)
    frame = frame.sort_values("u", kind="stable").reset_index(drop=True)
    frame["extrapolated"] = exponent
    frame["target"] = target
    logger.info("regular-variation exponent %.6g (limit %.6g)", exponent, target)
    _write(frame, args)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", metavar="FILE", help="JSON scenario file; flags override its fields")
    parser.add_argument("--out", default=STDOUT, metavar="FILE|-", help="CSV destination (default: stdout)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def _add_scenario_flags(parser: argparse.ArgumentParser, defaults: bool = False) -> None:
    parser.add_argument("--dist", action="append", metavar="KIND[:k=v,...]",
                        help="distribution or template, e.g. binomial:p=0.5 (repeatable)")
    parser.add_argument("--lambda", dest="lam", type=float, help="mean number of active users")
    parser.add_argument("--rho", type=float, default=10.0 if defaults else None, help="average SNR (linear)")
    parser.add_argument("--rate", type=float, help="target rate R of the outage metric")
    parser.add_argument("--alpha", type=float, default=0.5 if defaults else None, help="BER model prefactor")
    parser.add_argument("--eta", type=float, default=1.0 if defaults else None, help="BER model exponent scale")
    parser.add_argument("--ber-model", choices=("exponential", "q"),
                        default="exponential" if defaults else None)
    parser.add_argument("--rate-units", choices=("bits", "nats"),
                        help="units of R and of capacity columns (default bits)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mudkit",
        description="mudkit - multi-user diversity metrics with a random number of users",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="sweep a metric over a grid, one row per (distribution, point)")
    _add_common(p)
    _add_scenario_flags(p)
    p.add_argument("--metric", choices=METRICS)
    p.add_argument("--grid", help="'a,b,c' or 'start:stop:count[:linear|log]'")
    p.add_argument("--sweep-var", choices=SWEEP_VARS)
    p.add_argument("--method", choices=METHOD_CHOICES)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--include-empty-atom", action="store_true",
                   help="count P_e(0) Pr[N=0] in the BER columns")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="parse a scenario file and print what it describes")
    p.add_argument("file", nargs="?")
    p.add_argument("--scenario", metavar="FILE")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("ordering", help="Laplace-transform order of consecutive distributions")
    _add_common(p)
    _add_scenario_flags(p)
    p.add_argument("--grid-size", type=int, default=None, help="points of the z grid (default 1001)")
    p.set_defaults(func=cmd_ordering)

    p = sub.add_parser("lecam", help="exact L1 distance to Poisson vs Le Cam's bound")
    _add_common(p)
    p.add_argument("--probs", help="comma-separated per-user probabilities")
    p.add_argument("--rho", type=float, help="also report the capacity gap at this SNR")
    p.set_defaults(func=cmd_lecam)

    p = sub.add_parser("mc", help="Monte-Carlo estimates with standard errors")
    _add_common(p)
    _add_scenario_flags(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--include-empty-atom", dest="include_empty_atom", action="store_true", default=None)
    p.add_argument("--exclude-empty-atom", dest="include_empty_atom", action="store_false")
    p.add_argument("--users", type=int, help="threshold mode: number of users L")
    p.add_argument("--threshold", type=float, help="threshold mode: interference threshold Q")
    p.add_argument("--probs", help="threshold mode: per-user pass probabilities")
    p.add_argument("--table", choices=("summary", "counts", "gain_cdf", "activity"), default="summary")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("diag", help="asymptotic diagnostics")
    diag = p.add_subparsers(dest="diagnostic", required=True)
    d = diag.add_parser("scaling", help="capacity scaling residual and its conditions")
    _add_common(d)
    _add_scenario_flags(d, defaults=True)
    d.add_argument("--grid", default="100,1000,10000")
    d.set_defaults(func=cmd_diag_scaling)
    d = diag.add_parser("jensen", help="normalized Jensen residual of the BER")
    _add_common(d)
    _add_scenario_flags(d, defaults=True)
    d.add_argument("--grid", default="4,16,64,256")
    d.set_defaults(func=cmd_diag_jensen)
    d = diag.add_parser("regvar", help="regular-variation exponent of the BER kernel")
    _add_common(d)
    _add_scenario_flags(d, defaults=True)
    d.add_argument("--grid", default="1e-6,1e-5,1e-4,1e-3")
    d.add_argument("--kappa", type=float, default=2.0)
    d.set_defaults(func=cmd_diag_regvar)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(getattr(args, "verbose", False))
    try:
        return args.func(args)
    except ScenarioError as e:
        logger.error("%s", e)
        return EXIT_INVALID
    except ConvergenceError as e:
        logger.error("no convergence: %s", e)
        return EXIT_NO_CONVERGENCE
    except MudkitError as e:
        logger.error("%s", e)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
