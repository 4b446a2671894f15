"""Tests for parameter sweeps."""
import math

import numpy as np
import pandas as pd
import pytest

from src.mudkit.core.sweep import (SweepSpec, SweepStatus, parse_grid, run_sweep,
                                   sweep_spec_from_dict)
from src.mudkit.distributions import CountFamily
from src.mudkit.utils.errors import ConvergenceError, ScenarioError

BINOMIAL = CountFamily("binomial", p=0.5)
NEGBINOMIAL = CountFamily("negbinomial", p=0.5)
POISSON = CountFamily("poisson")


def rows_of(frame, kind):
    return frame[frame["distribution"].str.startswith(f"{kind}(")].reset_index(drop=True)


class TestParseGrid:
    """Grid strings from the command line and scenario files."""

    def test_list(self):
        """Comma lists tolerate spaces."""
        assert parse_grid("2, 4,8") == (2.0, 4.0, 8.0)

    def test_linear_range(self):
        """start:stop:count gives a linear range."""
        assert parse_grid("1:3:3") == (1.0, 2.0, 3.0)

    def test_log_range(self):
        """A trailing log gives a geometric range."""
        assert parse_grid("1:100:3:log") == pytest.approx((1.0, 10.0, 100.0))

    @pytest.mark.parametrize("text", ["a,b", "1:2", "1:2:3:cubic", "0:10:3:log"])
    def test_invalid(self, text):
        """Malformed grids name the grid field."""
        with pytest.raises(ScenarioError) as exc_info:
            parse_grid(text)
        assert exc_info.value.field == "grid"


class TestSweepSpec:
    """Validation of sweep requests."""

    @pytest.mark.parametrize("kwargs,field", [
        ({"metric": "throughput"}, "metric"),
        ({"sweep_var": "p"}, "sweep_var"),
        ({"grid": (4.0, 2.0, 8.0)}, "grid"),
        ({"grid": ()}, "grid"),
        ({"distributions": ()}, "distributions"),
        ({"method": "closed_form"}, "method"),
        ({"metric": "jensen", "method": "monte_carlo"}, "method"),
        ({"fixed": {"colour": 1}}, "colour"),
        ({"workers": 0}, "workers"),
    ])
    def test_invalid(self, kwargs, field):
        """Invalid requests name their field."""
        args = {"metric": "capacity", "distributions": (POISSON,), "grid": (2.0, 4.0)}
        args.update(kwargs)
        with pytest.raises(ScenarioError) as exc_info:
            SweepSpec(**args)
        assert exc_info.value.field == field

    def test_decreasing_grid_is_allowed(self):
        """Strictly decreasing grids are accepted."""
        SweepSpec("capacity", (POISSON,), (8.0, 4.0, 2.0))

    def test_methods(self):
        """all expands to the methods the metric supports."""
        assert SweepSpec("ber", (POISSON,), (2.0,)).methods() == ("closed_form", "quadrature", "monte_carlo")
        assert SweepSpec("ber", (POISSON,), (2.0,), method="quadrature").methods() == ("quadrature",)
        assert SweepSpec("jensen", (POISSON,), (2.0,)).methods() == ()

    def test_from_dict(self):
        """A grid object expands to its points and fixed fields are kept."""
        spec = sweep_spec_from_dict({"metric": "outage", "grid": {"start": 2, "stop": 8, "count": 4}},
                                    [POISSON], {"snr": 5.0})
        assert spec.grid == (2.0, 4.0, 6.0, 8.0)
        assert spec.fixed == {"snr": 5.0}

    def test_from_dict_field_paths(self):
        """Errors from a sweep section are nested under sweep."""
        with pytest.raises(ScenarioError) as exc_info:
            sweep_spec_from_dict({"grid": [1, 2], "colour": 1}, [POISSON], {})
        assert exc_info.value.field == "sweep.colour"
        with pytest.raises(ScenarioError) as exc_info:
            sweep_spec_from_dict({"grid": [1, 2], "metric": "speed"}, [POISSON], {})
        assert exc_info.value.field == "sweep.metric"
        with pytest.raises(ScenarioError) as exc_info:
            sweep_spec_from_dict({"grid": {"start": 1, "count": 3}}, [POISSON], {})
        assert exc_info.value.field == "sweep.grid.stop"


class TestMetricSweeps:
    """Distribution orderings carried through the metrics."""

    def test_capacity_ordering_over_lambda(self):
        """Capacity curves keep the binomial, Poisson, NB order and rise with lambda."""
        families = (BINOMIAL, POISSON, NEGBINOMIAL, CountFamily("binomial", p=0.2),
                    CountFamily("negbinomial", p=0.2))
        spec = SweepSpec("capacity", families, (2.0, 4.0, 8.0, 16.0), method="quadrature", fixed={"snr": 10.0})
        frame = run_sweep(spec).frame
        assert len(frame) == 20
        binomial = rows_of(frame, "binomial")["capacity_quadrature"]
        negbinomial = rows_of(frame, "negbinomial")["capacity_quadrature"]
        poisson = rows_of(frame, "poisson")["capacity_quadrature"]
        binomial_half, binomial_fifth = binomial.iloc[:4], binomial.iloc[4:].reset_index(drop=True)
        nb_half, nb_fifth = negbinomial.iloc[:4], negbinomial.iloc[4:].reset_index(drop=True)
        assert np.all(binomial_half > poisson)
        assert np.all(poisson > nb_half)
        # p = 0.2 curves sit between the p = 0.5 curves and the Poisson limit
        assert np.all(binomial_fifth < binomial_half)
        assert np.all(binomial_fifth > poisson)
        assert np.all(nb_fifth > nb_half)
        assert np.all(nb_fifth < poisson)
        for curve in (binomial_half, binomial_fifth, nb_half, nb_fifth, poisson):
            assert np.all(np.diff(curve) > 0)

    def test_ber_ordering_over_lambda(self):
        """BER curves keep the reverse order and the closed form is empty for Poisson."""
        spec = SweepSpec("ber", (BINOMIAL, POISSON, NEGBINOMIAL), (2.0, 4.0, 8.0, 16.0),
                         method="closed_form", fixed={"snr": 10.0}, include_empty_atom=True)
        frame = run_sweep(spec).frame
        assert math.isnan(rows_of(frame, "poisson")["ber_closed_form"].iloc[0])
        spec = SweepSpec("ber", (BINOMIAL, POISSON, NEGBINOMIAL), (2.0, 4.0, 8.0, 16.0),
                         method="quadrature", fixed={"snr": 10.0}, include_empty_atom=True)
        frame = run_sweep(spec).frame
        binomial = rows_of(frame, "binomial")["ber_quadrature"]
        poisson = rows_of(frame, "poisson")["ber_quadrature"]
        negbinomial = rows_of(frame, "negbinomial")["ber_quadrature"]
        assert np.all(binomial < poisson)
        assert np.all(poisson < negbinomial)
        assert np.all(np.diff(binomial) < 0)

    def test_capacity_is_reported_in_bits(self):
        """Capacity columns follow rate_units."""
        bits = run_sweep(SweepSpec("capacity", (POISSON,), (4.0,), method="quadrature")).frame
        nats = run_sweep(SweepSpec("capacity", (POISSON,), (4.0,), method="quadrature",
                                   fixed={"rate_units": "nats"})).frame
        ratio = bits["capacity_quadrature"].iloc[0] / nats["capacity_quadrature"].iloc[0]
        assert ratio == pytest.approx(1.0 / math.log(2.0))

    def test_ber_ordering_over_rho(self):
        """The BER order holds at every SNR of an rho sweep."""
        spec = SweepSpec("ber", (BINOMIAL, POISSON, NEGBINOMIAL), (1.0, 10.0, 100.0), sweep_var="rho",
                         method="quadrature", fixed={"lambda": 4.0}, include_empty_atom=True)
        frame = run_sweep(spec).frame
        binomial = rows_of(frame, "binomial")["ber_quadrature"]
        poisson = rows_of(frame, "poisson")["ber_quadrature"]
        negbinomial = rows_of(frame, "negbinomial")["ber_quadrature"]
        assert np.all(binomial < poisson)
        assert np.all(poisson < negbinomial)
        assert list(frame.loc[:2, "rho"]) == [1.0, 10.0, 100.0]

    def test_ber_closed_form_column(self):
        """method all writes every column and the closed form matches quadrature."""
        spec = SweepSpec("ber", (BINOMIAL, POISSON), (4.0,), method="all", trials=2_000,
                         include_empty_atom=True)
        frame = run_sweep(spec).frame
        assert list(frame.columns) == ["distribution", "lambda", "mean", "ber_closed_form", "ber_quadrature",
                                       "ber_monte_carlo", "ber_monte_carlo_std_err"]
        binomial, poisson = frame.iloc[0], frame.iloc[1]
        assert binomial["ber_closed_form"] == pytest.approx(binomial["ber_quadrature"], rel=1e-8)
        assert math.isnan(poisson["ber_closed_form"])

    def test_negative_binomial_failures_sweep(self):
        """r sweeps report the mean delay and a modest capacity gain."""
        spec = SweepSpec("capacity", (NEGBINOMIAL,), (8.0, 16.0, 32.0), sweep_var="r",
                         method="quadrature", fixed={"snr": 1.0})
        frame = run_sweep(spec).frame
        assert list(frame["mean_delay"]) == pytest.approx([16.0, 32.0, 64.0])
        gain = frame["capacity_quadrature"].iloc[2] / frame["capacity_quadrature"].iloc[0] - 1.0
        assert 0.10 <= gain <= 0.35

    def test_user_population_sweep(self):
        """Binomial capacity falls toward Poisson as L grows at fixed mean."""
        spec = SweepSpec("capacity", (BINOMIAL,), (4.0, 8.0, 16.0, 32.0), sweep_var="L",
                         method="quadrature", fixed={"lambda": 4.0})
        frame = run_sweep(spec).frame
        assert list(frame["mean"]) == pytest.approx([4.0] * 4)
        # Binomial(L, 4/L) decreases toward Poisson(4) as L grows
        assert np.all(np.diff(frame["capacity_quadrature"]) < 0)

    def test_rate_sweep_needs_lambda(self):
        """R sweeps over templates need a fixed lambda."""
        spec = SweepSpec("outage", (POISSON,), (0.5, 1.0), sweep_var="R")
        with pytest.raises(ScenarioError) as exc_info:
            run_sweep(spec)
        assert exc_info.value.field == "lambda"

    def test_monte_carlo_agrees_with_closed_form(self):
        """Simulated outage matches the closed form in a sweep."""
        spec = SweepSpec("outage", (POISSON,), (2.0, 4.0), trials=20_000, seed=3)
        frame = run_sweep(spec).frame
        error = (frame["outage_monte_carlo"] - frame["outage_closed_form"]).abs()
        assert np.all(error <= 5.0 * frame["outage_monte_carlo_std_err"] + 1e-12)

    def test_worker_count_does_not_change_rows(self):
        """One and four workers produce the same frame."""
        args = dict(metric="capacity", distributions=(BINOMIAL, POISSON), grid=(2.0, 4.0, 8.0),
                    trials=3_000, seed=5)
        one = run_sweep(SweepSpec(workers=1, **args)).frame
        four = run_sweep(SweepSpec(workers=4, **args)).frame
        pd.testing.assert_frame_equal(one, four)


class TestDiagnosticSweeps:
    """Ordering, Le Cam, scaling, Jensen and regvar rows."""

    def test_ordering_rows(self):
        """Adjacent pairs are compared at every grid point."""
        spec = SweepSpec("ordering", (NEGBINOMIAL, POISSON, BINOMIAL), (4.0, 8.0))
        frame = run_sweep(spec).frame
        assert list(frame.columns) == ["first", "second", "lambda", "holds", "max_violation", "witness_z"]
        assert len(frame) == 4
        assert frame["holds"].all()

    def test_ordering_reversed_fails(self):
        """A reversed pair fails with a witness."""
        spec = SweepSpec("ordering", (BINOMIAL, NEGBINOMIAL), (4.0,))
        row = run_sweep(spec).frame.iloc[0]
        assert not row["holds"]
        assert 0.0 < row["witness_z"] < 1.0

    def test_lecam_rows(self):
        """Le Cam rows grow L with lambda and stay below the bound."""
        spec = SweepSpec("lecam", (CountFamily("pb", p=0.2, spread=0.5),), (2.0, 4.0))
        frame = run_sweep(spec).frame
        assert list(frame["L"]) == [10, 20]
        assert np.all(frame["l1_distance"] < frame["lecam_bound"])

    def test_lecam_needs_pb(self):
        """Le Cam rows need Poisson-binomial families."""
        with pytest.raises(ScenarioError):
            run_sweep(SweepSpec("lecam", (POISSON,), (2.0,)))

    def test_scaling_rows(self):
        """Scaling rows carry the gap and both conditions."""
        frame = run_sweep(SweepSpec("scaling", (POISSON,), (100.0, 1000.0))).frame
        for column in ("capacity", "gap", "normalized_gap", "p0_loglog", "var_ratio"):
            assert column in frame.columns
        assert frame["var_ratio"].iloc[1] == pytest.approx(1e-3)

    def test_jensen_rows(self):
        """Jensen rows are non-negative."""
        frame = run_sweep(SweepSpec("jensen", (BINOMIAL, POISSON), (4.0, 8.0))).frame
        assert np.all(frame[["cap_gap", "ber_gap", "outage_gap"]].to_numpy() >= -1e-9)

    def test_regvar_rows(self):
        """regvar rows are sorted by u and meet the target."""
        spec = SweepSpec("regvar", (), (1e-4, 1e-5, 1e-6), fixed={"snr": 10.0})
        frame = run_sweep(spec).frame
        assert list(frame["u"]) == [1e-6, 1e-5, 1e-4]
        assert (frame["target"] == 9.0).all()
        assert frame["exponent"].to_numpy() == pytest.approx(9.0, rel=1e-3)


class TestSweepStatus:
    """Progress bookkeeping shared with callers."""

    def test_completed_run(self):
        """A finished run reports completion, counts and duration."""
        status = SweepStatus()
        run_sweep(SweepSpec("outage", (POISSON, BINOMIAL), (2.0, 4.0)), status)
        info = status.get_status()
        assert info["status"] == "completed"
        assert info["done"] == info["total"] == 4
        assert info["error"] is None
        assert info["duration"] >= 0.0

    def test_idle(self):
        """A fresh status is idle without a duration."""
        info = SweepStatus().get_status()
        assert info["status"] == "idle"
        assert info["duration"] is None

    def test_convergence_failure_is_tagged(self, mocker):
        """A failing point is named in the error and the status is failed."""
        mocker.patch("src.mudkit.core.sweep.ergodic_capacity",
                     side_effect=ConvergenceError("quadrature did not converge"))
        status = SweepStatus()
        with pytest.raises(ConvergenceError) as exc_info:
            run_sweep(SweepSpec("capacity", (POISSON,), (2.0,), method="quadrature"), status)
        assert exc_info.value.where == "poisson lambda=2"
        assert "(at poisson lambda=2)" in str(exc_info.value)
        assert status.get_status()["status"] == "failed"
