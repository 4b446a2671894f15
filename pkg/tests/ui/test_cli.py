"""Tests for the mudkit command line."""
import io
import logging
from dataclasses import replace

import pandas as pd
import pytest

from src.mudkit.core import montecarlo
from src.mudkit.ui.cli import EXIT_INVALID, EXIT_NO_CONVERGENCE, EXIT_OK, main, parse_dist
from src.mudkit.utils.config import DEFAULT_SETTINGS
from src.mudkit.utils.errors import ConvergenceError, ScenarioError


def read_csv_output(text):
    return pd.read_csv(io.StringIO(text))


class TestParseDist:
    """--dist flag syntax."""

    def test_template(self):
        """A shape-only flag yields a template without an explicit member."""
        family = parse_dist("binomial:p=0.5")
        assert family.kind == "binomial"
        assert family.p == 0.5
        assert family.explicit is None

    def test_fixed_distribution(self):
        """A flag with every parameter yields a fixed distribution."""
        family = parse_dist("binomial:L=8,p=0.5")
        assert family.realise().mean == 4.0

    def test_probability_list(self):
        """Poisson-binomial probabilities are separated by slashes."""
        family = parse_dist("pb:probs=0.1/0.2/0.3")
        assert family.realise().size == 3

    def test_bad_value(self):
        """A non-numeric value is reported under the dist field."""
        with pytest.raises(ScenarioError) as exc_info:
            parse_dist("poisson:lambda=lots")
        assert exc_info.value.field == "dist.lambda"

    def test_missing_equals(self):
        """A parameter without a value is rejected."""
        with pytest.raises(ScenarioError):
            parse_dist("poisson:lambda")


class TestValidate:
    """mudkit validate."""

    def test_valid_file(self, write_scenario, binomial_scenario_doc, capsys):
        """A valid file prints its distribution, mean and templates."""
        code = main(["validate", write_scenario(binomial_scenario_doc)])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "distribution: binomial(L=8,p=0.5)" in out
        assert "mean=4" in out
        assert "template: binomial(L=8,p=0.5)" in out

    def test_invalid_probability(self, write_scenario, caplog):
        """An out-of-range probability exits 2 naming the dotted field."""
        path = write_scenario({"scenario": {"count": {"kind": "binomial", "L": 8, "p": 1.5}}})
        with caplog.at_level(logging.ERROR):
            code = main(["validate", path])
        assert code == EXIT_INVALID
        assert "scenario.count.success" in caplog.text

    def test_too_many_users(self, write_scenario, caplog):
        """Poisson-binomial vectors above the length cap are rejected."""
        path = write_scenario({"scenario": {"count": {"kind": "pb", "probs": [1e-5] * 100_000}}})
        with caplog.at_level(logging.ERROR):
            code = main(["validate", path])
        assert code == EXIT_INVALID
        assert "L <= 10000" in caplog.text

    def test_syntax_error(self, write_scenario, caplog):
        """JSON syntax errors report the line."""
        path = write_scenario('{"scenario": {"snr": }}')
        with caplog.at_level(logging.ERROR):
            assert main(["validate", path]) == EXIT_INVALID
        assert "line 1" in caplog.text

    def test_no_file(self):
        """validate without a file exits 2."""
        assert main(["validate"]) == EXIT_INVALID


class TestSweepCommand:
    """mudkit sweep."""

    def test_writes_csv_file(self, tmp_path):
        """--out writes one row per distribution and grid point."""
        out = tmp_path / "fig2.csv"
        code = main(["sweep", "--metric", "capacity", "--dist", "binomial:p=0.5", "--dist", "poisson",
                     "--grid", "2,4", "--method", "quadrature", "--out", str(out)])
        assert code == EXIT_OK
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["distribution", "lambda", "mean", "capacity_quadrature"]
        assert len(frame) == 4

    def test_from_scenario_file(self, write_scenario, capsys):
        """The sweep section of a file drives the sweep."""
        path = write_scenario({
            "scenario": {"snr": 10, "rate": 1},
            "distributions": [{"kind": "poisson"}],
            "sweep": {"metric": "outage", "grid": [2, 4, 8], "method": "closed_form"},
        })
        assert main(["sweep", "--scenario", path]) == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert list(frame["lambda"]) == [2.0, 4.0, 8.0]
        assert frame["outage_closed_form"].is_monotonic_decreasing

    def test_flags_override_file(self, write_scenario, capsys):
        """--grid replaces the file's grid."""
        path = write_scenario({
            "distributions": [{"kind": "poisson"}],
            "sweep": {"metric": "outage", "grid": [2, 4, 8], "method": "closed_form"},
        })
        assert main(["sweep", "--scenario", path, "--grid", "16"]) == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert list(frame["lambda"]) == [16.0]

    def test_ber_over_high_snr(self, capsys):
        """A BER sweep up to 30 dB writes finite closed-form values for binomial and NB counts."""
        code = main(["sweep", "--metric", "ber", "--sweep-var", "rho", "--lambda", "4", "--grid", "10,100,1000",
                     "--dist", "binomial:p=0.2", "--dist", "nb:p=0.5", "--method", "closed_form"])
        assert code == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert len(frame) == 6
        assert frame["ber_closed_form"].notna().all()
        assert (frame["ber_closed_form"] > 0).all()

    def test_grid_is_required(self):
        """A sweep without a grid exits 2."""
        assert main(["sweep", "--dist", "poisson"]) == EXIT_INVALID

    def test_analytic_metric_rejects_monte_carlo(self):
        """Analytic diagnostics refuse the monte_carlo method."""
        code = main(["sweep", "--metric", "jensen", "--dist", "poisson", "--grid", "4", "--method", "monte_carlo"])
        assert code == EXIT_INVALID

    def test_non_convergence_exit_code(self, mocker, caplog):
        """Quadrature failure exits 3 and names the failing point."""
        mocker.patch("src.mudkit.core.sweep.ergodic_capacity",
                     side_effect=ConvergenceError("quadrature did not converge"))
        with caplog.at_level(logging.ERROR):
            code = main(["sweep", "--metric", "capacity", "--dist", "poisson", "--grid", "2",
                         "--method", "quadrature"])
        assert code == EXIT_NO_CONVERGENCE
        assert "poisson lambda=2" in caplog.text

    def test_logs_points_and_duration(self, caplog):
        """A finished sweep reports how many points ran and how long it took."""
        with caplog.at_level(logging.INFO):
            code = main(["sweep", "--metric", "outage", "--dist", "poisson", "--grid", "2,4,8",
                         "--method", "closed_form"])
        assert code == EXIT_OK
        assert "swept 3 points in" in caplog.text

    def test_failure_logs_progress(self, mocker, caplog):
        """A sweep stopped by non-convergence says how far it got."""
        mocker.patch("src.mudkit.core.sweep.ergodic_capacity",
                     side_effect=ConvergenceError("quadrature did not converge"))
        with caplog.at_level(logging.WARNING):
            code = main(["sweep", "--metric", "capacity", "--dist", "poisson", "--grid", "2,4",
                         "--method", "quadrature"])
        assert code == EXIT_NO_CONVERGENCE
        assert "sweep stopped after 0 of 2 points" in caplog.text


class TestMcCommand:
    """mudkit mc."""

    def test_summary(self, write_scenario, binomial_scenario_doc, capsys):
        """The summary table has one row with the file's trials and seed."""
        assert main(["mc", "--scenario", write_scenario(binomial_scenario_doc)]) == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert list(frame.columns) == ["distribution", "n_trials", "seed", "outage", "outage_std_err",
                                       "capacity", "capacity_std_err", "ber", "ber_std_err"]
        assert frame.loc[0, "n_trials"] == 2000
        assert frame.loc[0, "seed"] == 11

    def test_output_is_identical_for_any_worker_count(self, write_scenario, binomial_scenario_doc,
                                                      tmp_path, mocker):
        """One and four workers write byte-identical CSV."""
        mocker.patch.object(montecarlo, "get_settings",
                            return_value=replace(DEFAULT_SETTINGS, mc_block_size=300))
        path = write_scenario(binomial_scenario_doc)
        one, four = tmp_path / "one.csv", tmp_path / "four.csv"
        assert main(["mc", "--scenario", path, "--workers", "1", "--out", str(one)]) == EXIT_OK
        assert main(["mc", "--scenario", path, "--workers", "4", "--out", str(four)]) == EXIT_OK
        assert one.read_bytes() == four.read_bytes()

    def test_count_table(self, write_scenario, binomial_scenario_doc, capsys):
        """The count histogram adds up to the number of trials."""
        path = write_scenario(binomial_scenario_doc)
        assert main(["mc", "--scenario", path, "--table", "counts"]) == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert frame["count"].sum() == 2000

    def test_dist_flags(self, capsys):
        """--dist with --lambda runs without a scenario file."""
        code = main(["mc", "--dist", "poisson", "--lambda", "3", "--trials", "500", "--seed", "1"])
        assert code == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert frame.loc[0, "distribution"] == "poisson(lambda=3)"

    def test_threshold_mode(self, capsys):
        """--users with --threshold simulates every user's test."""
        code = main(["mc", "--users", "4", "--threshold", "0.693147", "--trials", "1000",
                     "--table", "activity"])
        assert code == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert list(frame["user"]) == [0, 1, 2, 3]

    def test_activity_needs_threshold_mode(self, write_scenario, binomial_scenario_doc):
        """The activity table is only available in threshold mode."""
        path = write_scenario(binomial_scenario_doc)
        assert main(["mc", "--scenario", path, "--table", "activity"]) == EXIT_INVALID

    def test_template_needs_lambda(self):
        """A template without --lambda exits 2."""
        assert main(["mc", "--dist", "binomial:p=0.5"]) == EXIT_INVALID

    def test_lambda_conflicts_with_file_count(self, write_scenario, binomial_scenario_doc, caplog):
        """--lambda without --dist is rejected when the scenario file fixes the count."""
        path = write_scenario(binomial_scenario_doc)
        with caplog.at_level(logging.ERROR):
            code = main(["mc", "--scenario", path, "--lambda", "6"])
        assert code == EXIT_INVALID
        assert "lambda" in caplog.text

    def test_lambda_conflicts_with_full_dist(self, caplog):
        """--lambda is rejected when --dist already fixes every parameter."""
        with caplog.at_level(logging.ERROR):
            code = main(["mc", "--dist", "binomial:L=8,p=0.5", "--lambda", "3", "--trials", "100"])
        assert code == EXIT_INVALID
        assert "fully specified" in caplog.text

    def test_lambda_with_dist_overrides_file(self, write_scenario, binomial_scenario_doc, capsys):
        """--dist with --lambda replaces the file's count."""
        path = write_scenario(binomial_scenario_doc)
        code = main(["mc", "--scenario", path, "--dist", "poisson", "--lambda", "6"])
        assert code == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert frame.loc[0, "distribution"] == "poisson(lambda=6)"


class TestOtherCommands:
    """ordering, lecam and diag."""

    def test_ordering(self, capsys):
        """Equal-mean NB, Poisson and binomial are ordered pairwise."""
        code = main(["ordering", "--dist", "nb:p=0.5", "--dist", "poisson", "--dist", "binomial:p=0.5",
                     "--lambda", "4"])
        assert code == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert len(frame) == 2
        assert frame["holds"].all()

    def test_ordering_needs_two(self):
        """ordering with a single distribution exits 2."""
        assert main(["ordering", "--dist", "poisson", "--lambda", "4"]) == EXIT_INVALID

    def test_lecam(self, capsys):
        """lecam reports the bound, the distance below it and the capacity gap."""
        assert main(["lecam", "--probs", "0.1,0.2,0.05", "--rho", "10"]) == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        row = frame.iloc[0]
        assert row["L"] == 3
        assert row["lecam_bound"] == pytest.approx(0.105)
        assert row["l1_distance"] < row["lecam_bound"]
        assert row["capacity_gap"] > 0.0

    def test_lecam_rejects_zero(self):
        """Zero probabilities are rejected."""
        assert main(["lecam", "--probs", "0.0,0.5"]) == EXIT_INVALID

    def test_diag_jensen(self, capsys):
        """diag jensen writes a residual that falls from 16 to 64."""
        assert main(["diag", "jensen", "--grid", "16,64"]) == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert list(frame["lambda"]) == [16.0, 64.0]
        assert frame["normalized_residual"].iloc[0] > frame["normalized_residual"].iloc[1]

    def test_diag_regvar(self, capsys):
        """diag regvar extrapolates to the eta rho - 1 exponent."""
        assert main(["diag", "regvar", "--rho", "10"]) == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert list(frame.columns) == ["u", "exponent", "extrapolated", "target"]
        assert frame["extrapolated"].iloc[0] == pytest.approx(9.0, rel=0.01)

    def test_diag_scaling(self, capsys):
        """diag scaling writes the gap and the scaling conditions."""
        assert main(["diag", "scaling", "--dist", "poisson", "--grid", "100,1000"]) == EXIT_OK
        frame = read_csv_output(capsys.readouterr().out)
        assert {"normalized_gap", "p0_loglog", "var_ratio"} <= set(frame.columns)

    def test_unknown_command_exits_through_argparse(self):
        """Unknown subcommands exit 2 through argparse."""
        with pytest.raises(SystemExit) as exc_info:
            main(["plot"])
        assert exc_info.value.code == 2
