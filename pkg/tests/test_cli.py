import json
import subprocess
import sys

import numpy as np
import pytest

from multigini import gen_spike_cube, pca_instability_fixture, write_sample_csv


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "multigini", *args],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="module")
def spike_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "spike.csv"
    write_sample_csv(gen_spike_cube(0.2, 3), path, ["m1", "m2", "m3"], rows=125)
    return str(path)


@pytest.fixture(scope="module")
def fixture_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "design.csv"
    write_sample_csv(pca_instability_fixture().sample, path, ["a", "b"])
    return str(path)


@pytest.fixture(scope="module")
def grouped_csv(tmp_path_factory):
    rng = np.random.default_rng(71)
    path = tmp_path_factory.mktemp("data") / "panel.csv"
    lines = ["name,country,cap,emp,rev"]
    for group, count in (("US", 30), ("JP", 20), ("DE", 1)):
        for i in range(count):
            cap, emp, rev = (float(v) for v in rng.lognormal(0.0, 0.7, 3) + 0.01)
            lines.append(f"c{group}{i},{group},{cap!r},{emp!r},{rev!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


class TestExitCodes:
    def test_missing_file_is_data_error(self):
        proc = run_cli("gini", "--input", "missing.csv", "--columns", "a")
        assert proc.returncode == 2
        assert "missing.csv" in proc.stderr

    def test_unknown_flag_is_usage_error(self, spike_csv):
        proc = run_cli("gini", "--input", spike_csv, "--columns", "m1", "--bogus")
        assert proc.returncode == 1

    def test_no_command_is_usage_error(self):
        assert run_cli().returncode == 1

    def test_invalid_p_is_data_error(self, spike_csv):
        proc = run_cli("gini", "--input", spike_csv, "--columns", "m1,m2,m3", "--p", "0.5")
        assert proc.returncode == 2

    def test_singular_covariance_is_numerical_error(self, tmp_path_factory):
        path = tmp_path_factory.mktemp("data") / "flat.csv"
        path.write_text("name,group,a,b\nx,g,1,2\ny,g,2,4\nz,g,3,6\n", encoding="utf-8")
        proc = run_cli("whiten", "--input", str(path), "--columns", "a,b")
        assert proc.returncode == 3
        assert "eigenvalue" in proc.stderr


class TestGiniCommand:
    def test_pipeline_value(self, spike_csv):
        proc = run_cli(
            "gini", "--input", spike_csv, "--columns", "m1,m2,m3", "--p", "1",
            "--format", "json",
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(proc.stdout)
        assert abs(payload["value"] - 0.8) <= 1e-10
        assert payload["estimator"] == "exact"
        assert len(payload["weights"]) == 3

    def test_thread_count_does_not_change_output(self, spike_csv):
        args = ("gini", "--input", spike_csv, "--columns", "m1,m2,m3", "--format", "json")
        one = run_cli(*args, "--threads", "1")
        four = run_cli(*args, "--threads", "4")
        assert one.returncode == four.returncode == 0
        assert one.stdout == four.stdout

    def test_pairs_estimator_prints_seed(self, spike_csv):
        proc = run_cli(
            "gini", "--input", spike_csv, "--columns", "m1,m2,m3",
            "--estimator", "pairs", "--pairs", "50000", "--seed", "7",
        )
        assert proc.returncode == 0
        assert "seed: 7" in proc.stdout
        assert "std_error:" in proc.stdout

    def test_pairs_agree_with_exact(self, spike_csv):
        exact = json.loads(
            run_cli("gini", "--input", spike_csv, "--columns", "m1,m2,m3",
                    "--format", "json").stdout
        )
        pairs = json.loads(
            run_cli("gini", "--input", spike_csv, "--columns", "m1,m2,m3",
                    "--estimator", "pairs", "--pairs", "200000", "--seed", "7",
                    "--format", "json").stdout
        )
        assert abs(pairs["value"] - exact["value"]) <= 4.0 * pairs["std_error"]

    def test_cholesky_method_accepted(self, spike_csv):
        proc = run_cli(
            "gini", "--input", spike_csv, "--columns", "m1,m2,m3",
            "--method", "cholesky", "--format", "json",
        )
        assert proc.returncode == 0
        assert abs(json.loads(proc.stdout)["value"] - 0.8) <= 1e-10

    def test_pca_method_rejected(self, spike_csv):
        proc = run_cli("gini", "--input", spike_csv, "--columns", "m1,m2,m3", "--method", "pca")
        assert proc.returncode == 1

    def test_max_norm_order(self, spike_csv):
        proc = run_cli(
            "gini", "--input", spike_csv, "--columns", "m1,m2,m3", "--p", "inf",
            "--format", "json",
        )
        assert proc.returncode == 0
        payload = json.loads(proc.stdout)
        assert payload["p"] == "inf"
        assert payload["weights"] is None


class TestWhitenCommand:
    def test_pca_unstable_on_fixture(self, fixture_csv):
        proc = run_cli(
            "whiten", "--input", fixture_csv, "--columns", "a,b", "--method", "pca",
            "--check-scale-stability", "--q", "2,1", "--format", "json",
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(proc.stdout)
        assert payload["scale_stability_deviation"] > 0.1

    @pytest.mark.parametrize("method", ["zca-cor", "cholesky"])
    def test_stable_methods_on_fixture(self, fixture_csv, method):
        proc = run_cli(
            "whiten", "--input", fixture_csv, "--columns", "a,b", "--method", method,
            "--check-scale-stability", "--q", "2,1", "--format", "json",
        )
        payload = json.loads(proc.stdout)
        assert payload["scale_stability_deviation"] <= 1e-9
        assert payload["whiteness_residual"] <= 1e-8

    def test_table_output(self, fixture_csv):
        proc = run_cli("whiten", "--input", fixture_csv, "--columns", "a,b")
        assert proc.returncode == 0
        assert "whitening matrix" in proc.stdout
        assert "whiteness residual" in proc.stdout

    def test_scale_check_requires_q(self, fixture_csv):
        proc = run_cli(
            "whiten", "--input", fixture_csv, "--columns", "a,b", "--check-scale-stability"
        )
        assert proc.returncode == 2


class TestSummaryCorr:
    def test_summary_json(self, grouped_csv):
        proc = run_cli("summary", "--input", grouped_csv, "--columns", "cap,emp,rev",
                       "--format", "json")
        payload = json.loads(proc.stdout)
        assert payload["n"] == 51
        assert set(payload["summary"]) == {"cap", "emp", "rev"}

    def test_corr_json_unit_diagonal(self, grouped_csv):
        proc = run_cli("corr", "--input", grouped_csv, "--columns", "cap,emp,rev",
                       "--format", "json")
        corr = json.loads(proc.stdout)["correlation"]
        assert corr[0][0] == 1.0 and corr[1][1] == 1.0 and corr[2][2] == 1.0

    def test_summary_table(self, grouped_csv):
        proc = run_cli("summary", "--input", grouped_csv, "--columns", "cap,emp,rev")
        assert proc.returncode == 0
        assert "mean" in proc.stdout and "std" in proc.stdout


class TestReportCommand:
    def test_table_shape(self, grouped_csv):
        proc = run_cli(
            "report", "--input", grouped_csv, "--columns", "cap,emp,rev",
            "--group-column", "country",
        )
        assert proc.returncode == 0, proc.stderr
        assert "Inequality by group" in proc.stdout
        lines = [l for l in proc.stdout.splitlines() if l.startswith(("JP", "US", "All", "DE"))]
        # DE has a single company: below the group threshold, pooled only
        assert [l.split()[0] for l in lines] == ["JP", "US", "All"]

    def test_json_deterministic_and_parseable(self, grouped_csv):
        args = ("report", "--input", grouped_csv, "--columns", "cap,emp,rev",
                "--group-column", "country", "--format", "json")
        a, b = run_cli(*args), run_cli(*args)
        assert a.stdout == b.stdout
        payload = json.loads(a.stdout)
        assert payload["rows"][-1]["group"] == "All"
        assert payload["rows"][-1]["n"] == 51

    def test_out_path(self, grouped_csv, tmp_path):
        out = tmp_path / "report.csv"
        proc = run_cli(
            "report", "--input", grouped_csv, "--columns", "cap,emp,rev",
            "--group-column", "country", "--format", "csv", "--out", str(out),
        )
        assert proc.returncode == 0
        assert out.read_text(encoding="utf-8").startswith("group,n,gini_cap")


class TestVerifyCommand:
    SUBSET = "reference-eigenvalues,coinflip-cube-shift,spike-cube-exactness"

    def test_subset_passes_and_log_deterministic(self):
        a = run_cli("verify", "--seed", "11", "--checks", self.SUBSET)
        b = run_cli("verify", "--seed", "11", "--checks", self.SUBSET)
        assert a.returncode == 0, a.stdout
        assert a.stdout == b.stdout
        assert a.stdout.startswith("seed: 11\n")
        assert a.stdout.count("PASS") == 3

    def test_tamper_makes_it_fail(self):
        proc = run_cli("verify", "--checks", "pca-instability-witness", "--tamper")
        assert proc.returncode == 3
        assert "FAIL pca-instability-witness" in proc.stdout

    def test_untampered_witness_passes(self):
        proc = run_cli("verify", "--checks", "pca-instability-witness")
        assert proc.returncode == 0
        assert "PASS pca-instability-witness" in proc.stdout

    def test_unknown_check_name(self):
        proc = run_cli("verify", "--checks", "nonsense")
        assert proc.returncode == 2
