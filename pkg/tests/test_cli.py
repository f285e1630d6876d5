import json
import math

import numpy as np
import pytest

import mpme.cli as cli
from mpme.cli import cli_main
from mpme.core import NumericalError, PopulationSample
from mpme.dataio import DatasetFile, save_dataset
from mpme.experiments import standin_dataset
from mpme.verify import SuiteResult


@pytest.fixture
def clustered_csv(tmp_path):
    # Means spread ~1 with heterogeneous scales: prior learning has an
    # interior optimum here.
    rng = np.random.default_rng(42)
    pops = []
    for i in range(10):
        mu = 10.0 + rng.standard_normal()
        sig = float(np.exp(0.4 * rng.standard_normal()))
        values = mu + sig * rng.standard_normal(6)
        pops.append(PopulationSample(id=f"p{i}", values=tuple(float(v) for v in values)))
    path = tmp_path / "data.csv"
    save_dataset(DatasetFile(populations=tuple(pops)), path)
    return path


def test_version_and_usage_exit_codes(capsys):
    assert cli_main(["--version"]) == 0
    assert "mpme" in capsys.readouterr().out
    assert cli_main([]) == 1
    assert cli_main(["estimate"]) == 1  # --input and --prior are required
    assert cli_main(["synth", "--methods", "bogus"]) == 1


def test_estimate_sample_prior_stdout(clustered_csv, capsys):
    assert cli_main(["estimate", "--input", str(clustered_csv), "--prior", "sample"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == "mpme/1"
    assert doc["command"] == "estimate"
    assert doc["method"] == "sample"
    assert doc["hyperparameters"] is None
    assert len(doc["estimates"]) == 10
    row = doc["estimates"][0]
    assert row["population"] == "p0"
    assert row["n"] == 6
    assert row["mu"] == row["mean"]
    assert row["sigma_sq"] == row["var_unbiased"]


def test_estimate_nix_prior_writes_output_file(clustered_csv, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = cli_main(
        ["estimate", "--input", str(clustered_csv), "--prior", "nix", "--output", str(out)]
    )
    assert code == 0
    assert capsys.readouterr().out == ""
    doc = json.loads(out.read_text())
    assert doc["method"] == "mpme-nix"
    assert set(doc["hyperparameters"]) == {"mu0", "kappa0", "nu0", "sigma0_sq"}
    # Shrinkage: every posterior mean lies between the sample mean and mu0.
    mu0 = doc["hyperparameters"]["mu0"]
    for row in doc["estimates"]:
        lo, hi = sorted((row["mean"], mu0))
        assert lo <= row["mu"] <= hi


def test_estimate_nix_unbiased_variance_flag(clustered_csv, capsys):
    assert (
        cli_main(
            [
                "estimate",
                "--input",
                str(clustered_csv),
                "--prior",
                "nix",
                "--unbiased-variance",
            ]
        )
        == 0
    )
    doc = json.loads(capsys.readouterr().out)
    assert doc["method"] == "mpme-nix-unbiased"
    assert doc["config"]["unbiased_variance"] is True


def test_estimate_uni_prior(tmp_path, capsys):
    rng = np.random.default_rng(3)
    pops = []
    for i in range(20):
        mu = rng.uniform(9.5, 10.5)
        s2 = rng.uniform(0.95, 1.05)
        values = mu + math.sqrt(s2) * rng.standard_normal(5)
        pops.append(PopulationSample(id=f"p{i}", values=tuple(float(v) for v in values)))
    path = tmp_path / "data.csv"
    save_dataset(DatasetFile(populations=tuple(pops)), path)
    assert cli_main(["estimate", "--input", str(path), "--prior", "uni"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["method"] == "mpme-uni"
    h = doc["hyperparameters"]
    assert h["a"] < h["b"] and 0 < h["c"] < h["d"]
    for row in doc["estimates"]:
        assert h["a"] <= row["mu"] <= h["b"]
        assert h["c"] <= row["sigma_sq"] <= h["d"]


def test_estimate_prune_reports_to_stderr(tmp_path, capsys):
    rng = np.random.default_rng(1)
    pops = [
        PopulationSample(
            id=f"p{i}", values=tuple(float(v) for v in 10.0 + rng.standard_normal(5))
        )
        for i in range(8)
    ]
    pops.append(
        PopulationSample(
            id="wild", values=tuple(float(v) for v in 500.0 + rng.standard_normal(5))
        )
    )
    path = tmp_path / "data.csv"
    save_dataset(DatasetFile(populations=tuple(pops)), path)
    code = cli_main(
        ["estimate", "--input", str(path), "--prior", "nix", "--prune-outliers", "5"]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "pruned populations: wild" in captured.err
    doc = json.loads(captured.out)
    assert doc["pruned"] == ["wild"]
    # Pruning affects learning only; every population is still estimated.
    assert len(doc["estimates"]) == 9


def test_estimate_data_errors_exit_2(tmp_path, capsys):
    assert cli_main(["estimate", "--input", str(tmp_path / "no.csv"), "--prior", "sample"]) == 2
    assert "data error" in capsys.readouterr().err
    bad = tmp_path / "bad.csv"
    bad.write_text("population,value\na,1.0\na,oops\n")
    assert cli_main(["estimate", "--input", str(bad), "--prior", "sample"]) == 2
    csv_as_json = tmp_path / "d.csv"
    csv_as_json.write_text("population,value\na,1.0\na,2.0\n")
    assert (
        cli_main(
            ["estimate", "--input", str(csv_as_json), "--format", "json", "--prior", "sample"]
        )
        == 2
    )


def test_estimate_numerical_failure_exits_3(clustered_csv, monkeypatch, capsys):
    def broken(stats_list, optim_cfg=None):
        raise NumericalError("forced failure")

    monkeypatch.setattr(cli, "learn_nix", broken)
    assert cli_main(["estimate", "--input", str(clustered_csv), "--prior", "nix"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_synth_sample_only_report(capsys):
    code = cli_main(
        ["synth", "--pops", "4", "--n", "5", "--trials", "2", "--seed", "3",
         "--methods", "sample"]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["command"] == "synth"
    assert doc["config"]["mu_range"] == [9.5, 10.5]
    assert doc["config"]["sigma_range"] == [0.95, 1.05]
    assert doc["truth"]["mu"] == [9.5, pytest.approx(9.8333333333333339), pytest.approx(10.166666666666666), 10.5]
    rep = doc["reports"]["sample"]
    assert rep["trials"] == 2
    assert rep["eps_mu"] > 0
    assert len(rep["per_population_mu_rmse"]) == 4
    assert doc["failed_trials"] == 0


def test_synth_example_2_ranges(capsys):
    code = cli_main(
        ["synth", "--example", "2", "--pops", "2", "--n", "5", "--trials", "1",
         "--seed", "0", "--methods", "sample"]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["config"]["sigma_range"] == [1.9, 2.1]
    assert doc["truth"]["sigma"] == [1.9, 2.1]


def test_synth_byte_identical_across_threads(tmp_path):
    args = ["synth", "--pops", "8", "--n", "5", "--trials", "2", "--seed", "7",
            "--methods", "sample,nix"]
    out1, out2 = tmp_path / "t1.json", tmp_path / "t2.json"
    assert cli_main(args + ["--threads", "1", "--output", str(out1)]) == 0
    assert cli_main(args + ["--threads", "2", "--output", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_threads_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MPME_THREADS", "2")
    assert (
        cli_main(["synth", "--pops", "4", "--n", "5", "--trials", "2",
                  "--methods", "sample"])
        == 0
    )
    capsys.readouterr()
    monkeypatch.setenv("MPME_THREADS", "zero")
    assert (
        cli_main(["synth", "--pops", "4", "--n", "5", "--trials", "2",
                  "--methods", "sample"])
        == 2
    )
    assert "MPME_THREADS" in capsys.readouterr().err


def test_bootstrap_command(tmp_path, capsys):
    path = tmp_path / "standin.json"
    save_dataset(DatasetFile(populations=tuple(standin_dataset())), path)
    code = cli_main(
        ["bootstrap", "--input", str(path), "--subsample", "5", "--trials", "2",
         "--seed", "5", "--methods", "sample"]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["command"] == "bootstrap"
    assert doc["truth"]["population"] == [f"die-{i}" for i in range(1, 9)]
    assert doc["reports"]["sample"]["trials"] == 2
    # Subsample larger than any population is a data error.
    assert (
        cli_main(
            ["bootstrap", "--input", str(path), "--subsample", "51", "--trials", "2",
             "--methods", "sample"]
        )
        == 2
    )


def test_verify_pass_and_fail_exit_codes(monkeypatch, capsys):
    assert cli_main(["verify", "--suite", "correlation", "--cases", "200000"]) == 0
    out = capsys.readouterr().out
    assert "PASS correlation" in out

    def fake_run_suite(name, cases=None, seed=None):
        return SuiteResult(name, False, 1, worst=1.0, tolerance=0.1, lines=["case 0: bad"])

    monkeypatch.setattr(cli, "run_suite", fake_run_suite)
    assert cli_main(["verify", "--suite", "correlation"]) == 4
    assert "FAIL correlation" in capsys.readouterr().out
