import json

import numpy as np
import pytest

from cli.main import main
from cli.outputs import MANIFEST_NAME, replay_argv
from numerics.static import ExitCodes
from sim.generators import sample_hierarchical
from utils import file_sha256, read_csv, read_numeric_column, write_csv

SMALL_SIMULATION = {
    "name": "cli_small",
    "carrier_spec": {"kind": "gaussian"},
    "n": 1000,
    "replicates": 5,
    "seed": 7,
    "estimator": {"kind": "efron", "p": 2, "basis": "hermite", "carrier": {"kind": "gaussian", "sigma": 1.5}},
    "grid": {"m_half": 8.0, "n_points": 256},
}


def _load(path):
    with open(path, 'r') as json_file:
        return json.load(json_file)


@pytest.fixture
def samples_csv(tmp_path, gauss8):
    path = tmp_path / "samples.csv"
    write_csv(str(path), ["x"], [sample_hierarchical(gauss8, 2000, seed=13)])
    return path


def test_minimax_reference_point(tmp_path):
    argv = ["minimax", "--sigma", "1", "--kappa", "2", "--c", "100", "--out-dir", str(tmp_path)]
    assert main(argv) == ExitCodes.SUCCESS
    report = _load(tmp_path / "minimax_report.json")
    assert report["p_star"] == 4
    assert report["beta"] == pytest.approx(3.0)
    assert report["truncation_risk"] == pytest.approx(30.0 + 1e4 / 4 ** 5)
    manifest = _load(tmp_path / MANIFEST_NAME)
    assert manifest["subcommand"] == "minimax"
    assert manifest["argv"] == argv
    assert manifest["outputs"]["minimax_report.json"] == file_sha256(str(tmp_path / "minimax_report.json"))


def test_minimax_with_monte_carlo_check(tmp_path):
    assert main(["minimax", "--replicates", "2000", "--seed", "1", "--out-dir", str(tmp_path)]) == 0
    simulated = _load(tmp_path / "minimax_report.json")["simulated_truncation_risk"]
    assert simulated["replicates"] == 2000
    assert simulated["standard_error"] > 0


@pytest.mark.parametrize("argv", [
    ["minimax", "--kappa", "0.5"],
    ["minimax", "--c", "-1"],
    ["fit", "--samples", "missing.csv", "--p", "0"],
    ["no-such-command"],
])
def test_usage_errors(tmp_path, argv):
    assert main(argv + ["--out-dir", str(tmp_path)]) == ExitCodes.USAGE


def test_hermite_table(tmp_path):
    assert main(["hermite", "--j-max", "3", "--x", "[0.0, 1.0]", "--out-dir", str(tmp_path)]) == 0
    table = read_csv(str(tmp_path / "hermite.csv"))
    assert list(table.columns) == ["x", "H0", "H1", "H2", "H3"]
    at_one = table.iloc[1].to_numpy(dtype=float).tolist()
    assert at_one == pytest.approx([1.0, 1.0, -1.0, 0.0, 2.0 / np.sqrt(6.0)], abs=1e-12)


def test_fit_writes_density_report_and_manifest(tmp_path, samples_csv):
    out = tmp_path / "fit"
    argv = ["fit", "--samples", str(samples_csv), "--p", "2", "--n-points", "256", "--out-dir", str(out)]
    assert main(argv) == 0
    report = _load(out / "fit_report.json")
    assert report["converged"]
    assert report["mass"] == pytest.approx(1.0, abs=1e-8)
    assert report["labels"] == ["mu^1", "mu^2"]
    assert len(report["standard_errors_expected"]) == 2
    assert report["n_samples"] == 2000
    g_hat = read_numeric_column(str(out / "fitted_density.csv"), "g_hat")
    assert g_hat.size == 256 and np.all(g_hat >= 0)
    manifest = _load(out / MANIFEST_NAME)
    assert manifest["inputs"]["samples"]["sha256"] == file_sha256(str(samples_csv))
    assert manifest["parameters"]["p"] == 2


def test_fit_rejects_samples_outside_the_domain(tmp_path):
    samples = tmp_path / "far.csv"
    write_csv(str(samples), ["x"], [[0.1, -0.4, 0.3, 0.2, 15.0, -0.1, 0.5]])
    argv = ["fit", "--samples", str(samples), "--p", "1", "--n-points", "256", "--out-dir", str(tmp_path)]
    assert main(argv) == ExitCodes.USAGE
    assert main(argv + ["--expand-domain"]) == 0
    assert _load(tmp_path / "fit_report.json")["m_half"] >= 15.0


def test_efficiency_spectrum(tmp_path):
    argv = ["efficiency", "--mode", "spectrum", "--p", "3", "--n-points", "512", "--out-dir", str(tmp_path)]
    assert main(argv) == 0
    eigenvalues = read_numeric_column(str(tmp_path / "spectrum.csv"), "lambda")
    assert eigenvalues == pytest.approx([1.0, 0.5, 0.25, 0.125], abs=1e-3)


def test_efficiency_favorable_statistics(tmp_path):
    assert main(["efficiency", "--p", "2", "--n-points", "512", "--out-dir", str(tmp_path)]) == 0
    assert list(read_csv(str(tmp_path / "favorable.csv")).columns) == ["mu", "T1", "T2"]
    report = _load(tmp_path / "rho_report.json")
    assert report["rho"] == pytest.approx(0.25, abs=1e-3)


def test_efficiency_needs_a_floor_for_carriers_with_zeros(tmp_path):
    argv = ["efficiency", "--carrier", "two_towers", "--p", "2", "--n-points", "512", "--out-dir", str(tmp_path)]
    assert main(argv) == ExitCodes.NUMERICAL
    assert main(argv + ["--floor", "1e-10"]) == 0
    assert _load(tmp_path / "rho_report.json")["carrier_floor"] == 1e-10


def test_simulate_and_replay(tmp_path):
    config = tmp_path / "small.json"
    config.write_text(json.dumps(SMALL_SIMULATION))
    first = tmp_path / "first"
    assert main(["simulate", "--config", str(config), "--replicates", "3", "--out-dir", str(first)]) == 0
    replicates = read_csv(str(first / "replicates.csv"))
    assert len(replicates) == 3 and "functional" in replicates.columns
    manifest = _load(first / MANIFEST_NAME)
    assert manifest["parameters"]["resolved_config"]["replicates"] == 3
    assert manifest["seed"] == 7

    second = tmp_path / "second"
    assert main(["replay", "--manifest", str(first / MANIFEST_NAME), "--out-dir", str(second)]) == 0
    assert (second / "replicates.csv").read_bytes() == (first / "replicates.csv").read_bytes()
    assert _load(second / MANIFEST_NAME)["argv"][-2:] == ["--out-dir", str(second)]


def test_crime_without_data_is_an_external_failure(tmp_path):
    argv = ["crime", "--cache-dir", str(tmp_path / "cache"), "--out-dir", str(tmp_path)]
    assert main(argv) == ExitCodes.EXTERNAL


def test_crime_on_a_local_file(tmp_path):
    rng = np.random.default_rng(21)
    population = rng.integers(30_000, 60_000, size=120)
    crimes = (rng.uniform(0.005, 0.06, size=120) * population).astype(int)
    data = tmp_path / "crime.csv"
    write_csv(str(data), ["community", "population", "nonviolent_crimes"],
              [[f"c{index}" for index in range(120)], population, crimes])
    argv = ["crime", "--data", str(data), "--n-points", "256", "--seed", "2", "--out-dir", str(tmp_path)]
    assert main(argv) == 0
    p_hat = read_numeric_column(str(tmp_path / "posterior_curve.csv"), "p_hat")
    assert np.any(np.isclose(p_hat, 0.02))
    assert _load(tmp_path / "crime_report.json")["n_communities"] == 120


def test_replay_argv_replaces_the_output_directory():
    manifest = {"argv": ["minimax", "--out-dir", "old", "--c", "5"]}
    assert replay_argv(manifest, "new") == ["minimax", "--c", "5", "--out-dir", "new"]
    assert replay_argv({"argv": ["hermite", "--out-dir=old"]}, "new") == ["hermite", "--out-dir", "new"]
    with pytest.raises(ValueError):
        replay_argv({}, "new")


def test_csv_helpers_handle_quotes_and_missing_values(tmp_path):
    path = tmp_path / "table.csv"
    write_csv(str(path), ["name", "value"], [["a, b", "c"], [0.1, None]])
    assert path.read_text() == 'name,value\n"a, b",0.10000000000000001\nc,\n'
    table = read_csv(str(path))
    assert table["name"].tolist() == ["a, b", "c"]
    with pytest.raises(ValueError, match="table.csv:3"):
        read_numeric_column(str(path), "value")
    with pytest.raises(ValueError, match="no column"):
        read_numeric_column(str(path), "x")
    with pytest.raises(ValueError):
        write_csv(str(path), ["a", "b"], [[1.0], [1.0, 2.0]])
