import json

import pandas as pd
import pytest

from app import cli
from app.errors import NumericError

SIM_CONFIG = {"n_groups": 2, "group_size": 2, "n_days": 2, "grid_len": 4, "seed": 3}
FIT_CONFIG = {"burn_in": 2, "samples": 4, "seed": 1}


@pytest.fixture
def sim_dir(tmp_path):
    config = tmp_path / "sim.json"
    config.write_text(json.dumps(SIM_CONFIG))
    out = tmp_path / "data"
    assert cli.main(["simulate", "--config", str(config), "--out", str(out)]) == cli.EXIT_OK
    return out


@pytest.fixture
def fit_config(tmp_path):
    path = tmp_path / "chain.json"
    path.write_text(json.dumps(FIT_CONFIG))
    return path


def test_simulate_writes_dataset(sim_dir):
    for name in ("observations.csv", "adjacency.csv", "calendar.csv", "true_means.csv", "truth.json", "sim_config.json"):
        assert (sim_dir / name).is_file()
    truth = json.loads((sim_dir / "truth.json").read_text())
    assert truth["labels"] == [0, 0, 1, 1]
    assert truth["n_clusters"] == 2
    assert len(pd.read_csv(sim_dir / "observations.csv")) == 4 * 2 * 4


def test_simulate_is_reproducible(sim_dir, tmp_path):
    config = tmp_path / "sim.json"
    again = tmp_path / "again"
    assert cli.main(["simulate", "--config", str(config), "--out", str(again)]) == cli.EXIT_OK
    for path in sim_dir.iterdir():
        assert (again / path.name).read_bytes() == path.read_bytes()


def test_simulate_invalid_config(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({**SIM_CONFIG, "n_days": 0}))
    assert cli.main(["simulate", "--config", str(config), "--out", str(tmp_path / "x")]) == cli.EXIT_VALIDATION


def test_fit_metrics_summarize(sim_dir, fit_config, tmp_path):
    out = tmp_path / "fit"
    code = cli.main(["fit", "--data", str(sim_dir), "--config", str(fit_config), "--out", str(out)])
    assert code == cli.EXIT_OK

    chain = out / "chain_00"
    draws = pd.read_csv(chain / "draws.csv")
    assert len(draws) == 4
    assert {"alpha_0", "beta_0", "tau_0", "k_0", "eta_y"} <= set(draws.columns)
    partitions = pd.read_csv(chain / "partitions.csv")
    assert list(partitions.columns) == ["draw", "period", "period_name", "area_0", "area_1", "area_2", "area_3"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["periods"] == ["weekday"]
    assert manifest["seed"] == 1
    assert manifest["model"] == "sgdp"
    assert manifest["config"]["burn_in"] == 2

    assert cli.main(["metrics", "--fit", str(out), "--truth", str(sim_dir / "truth.json")]) == cli.EXIT_OK
    metrics = json.loads((out / "metrics.json").read_text())
    assert set(metrics) == {"ari", "purity", "rmse"}
    assert -1.0 <= metrics["ari"] <= 1.0
    assert 0.5 <= metrics["purity"] <= 1.0

    assert cli.main(["summarize", "--fit", str(out)]) == cli.EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["chains"] == 1
    assert summary["draws"] == 4
    assert len(summary["periods"][0]["point_partition"]) == 4
    assert summary["periods"][0]["name"] == "weekday"


def test_fit_is_reproducible(sim_dir, fit_config, tmp_path):
    for name in ("a", "b"):
        args = ["fit", "--data", str(sim_dir), "--config", str(fit_config), "--out", str(tmp_path / name)]
        assert cli.main(args) == cli.EXIT_OK
    for name in ("draws.csv", "partitions.csv", "means.csv"):
        assert (tmp_path / "a" / "chain_00" / name).read_bytes() == (tmp_path / "b" / "chain_00" / name).read_bytes()


def test_fit_gdp_two_chains(sim_dir, fit_config, tmp_path):
    out = tmp_path / "fit"
    args = [
        "fit", "--data", str(sim_dir), "--config", str(fit_config), "--out", str(out),
        "--model", "gdp", "--chains", "2", "--threads", "2",
    ]
    assert cli.main(args) == cli.EXIT_OK
    for chain in ("chain_00", "chain_01"):
        assert "tau_0" not in pd.read_csv(out / chain / "draws.csv").columns
    assert cli.main(["summarize", "--fit", str(out)]) == cli.EXIT_OK
    assert json.loads((out / "summary.json").read_text())["draws"] == 8


def test_fit_sdp_uses_its_preset(sim_dir, fit_config, tmp_path):
    base = ["fit", "--data", str(sim_dir), "--config", str(fit_config), "--model", "sdp"]
    assert cli.main(base + ["--out", str(tmp_path / "a")]) == cli.EXIT_OK
    config = json.loads((tmp_path / "a" / "manifest.json").read_text())["config"]
    assert config["prior_preset"] == "sdp"
    assert (config["priors"]["a_alpha"], config["priors"]["b_alpha"]) == (1.0, 1.0)

    assert cli.main(base + ["--preset", "prior1", "--out", str(tmp_path / "b")]) == cli.EXIT_OK
    config = json.loads((tmp_path / "b" / "manifest.json").read_text())["config"]
    assert config["prior_preset"] == "prior1"
    assert config["priors"]["a_alpha"] == 2.0


def test_fit_missing_data(tmp_path, fit_config):
    args = ["fit", "--data", str(tmp_path / "none"), "--config", str(fit_config), "--out", str(tmp_path / "fit")]
    assert cli.main(args) == cli.EXIT_VALIDATION


def test_fit_bad_config(sim_dir, tmp_path):
    config = tmp_path / "chain.json"
    config.write_text(json.dumps({"burn_in": -1}))
    args = ["fit", "--data", str(sim_dir), "--config", str(config), "--out", str(tmp_path / "fit")]
    assert cli.main(args) == cli.EXIT_VALIDATION


def test_numeric_failure_exit_code(sim_dir, fit_config, tmp_path, monkeypatch):
    def failing(*args, **kwargs):
        raise NumericError("Cholesky factorization failed", sweep=5)

    monkeypatch.setattr(cli, "run_chains", failing)
    args = ["fit", "--data", str(sim_dir), "--config", str(fit_config), "--out", str(tmp_path / "fit")]
    assert cli.main(args) == cli.EXIT_NUMERIC


def test_metrics_without_fit(sim_dir, tmp_path):
    args = ["metrics", "--fit", str(tmp_path / "nothing"), "--truth", str(sim_dir / "truth.json")]
    assert cli.main(args) == cli.EXIT_VALIDATION


def test_fit_names_calendar_periods(sim_dir, fit_config, tmp_path):
    pd.DataFrame({"day_index": [0, 1], "tag": ["weekday", "holiday"]}).to_csv(sim_dir / "calendar.csv", index=False)
    out = tmp_path / "fit"
    assert cli.main(["fit", "--data", str(sim_dir), "--config", str(fit_config), "--out", str(out)]) == cli.EXIT_OK
    assert json.loads((out / "manifest.json").read_text())["periods"] == ["weekday", "holiday"]
    means = pd.read_csv(out / "chain_00" / "means.csv")
    assert means.groupby("period")["period_name"].first().tolist() == ["weekday", "holiday"]
    assert cli.main(["summarize", "--fit", str(out)]) == cli.EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert [p["name"] for p in summary["periods"]] == ["weekday", "holiday"]


EXPERIMENT_CONFIG = {
    "models": ["sgdp", "sdp"],
    "presets": ["prior1"],
    "noise_etas": [1.0],
    "replicates": 1,
    "burn_in": 2,
    "samples": 2,
    "sim": {"n_groups": 2, "group_size": 2, "n_days": 1, "grid_len": 3},
}


def test_experiment_writes_tables(tmp_path):
    config = tmp_path / "experiment.json"
    config.write_text(json.dumps(EXPERIMENT_CONFIG))
    out = tmp_path / "exp"
    args = ["experiment", "--config", str(config), "--out", str(out), "--seed", "11", "--threads", "2"]
    assert cli.main(args) == cli.EXIT_OK
    results = pd.read_csv(out / "results.csv")
    assert results[["model", "preset"]].values.tolist() == [["sgdp", "prior1"], ["sdp", "sdp"]]
    summary = pd.read_csv(out / "summary.csv")
    assert summary["replicates"].tolist() == [1, 1]
    echoed = json.loads((out / "experiment_config.json").read_text())
    assert echoed["seed"] == 11


def test_experiment_unknown_preset(tmp_path):
    config = tmp_path / "experiment.json"
    config.write_text(json.dumps({**EXPERIMENT_CONFIG, "presets": ["prior7"]}))
    assert cli.main(["experiment", "--config", str(config), "--out", str(tmp_path / "exp")]) == cli.EXIT_VALIDATION
