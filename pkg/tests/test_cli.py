"""
Tests for the command line interface.
"""

import json
from pathlib import Path

import numpy as np
import pandas as pd
from click.testing import CliRunner

from ergodic_eki.cli import cli, exit_code_for
from ergodic_eki.core.errors import ConfigError, DataFileError, SingularSystem

CONFIG_DIR = Path(__file__).parent.parent / "configs"


def _series(path, n=2000):
    generator = np.random.default_rng(3)
    x = np.empty(n)
    x[0] = 0.0
    for t in range(1, n):
        x[t] = 0.7 * x[t - 1] + generator.standard_normal()
    pd.DataFrame({"t": np.arange(n), "value": x}).to_csv(path, index=False)
    return str(path)


def test_exit_codes():
    assert exit_code_for(ConfigError("a", "b")) == 2
    assert exit_code_for(DataFileError("x")) == 3
    assert exit_code_for(SingularSystem("x")) == 4


def test_stats_prints_labelled_values(tmp_path):
    csv_path = _series(tmp_path / "series.csv")
    out = tmp_path / "y.json"
    result = CliRunner().invoke(cli, [
        "stats", csv_path, str(CONFIG_DIR / "stats_moments.toml"),
        "--dt", "1.0", "--column", "value", "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    values = json.loads(result.stdout)
    assert len(values) == 4 + 6 + 3
    assert abs(values["acf[x1](1)"] - 0.7) < 0.1
    saved = json.loads(out.read_text(encoding="utf-8"))
    assert len(saved["gamma"]) == 13 * 13


def test_stats_column_by_position(tmp_path):
    csv_path = _series(tmp_path / "series.csv")
    result = CliRunner().invoke(cli, [
        "stats", csv_path, str(CONFIG_DIR / "stats_moments.toml"), "--dt", "1.0", "--column", "1",
    ])
    assert result.exit_code == 0, result.output


def test_stats_missing_file_is_a_data_error(tmp_path):
    result = CliRunner().invoke(cli, [
        "stats", str(tmp_path / "none.csv"), str(CONFIG_DIR / "stats_moments.toml"), "--dt", "1.0",
    ])
    assert result.exit_code == 3


def test_stats_bad_spec_is_a_config_error(tmp_path):
    csv_path = _series(tmp_path / "series.csv")
    spec = tmp_path / "spec.toml"
    spec.write_text("moments = { components = [0] }\nskewness = true\n", encoding="utf-8")
    result = CliRunner().invoke(cli, ["stats", csv_path, str(spec), "--dt", "1.0"])
    assert result.exit_code == 2


def test_run_missing_config_is_a_config_error(tmp_path):
    result = CliRunner().invoke(cli, ["run", str(tmp_path / "none.toml")])
    assert result.exit_code == 2


def test_simulate_writes_the_observation(tmp_path):
    out = tmp_path / "enso_truth"
    result = CliRunner().invoke(cli, ["simulate", str(CONFIG_DIR / "enso.toml"), "--smoke", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "dimension 16" in result.stdout
    assert (out / "observation.json").exists()
    assert (out / "trajectory_truth.csv").exists()
    assert (out / "histograms" / "hist_x1_truth.csv").exists()


def test_run_smoke_writes_a_bundle(tmp_path):
    out = tmp_path / "bundle"
    result = CliRunner().invoke(cli, [
        "run", str(CONFIG_DIR / "l63_case_i_ode.toml"), "--smoke", "--out", str(out), "--no-progress",
    ])
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["name"] == "l63_case_i_ode"
    assert summary["n_parameters"] == 1
    assert summary["generations"] == 2
