"""
Tests for time-series ingestion, histogram comparison and bundle files.
"""

import numpy as np
import pandas as pd
import pytest

from ergodic_eki.core.data_manager import (
    DataManager,
    Histogram,
    compare_invariant_measures,
    emit_acf,
    emit_function_table,
    emit_histogram,
    ingest_timeseries,
    read_histogram,
    read_history,
    read_table,
)
from ergodic_eki.core.errors import BinMismatch, DataFileError, ParseError
from ergodic_eki.core.models import DataVector, EkiHistory, Ensemble, GenerationRecord, Trajectory


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


# ==================== Ingestion ====================

def test_ingest_by_name_and_position(tmp_path):
    path = _write(tmp_path / "nino.csv", "month,anomaly\n1,0.5\n2,-0.25\n3,1.0\n")
    traj = ingest_timeseries(path, "anomaly", 1.0)
    np.testing.assert_allclose(traj.component(0), [0.5, -0.25, 1.0])
    assert traj.dt == 1.0
    np.testing.assert_allclose(ingest_timeseries(path, 1, 1.0).component(0), [0.5, -0.25, 1.0])


def test_ingest_remove_mean(tmp_path):
    path = _write(tmp_path / "x.csv", "x\n1.0\n2.0\n3.0\n")
    np.testing.assert_allclose(ingest_timeseries(path, "x", 0.5, remove_mean=True).component(0), [-1.0, 0.0, 1.0])


def test_ingest_reports_the_bad_line(tmp_path):
    path = _write(tmp_path / "bad.csv", "x\n1.0\n2.0\nabc\n4.0\n")
    with pytest.raises(ParseError) as info:
        ingest_timeseries(path, "x", 1.0)
    assert info.value.line == 4


def test_ingest_file_errors(tmp_path):
    path = _write(tmp_path / "x.csv", "x\n1.0\n")
    with pytest.raises(DataFileError):
        ingest_timeseries(str(tmp_path / "missing.csv"), "x", 1.0)
    with pytest.raises(DataFileError):
        ingest_timeseries(path, "y", 1.0)
    with pytest.raises(DataFileError):
        ingest_timeseries(path, 3, 1.0)
    with pytest.raises(ValueError):
        ingest_timeseries(path, "x", 0.0)


# ==================== Histograms ====================

def test_histogram_masses_and_distance():
    samples = np.random.default_rng(0).normal(size=5000)
    h = Histogram.from_samples(samples, 20, (-4.0, 4.0))
    assert h.masses.sum() == pytest.approx(1.0)
    assert compare_invariant_measures(h, h) == 0.0

    left = Histogram.from_samples([0.1, 0.2], 2, (0.0, 1.0))
    right = Histogram.from_samples([0.8, 0.9], 2, (0.0, 1.0))
    assert compare_invariant_measures(left, right) == pytest.approx(1.0)


def test_histogram_bin_mismatch():
    a = Histogram.from_samples([0.5], 2, (0.0, 1.0))
    b = Histogram.from_samples([0.5], 3, (0.0, 1.0))
    c = Histogram.from_samples([0.5], 2, (0.0, 2.0))
    with pytest.raises(BinMismatch):
        compare_invariant_measures(a, b)
    with pytest.raises(BinMismatch):
        compare_invariant_measures(a, c)


def test_emit_and_read_histogram(tmp_path):
    traj = Trajectory(0.1, np.random.default_rng(1).normal(size=(500, 2)))
    written = emit_histogram(str(tmp_path / "h" / "hist.csv"), traj, 1, bins=10, value_range=(-3.0, 3.0))
    read = read_histogram(str(tmp_path / "h" / "hist.csv"))
    np.testing.assert_allclose(read.edges, written.edges)
    np.testing.assert_allclose(read.masses, written.masses)
    with pytest.raises(DataFileError):
        read_histogram(_write(tmp_path / "other.csv", "a,b\n1,2\n"))


# ==================== Tables ====================

def test_emit_tables(tmp_path):
    acf = emit_acf(str(tmp_path / "acf.csv"), [0.0, 1.0], [1.0, 0.5], fitted=[1.0, 0.4])
    assert list(acf.columns) == ["lag", "acf", "fitted"]
    table = emit_function_table(str(tmp_path / "f.csv"), lambda x: x ** 2, np.linspace(0.0, 1.0, 5))
    np.testing.assert_allclose(read_table(str(tmp_path / "f.csv"))["value"], table["value"])
    with pytest.raises(DataFileError):
        read_table(str(tmp_path / "none.csv"))


def test_read_history_reports_bad_json(tmp_path):
    path = _write(tmp_path / "history.jsonl", '{"gen": 0}\n\n{"gen": 1\n')
    with pytest.raises(ParseError) as info:
        read_history(path)
    assert info.value.line == 3


# ==================== Bundle manager ====================

def test_bundle_round_trip(tmp_path):
    manager = DataManager(str(tmp_path / "bundle"))
    y = DataVector([1.0, 2.0], [[1.0, 0.1], [0.1, 2.0]], ["E[x1]", "E[x1*x1]"])
    manager.save_observation(y)
    loaded = manager.load_observation()
    np.testing.assert_allclose(loaded.values, y.values)
    np.testing.assert_allclose(loaded.gamma, y.gamma)
    assert loaded.labels == y.labels

    history = EkiHistory()
    particles = np.array([[0.0, 1.0], [1.0, 2.0]])
    history.append(GenerationRecord(0, particles, particles * 2.0, 3.5, [1]))
    history.final = Ensemble(particles, 1)
    manager.save_history(history)
    records = manager.load_history()
    assert records[0]["gen"] == 0
    assert records[0]["failed_members"] == [1]
    assert records[0]["particles"] == particles.tolist()

    manager.save_final_ensemble(particles, ["a", "b"])
    frame = manager.load_table("final_ensemble")
    assert list(frame.columns) == ["member", "a", "b"]

    manager.save_data_comparison(y, np.array([1.1, 1.9]))
    comparison = manager.load_table("data_comparison")
    np.testing.assert_allclose(comparison["truth_std"], [1.0, np.sqrt(2.0)])

    manager.save_summary({"name": "test"})
    assert manager.load_summary() == {"name": "test"}


def test_list_files(tmp_path):
    manager = DataManager(str(tmp_path / "bundle"))
    pd.DataFrame({"x": [0.0]}).to_csv(manager.histogram_path("x1_truth"), index=False)
    assert manager.list_files("histograms") == ["hist_x1_truth.csv"]
    assert DataManager(str(tmp_path / "absent"), create=False).list_files("acf") == []
