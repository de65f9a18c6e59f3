"""
Data persistence manager for ergodic-eki.
Handles all file I/O: time-series ingestion, result bundle emission and the
readers that parse bundles back.
"""

import json
import logging
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .config import BUNDLE_FILES, DIRECTORIES, RUNNER_DEFAULTS
from .errors import BinMismatch, DataFileError, ParseError
from .models import DataVector, EkiHistory, Trajectory

logger = logging.getLogger(__name__)


@dataclass
class Histogram:
    """Binned probability masses over shared edges."""
    edges: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if self.edges.shape[0] != self.masses.shape[0] + 1:
            raise ValueError("need one more edge than masses")

    @classmethod
    def from_samples(cls, samples, bins: int, value_range: Tuple[float, float]) -> 'Histogram':
        """Masses normalized over the samples falling inside the range."""
        counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=bins, range=value_range)
        total = counts.sum()
        masses = counts / total if total > 0 else np.zeros(bins)
        return cls(edges, masses)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "bin_left": self.edges[:-1],
            "bin_right": self.edges[1:],
            "mass": self.masses,
        })


def compare_invariant_measures(h_true: Histogram, h_fit: Histogram) -> float:
    """Total-variation distance 1/2 sum |p_i - q_i| on shared bins."""
    if h_true.edges.shape != h_fit.edges.shape or not np.allclose(
        h_true.edges, h_fit.edges, rtol=0.0, atol=1e-12
    ):
        raise BinMismatch("histograms do not share bin edges")
    return float(0.5 * np.abs(h_true.masses - h_fit.masses).sum())


# ==================== Time-series ingestion ====================

def ingest_timeseries(
    path: str,
    column: Union[str, int],
    sampling_interval: float,
    remove_mean: bool = False,
) -> Trajectory:
    """Read one numeric column of a CSV with a header row.

    ``column`` is a header name or a 0-based position. Rows that are empty
    or non-numeric raise ParseError with the 1-based file line.
    """
    if sampling_interval <= 0:
        raise ValueError("sampling interval must be positive")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except FileNotFoundError as exc:
        raise DataFileError(f"data file not found: {path}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataFileError(f"cannot read {path}: {exc}") from exc

    if isinstance(column, int):
        if not 0 <= column < frame.shape[1]:
            raise DataFileError(f"{path} has {frame.shape[1]} columns, asked for column {column}")
        raw = frame.iloc[:, column]
    elif column in frame.columns:
        raw = frame[column]
    else:
        raise DataFileError(f"column {column!r} not in {path} (has {list(frame.columns)})")

    values = pd.to_numeric(raw.str.strip(), errors="coerce")
    bad = np.flatnonzero(~np.isfinite(values.to_numpy(dtype=float)))
    if bad.size:
        # header is line 1
        raise ParseError(int(bad[0]) + 2, f"non-numeric value {raw.iloc[bad[0]]!r} in {path}")
    samples = values.to_numpy(dtype=float)
    if samples.size == 0:
        raise DataFileError(f"{path} holds no data rows")
    if remove_mean:
        samples = samples - samples.mean()
    logger.info("ingested %d samples from %s", samples.size, path)
    return Trajectory(sampling_interval, samples)


# ==================== Emitters ====================

def emit_histogram(
    path: str,
    traj: Trajectory,
    component: int,
    bins: int = RUNNER_DEFAULTS["histogram_bins"],
    value_range: Optional[Tuple[float, float]] = None,
) -> Histogram:
    """Write the unit-mass histogram of one component."""
    samples = traj.component(component)
    if value_range is None:
        value_range = (float(samples.min()), float(samples.max()))
    hist = Histogram.from_samples(samples, bins, value_range)
    _write_frame(path, hist.to_frame())
    return hist


def emit_acf(path: str, lags: Sequence[float], values: Sequence[float], **columns) -> pd.DataFrame:
    """Write an autocorrelation table; extra keyword columns are appended."""
    frame = pd.DataFrame({"lag": np.asarray(lags, dtype=float), "acf": np.asarray(values, dtype=float)})
    for name, column in columns.items():
        frame[name] = np.asarray(column, dtype=float)
    _write_frame(path, frame)
    return frame


def emit_function_table(path: str, fn: Callable, grid) -> pd.DataFrame:
    """Write x, value columns of a function evaluated on a grid."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(fn(grid), dtype=float).reshape(-1)
    frame = pd.DataFrame({"x": grid, "value": values})
    _write_frame(path, frame)
    return frame


def emit_scatter(path: str, x, values) -> pd.DataFrame:
    """Write paired samples in the function-table layout."""
    frame = pd.DataFrame({"x": np.asarray(x, dtype=float), "value": np.asarray(values, dtype=float)})
    _write_frame(path, frame)
    return frame


def _write_frame(path: str, frame: pd.DataFrame):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame.to_csv(path, index=False)


# ==================== Readers ====================

def read_table(path: str) -> pd.DataFrame:
    """Read any CSV the bundle emits."""
    try:
        return pd.read_csv(path)
    except FileNotFoundError as exc:
        raise DataFileError(f"bundle file not found: {path}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataFileError(f"cannot parse {path}: {exc}") from exc


def read_histogram(path: str) -> Histogram:
    frame = read_table(path)
    missing = {"bin_left", "bin_right", "mass"} - set(frame.columns)
    if missing:
        raise DataFileError(f"{path} is not a histogram table (missing {sorted(missing)})")
    edges = np.append(frame["bin_left"].to_numpy(), frame["bin_right"].to_numpy()[-1])
    return Histogram(edges, frame["mass"].to_numpy())


def read_data_vector(path: str) -> DataVector:
    data = DataManager.load_json_file(path)
    try:
        return DataVector.from_dict(data)
    except (KeyError, ValueError) as exc:
        raise DataFileError(f"{path} is not a data vector: {exc}") from exc


def read_history(path: str) -> List[Dict]:
    """Generation records of a history.jsonl file."""
    records = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ParseError(number, str(exc)) from exc
    except FileNotFoundError as exc:
        raise DataFileError(f"bundle file not found: {path}") from exc
    return records


class DataManager:
    """Writes and reads one result bundle directory."""

    def __init__(self, output_dir: str, create: bool = True):
        self.output_dir = output_dir
        if create:
            self.ensure_directories()

    def ensure_directories(self):
        """Ensure the bundle directory and its sub-directories exist."""
        os.makedirs(self.output_dir, exist_ok=True)
        for directory in DIRECTORIES.values():
            os.makedirs(os.path.join(self.output_dir, directory), exist_ok=True)

    def path(self, *parts: str) -> str:
        return os.path.join(self.output_dir, *parts)

    def file_path(self, key: str) -> str:
        return self.path(BUNDLE_FILES[key])

    # ==================== Basic File Operations ====================

    @staticmethod
    def load_json_file(filepath: str) -> Dict:
        """Load data from a JSON file."""
        try:
            with open(filepath, "r", encoding="utf-8") as f:
                return json.load(f)
        except FileNotFoundError as exc:
            raise DataFileError(f"file not found: {filepath}") from exc
        except json.JSONDecodeError as e:
            raise DataFileError(f"Invalid JSON in file {filepath}: {e}") from e

    @staticmethod
    def save_json_file(filepath: str, data: Dict):
        """Save data to a JSON file."""
        directory = os.path.dirname(filepath)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2)

    # ==================== Bundle Emission ====================

    def save_observation(self, y: DataVector):
        self.save_json_file(self.file_path("observation"), y.to_dict())

    def save_history(self, history: EkiHistory, include_particles: bool = True):
        """One JSON object per generation."""
        with open(self.file_path("history"), "w", encoding="utf-8") as f:
            for record in history.records:
                f.write(json.dumps(record.to_dict(include_particles)) + "\n")

    def save_final_ensemble(self, particles: np.ndarray, names: Sequence[str]):
        """Final particles in the unconstrained space, one row per member."""
        frame = pd.DataFrame(particles, columns=list(names))
        frame.insert(0, "member", np.arange(particles.shape[0]))
        _write_frame(self.file_path("final_ensemble"), frame)

    def save_data_comparison(self, y: DataVector, fitted: np.ndarray):
        std = np.sqrt(np.diag(y.gamma)) if y.gamma is not None else np.full(y.dimension, np.nan)
        frame = pd.DataFrame({
            "label": y.labels or [f"y{i}" for i in range(y.dimension)],
            "truth": y.values,
            "truth_std": std,
            "fitted": np.asarray(fitted, dtype=float),
        })
        _write_frame(self.file_path("data_comparison"), frame)

    def save_summary(self, summary: Dict):
        self.save_json_file(self.file_path("summary"), summary)

    def save_trajectory(self, key: str, traj: Trajectory, every: int):
        _write_frame(self.file_path(key), traj.to_frame(every))

    def histogram_path(self, label: str) -> str:
        return self.path(DIRECTORIES["histograms"], f"hist_{label}.csv")

    def acf_path(self, label: str) -> str:
        return self.path(DIRECTORIES["acf"], f"acf_{label}.csv")

    def function_path(self, name: str) -> str:
        return self.path(DIRECTORIES["functions"], f"{name}.csv")

    # ==================== Bundle Loading ====================

    def load_observation(self) -> DataVector:
        return read_data_vector(self.file_path("observation"))

    def load_history(self) -> List[Dict]:
        return read_history(self.file_path("history"))

    def load_summary(self) -> Dict:
        return self.load_json_file(self.file_path("summary"))

    def load_table(self, key: str) -> pd.DataFrame:
        return read_table(self.file_path(key))

    def list_files(self, directory_key: str) -> List[str]:
        """Sorted CSV file names of one bundle sub-directory."""
        directory = self.path(DIRECTORIES[directory_key])
        if not os.path.isdir(directory):
            return []
        return sorted(name for name in os.listdir(directory) if name.endswith(".csv"))
