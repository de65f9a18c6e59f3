"""
Ergodic statistics of trajectories.

Turns trajectories into the data vector y (moments, autocorrelation samples
and log-PSD polynomial coefficients) and estimates its noise covariance by
batch means.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial
from scipy.signal import welch

from .config import STATISTICS_DEFAULTS
from .errors import EmptyBand, InvalidStatistics, WindowTooShort
from .models import DataVector, StatisticsSpec, Trajectory

logger = logging.getLogger(__name__)


# ==================== Averaging window ====================

def effective_burn_in(traj: Trajectory, spec: StatisticsSpec) -> float:
    """Configured burn-in, or the larger of 10% of the record and 10 time units."""
    if spec.burn_in is not None:
        return float(spec.burn_in)
    return max(
        STATISTICS_DEFAULTS["burn_in_fraction"] * traj.duration,
        STATISTICS_DEFAULTS["burn_in_time"],
    )


def averaging_samples(traj: Trajectory, spec: StatisticsSpec) -> np.ndarray:
    """Rows of the post-burn-in averaging window."""
    first = int(round(effective_burn_in(traj, spec) / traj.dt))
    if spec.averaging_window is None:
        rows = traj.samples[first:]
    else:
        count = int(round(spec.averaging_window / traj.dt))
        rows = traj.samples[first:first + count]
        if rows.shape[0] < count:
            raise WindowTooShort(
                f"need {spec.averaging_window:g} time units after burn-in, "
                f"trajectory holds {max(rows.shape[0], 0) * traj.dt:g}"
            )
    if rows.shape[0] < 2:
        raise WindowTooShort("trajectory is not longer than the burn-in")
    return rows


def _lag_steps(lag: float, dt: float) -> int:
    steps = int(round(lag / dt))
    if lag < 0 or abs(steps * dt - lag) > 1e-6 * dt:
        raise InvalidStatistics(f"lag {lag:g} is not a non-negative multiple of dt={dt:g}")
    return steps


def _check_component(traj: Trajectory, component: int):
    if not 0 <= component < traj.dimension:
        raise InvalidStatistics(
            f"component {component} outside trajectory of dimension {traj.dimension}"
        )


# ==================== Statistics ====================

def compute_moments(traj: Trajectory, spec: StatisticsSpec) -> np.ndarray:
    """Time averages of prod_{j in M} x_j over the averaging window."""
    rows = averaging_samples(traj, spec)
    values = np.empty(len(spec.moment_terms))
    for index, term in enumerate(spec.moment_terms):
        for component in term:
            _check_component(traj, component)
        values[index] = np.prod(rows[:, list(term)], axis=1).mean()
    return values


def compute_acf(
    traj: Trajectory,
    component: int,
    lags: Sequence[float],
    burn_in: float = 0.0,
) -> np.ndarray:
    """Autocovariance at each lag divided by the lag-0 autocovariance.

    Samples are mean-removed and every lag uses the 1/N normalization, so
    |acf| <= 1. A constant series has acf 1 at lag 0 and 0 elsewhere.
    """
    _check_component(traj, component)
    first = int(round(burn_in / traj.dt))
    x = traj.samples[first:, component]
    size = x.shape[0]
    if size < 2:
        raise WindowTooShort("trajectory is not longer than the burn-in")
    centered = x - x.mean()
    c0 = np.dot(centered, centered) / size

    values = np.empty(len(lags))
    for index, lag in enumerate(lags):
        steps = _lag_steps(lag, traj.dt)
        if steps >= size:
            raise WindowTooShort(f"lag {lag:g} exceeds the averaging window")
        if c0 == 0.0:
            values[index] = 1.0 if steps == 0 else 0.0
            continue
        ck = np.dot(centered[:size - steps], centered[steps:]) / size
        values[index] = ck / c0
    return values


def welch_psd(
    x: np.ndarray,
    dt: float,
    n_segments: int = STATISTICS_DEFAULTS["welch_segments"],
) -> Tuple[np.ndarray, np.ndarray]:
    """One-sided Welch density estimate: Hann window, 50% overlap."""
    nperseg = int(2 * x.shape[0] / (n_segments + 1))
    if nperseg < 8:
        raise WindowTooShort(
            f"{x.shape[0]} samples cannot support {n_segments} Welch segments"
        )
    return welch(
        x, fs=1.0 / dt, window="hann", nperseg=nperseg, noverlap=nperseg // 2,
        detrend="constant", scaling="density",
    )


def default_band(frequencies: np.ndarray) -> Tuple[float, float]:
    """Skip the lowest Welch bins and everything above half-Nyquist."""
    skip = STATISTICS_DEFAULTS["psd_skip_bins"]
    nyquist = frequencies[-1]
    low = frequencies[min(skip, len(frequencies) - 1)]
    return low, STATISTICS_DEFAULTS["psd_max_fraction_of_nyquist"] * nyquist


def compute_psd_polyfit(
    traj: Trajectory,
    component: int,
    degree: int,
    band: Optional[Tuple[float, float]] = None,
    burn_in: float = 0.0,
) -> np.ndarray:
    """Least-squares polynomial in frequency fitted to log10 PSD over the band.

    Coefficients are returned constant term first, length degree + 1.
    """
    if degree < 0:
        raise ValueError("polynomial degree must be >= 0")
    _check_component(traj, component)
    first = int(round(burn_in / traj.dt))
    frequencies, density = welch_psd(traj.samples[first:, component], traj.dt)

    nyquist = 0.5 / traj.dt
    low, high = band if band is not None else default_band(frequencies)
    if band is not None and not 0 < low < high <= nyquist:
        raise InvalidStatistics(f"band ({low:g}, {high:g}) not within (0, {nyquist:g}]")
    mask = (frequencies >= low) & (frequencies <= high) & (frequencies > 0)
    if np.count_nonzero(mask) < degree + 1:
        raise EmptyBand(
            f"band ({low:g}, {high:g}) holds {np.count_nonzero(mask)} frequencies, "
            f"degree {degree} needs {degree + 1}"
        )
    log_density = np.log10(np.maximum(density[mask], np.finfo(float).tiny))
    return polynomial.polyfit(frequencies[mask], log_density, degree)


def predict_log_psd(coefficients: np.ndarray, frequencies) -> np.ndarray:
    """Evaluate a fitted log10-PSD polynomial."""
    return polynomial.polyval(frequencies, coefficients)


# ==================== Data vector ====================

def _statistics_values(traj: Trajectory, spec: StatisticsSpec) -> np.ndarray:
    rows = averaging_samples(traj, spec)
    window = Trajectory(traj.dt, rows)
    flat = StatisticsSpec(spec.moment_terms, burn_in=0.0)
    parts = [compute_moments(window, flat)] if spec.moment_terms else []
    for request in spec.acf_requests:
        parts.append(compute_acf(window, request.component, request.lags))
    for request in spec.psd_requests:
        parts.append(compute_psd_polyfit(window, request.component, request.degree, request.band))
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)


def assemble_data(traj: Trajectory, spec: StatisticsSpec) -> DataVector:
    """Moments, then ACF entries, then PSD coefficients, in StatisticsSpec order."""
    return DataVector(values=_statistics_values(traj, spec), labels=spec.labels())


def estimate_gamma(traj: Trajectory, spec: StatisticsSpec, n_batches: int) -> np.ndarray:
    """Batch-means covariance of the full-window statistics vector.

    The averaging window is cut into ``n_batches`` disjoint blocks; the
    covariance of the per-block statistics is scaled by block length over
    window length.
    """
    if n_batches < 2:
        raise ValueError("n_batches must be >= 2")
    rows = averaging_samples(traj, spec)
    block = rows.shape[0] // n_batches
    if block < 2:
        raise WindowTooShort(f"window of {rows.shape[0]} samples cannot hold {n_batches} batches")

    block_spec = StatisticsSpec(
        spec.moment_terms, spec.acf_requests, spec.psd_requests, burn_in=0.0,
    )
    batch_stats = np.array([
        _statistics_values(Trajectory(traj.dt, rows[b * block:(b + 1) * block]), block_spec)
        for b in range(n_batches)
    ])
    gamma = np.atleast_2d(np.cov(batch_stats, rowvar=False, ddof=1))
    gamma *= block / rows.shape[0]
    logger.debug("Gamma from %d batches of %d samples", n_batches, block)
    return 0.5 * (gamma + gamma.T)
