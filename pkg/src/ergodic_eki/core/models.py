"""
Data models for ergodic-eki.
Contains trajectories, statistics requests, data vectors and EKI ensembles.
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd


@dataclass
class Trajectory:
    """Uniformly sampled realization of a state process."""
    dt: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim == 1:
            self.samples = self.samples[:, np.newaxis]
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.samples.ndim != 2 or self.samples.shape[0] < 1:
            raise ValueError("samples must be a non-empty T x n matrix")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("trajectory samples must be finite")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def dimension(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        """Time spanned by the rows, (T - 1) * dt."""
        return (self.n_samples - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    def component(self, index: int) -> np.ndarray:
        """Return one state component as a 1-D array."""
        return self.samples[:, index]

    def select(self, components: Sequence[int]) -> 'Trajectory':
        """Project onto a subset of components."""
        return Trajectory(self.dt, self.samples[:, list(components)], self.t0)

    def window(self, start_time: float, length: Optional[float] = None) -> 'Trajectory':
        """Rows from start_time (relative to t0) over the given length."""
        first = int(round(start_time / self.dt))
        if length is None:
            last = self.n_samples
        else:
            last = first + int(round(length / self.dt)) + 1
        return Trajectory(self.dt, self.samples[first:last], self.t0 + first * self.dt)

    def to_frame(self, every: int = 1) -> pd.DataFrame:
        """Tabular form with columns t, x1, ..., xn."""
        rows = slice(None, None, max(1, every))
        frame = pd.DataFrame(
            self.samples[rows],
            columns=[f"x{i + 1}" for i in range(self.dimension)],
        )
        frame.insert(0, "t", self.times[rows])
        return frame


@dataclass
class AcfRequest:
    """Autocorrelation samples of one component at the given lag times."""
    component: int
    lags: List[float]

    @classmethod
    def from_dict(cls, data: Dict) -> 'AcfRequest':
        return cls(component=int(data['component']), lags=[float(v) for v in data['lags']])

    def to_dict(self) -> Dict:
        return {'component': self.component, 'lags': list(self.lags)}


@dataclass
class PsdRequest:
    """Polynomial fit to the log10 power spectral density of one component."""
    component: int
    degree: int
    band: Optional[Tuple[float, float]] = None

    @classmethod
    def from_dict(cls, data: Dict) -> 'PsdRequest':
        band = data.get('band')
        return cls(
            component=int(data['component']),
            degree=int(data['degree']),
            band=tuple(float(v) for v in band) if band else None,
        )

    def to_dict(self) -> Dict:
        data = {'component': self.component, 'degree': self.degree}
        if self.band is not None:
            data['band'] = list(self.band)
        return data


@dataclass
class StatisticsSpec:
    """Declarative description of the ergodic statistics forming y."""
    moment_terms: List[Tuple[int, ...]] = field(default_factory=list)
    acf_requests: List[AcfRequest] = field(default_factory=list)
    psd_requests: List[PsdRequest] = field(default_factory=list)
    burn_in: Optional[float] = None
    averaging_window: Optional[float] = None

    def __post_init__(self):
        self.moment_terms = [tuple(int(i) for i in term) for term in self.moment_terms]
        for request in self.psd_requests:
            if request.degree < 0:
                raise ValueError("polynomial degree must be >= 0")
        if self.averaging_window is not None and self.averaging_window <= 0:
            raise ValueError("averaging window must be positive")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn-in must be non-negative")

    @classmethod
    def from_dict(cls, data: Dict) -> 'StatisticsSpec':
        """Build from a config table.

        Moment terms may be listed explicitly under ``moments.terms`` or
        generated from ``moments.components`` with ``max_order`` and
        ``kind`` (``all`` multisets or ``marginal`` powers) plus optional
        ``cross`` terms.
        """
        terms: List[Tuple[int, ...]] = []
        moments = data.get('moments', {})
        if 'terms' in moments:
            terms.extend(tuple(term) for term in moments['terms'])
        if 'components' in moments:
            components = moments['components']
            max_order = int(moments.get('max_order', 2))
            if moments.get('kind', 'all') == 'marginal':
                terms.extend(marginal_moment_terms(components, max_order))
            else:
                terms.extend(moment_terms_up_to(components, max_order))
        terms.extend(tuple(term) for term in moments.get('cross', []))
        return cls(
            moment_terms=terms,
            acf_requests=[AcfRequest.from_dict(item) for item in data.get('acf', [])],
            psd_requests=[PsdRequest.from_dict(item) for item in data.get('psd', [])],
            burn_in=data.get('burn_in'),
            averaging_window=data.get('averaging_window'),
        )

    def to_dict(self) -> Dict:
        data = {
            'moments': {'terms': [list(term) for term in self.moment_terms]},
            'acf': [request.to_dict() for request in self.acf_requests],
            'psd': [request.to_dict() for request in self.psd_requests],
        }
        if self.burn_in is not None:
            data['burn_in'] = self.burn_in
        if self.averaging_window is not None:
            data['averaging_window'] = self.averaging_window
        return data

    @property
    def dimension(self) -> int:
        """Length J of the assembled data vector."""
        return (
            len(self.moment_terms)
            + sum(len(request.lags) for request in self.acf_requests)
            + sum(request.degree + 1 for request in self.psd_requests)
        )

    def labels(self) -> List[str]:
        """Per-entry descriptors in assembly order."""
        labels = [
            "E[" + "*".join(f"x{i + 1}" for i in term) + "]"
            for term in self.moment_terms
        ]
        for request in self.acf_requests:
            labels.extend(f"acf[x{request.component + 1}]({lag:g})" for lag in request.lags)
        for request in self.psd_requests:
            labels.extend(
                f"psd[x{request.component + 1}].c{k}" for k in range(request.degree + 1)
            )
        return labels

    def components(self) -> List[int]:
        """Every state component the statistics read."""
        used = {i for term in self.moment_terms for i in term}
        used.update(request.component for request in self.acf_requests)
        used.update(request.component for request in self.psd_requests)
        return sorted(used)

    def with_burn_in(self, burn_in: Optional[float]) -> 'StatisticsSpec':
        return StatisticsSpec(
            self.moment_terms, self.acf_requests, self.psd_requests,
            burn_in, self.averaging_window,
        )


def moment_terms_up_to(components: Sequence[int], max_order: int) -> List[Tuple[int, ...]]:
    """All multisets of the components with cardinality 1..max_order."""
    terms: List[Tuple[int, ...]] = []
    for order in range(1, max_order + 1):
        terms.extend(combinations_with_replacement(list(components), order))
    return terms


def marginal_moment_terms(components: Sequence[int], max_order: int) -> List[Tuple[int, ...]]:
    """Powers x_i^m of single components, ordered by component then order."""
    return [(i,) * order for i in components for order in range(1, max_order + 1)]


@dataclass
class DataVector:
    """Realized statistics vector with its noise covariance."""
    values: np.ndarray
    gamma: Optional[np.ndarray] = None
    labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.labels and len(self.labels) != len(self.values):
            raise ValueError("values and labels must have equal length")
        if self.gamma is not None:
            self.gamma = np.asarray(self.gamma, dtype=float)
            if self.gamma.shape != (len(self.values), len(self.values)):
                raise ValueError("gamma must be J x J")
            self.gamma = 0.5 * (self.gamma + self.gamma.T)

    @property
    def dimension(self) -> int:
        return len(self.values)

    def regularized_gamma(self, jitter: float = 1e-8) -> np.ndarray:
        """Gamma + jitter * trace(Gamma) / J * I, falling back to I-scaled jitter."""
        if self.gamma is None:
            raise ValueError("data vector has no noise covariance")
        size = self.dimension
        scale = np.trace(self.gamma) / size
        if scale <= 0:
            scale = 1.0
        return self.gamma + jitter * scale * np.eye(size)

    @classmethod
    def from_dict(cls, data: Dict) -> 'DataVector':
        values = np.asarray(data['values'], dtype=float)
        gamma = data.get('gamma')
        if gamma is not None:
            gamma = np.asarray(gamma, dtype=float).reshape(len(values), len(values))
        return cls(values=values, gamma=gamma, labels=list(data.get('labels', [])))

    def to_dict(self) -> Dict:
        data = {'values': self.values.tolist(), 'labels': list(self.labels)}
        if self.gamma is not None:
            data['gamma'] = self.gamma.ravel().tolist()
        return data


@dataclass
class Ensemble:
    """Parameter particles (rows) at one EKI generation."""
    particles: np.ndarray
    generation: int = 0

    def __post_init__(self):
        self.particles = np.atleast_2d(np.asarray(self.particles, dtype=float))
        if self.particles.shape[0] < 2:
            raise ValueError("an ensemble needs at least two members")
        if not np.all(np.isfinite(self.particles)):
            raise ValueError("ensemble particles must be finite")

    @property
    def size(self) -> int:
        return self.particles.shape[0]

    @property
    def dimension(self) -> int:
        return self.particles.shape[1]

    def mean(self) -> np.ndarray:
        return self.particles.mean(axis=0)


@dataclass
class GenerationRecord:
    """One EKI generation: particles, forward values and mean misfit.

    ``misfit_mean`` is the data misfit of G evaluated at the ensemble-mean
    parameter, or of the mean forward values when that evaluation failed.
    """
    generation: int
    particles: np.ndarray
    g_values: np.ndarray
    misfit_mean: float
    failed_members: List[int] = field(default_factory=list)

    def to_dict(self, include_particles: bool = False) -> Dict:
        data = {
            'gen': self.generation,
            'misfit_mean': self.misfit_mean,
            'failed_members': list(self.failed_members),
        }
        if include_particles:
            data['particles'] = self.particles.tolist()
            data['g_values'] = self.g_values.tolist()
        return data


@dataclass
class EkiHistory:
    """Sequence of generation records plus the final ensemble."""
    records: List[GenerationRecord] = field(default_factory=list)
    final: Optional[Ensemble] = None

    def append(self, record: GenerationRecord):
        if not np.isfinite(record.misfit_mean):
            raise ValueError("recorded misfit must be finite")
        self.records.append(record)

    @property
    def misfits(self) -> np.ndarray:
        return np.array([record.misfit_mean for record in self.records])

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class PriorSpec:
    """Initial-ensemble distribution of one named parameter slice.

    Ranges are given in raw (physical) space; ``transform`` names the map to
    the unconstrained space the ensemble lives in.
    """
    name: str
    kind: str = "uniform"
    low: float = 0.0
    high: float = 1.0
    mean: float = 0.0
    std: float = 1.0
    transform: str = "identity"
    size: int = 1

    def __post_init__(self):
        if self.kind not in ("uniform", "normal"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind == "uniform" and self.high < self.low:
            raise ValueError(f"prior {self.name}: high < low")
        if self.kind == "normal" and self.std < 0:
            raise ValueError(f"prior {self.name}: negative std")
        if self.transform == "log" and self.kind == "uniform" and self.low <= 0:
            raise ValueError(f"prior {self.name}: log-transformed range must be positive")

    @classmethod
    def from_dict(cls, name: str, data: Dict) -> 'PriorSpec':
        return cls(
            name=name,
            kind=data.get('kind', 'uniform'),
            low=float(data.get('low', 0.0)),
            high=float(data.get('high', 1.0)),
            mean=float(data.get('mean', 0.0)),
            std=float(data.get('std', 1.0)),
            transform=data.get('transform', 'identity'),
            size=int(data.get('size', 1)),
        )


@dataclass
class StoppingRule:
    """Fixed generation count, optionally with the discrepancy principle."""
    kind: str = "fixed"
    tau: float = 1.0

    def should_stop(self, misfit_mean: float, data_dimension: int) -> bool:
        if self.kind == "discrepancy":
            return misfit_mean <= self.tau * data_dimension / 2.0
        return False
