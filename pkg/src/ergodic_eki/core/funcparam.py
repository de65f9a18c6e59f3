"""
Refineable parameterizations of unknown functions.

GP-regression mean functions with learnable node values, observation error
and kernel hyperparameters, fixed-width Gaussian-basis expansions on the
circle, and the layout that maps named parameters to the flat vector EKI
works on.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .config import FUNCPARAM_DEFAULTS
from .errors import LayoutMismatch, SingularGram

logger = logging.getLogger(__name__)


# ==================== Kernels ====================

def _as_points(x) -> np.ndarray:
    """Inputs as an (m, d) array; scalars and 1-D arrays are 1-D points."""
    points = np.asarray(x, dtype=float)
    if points.ndim == 0:
        return points.reshape(1, 1)
    if points.ndim == 1:
        return points[:, np.newaxis]
    return points


def rbf_kernel(x, x_prime, amplitude: float, length_scale: float) -> float:
    """sigma_GP^2 exp(-|x - x'|^2 / (2 l^2)) for two points."""
    if length_scale <= 0:
        raise ValueError("length scale must be positive")
    diff = np.atleast_1d(np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float))
    return float(amplitude ** 2 * np.exp(-np.dot(diff, diff) / (2.0 * length_scale ** 2)))


def rbf_matrix(a, b, amplitude: float, length_scale: float) -> np.ndarray:
    """Kernel matrix between two point sets."""
    pa, pb = _as_points(a), _as_points(b)
    sq = ((pa[:, np.newaxis, :] - pb[np.newaxis, :, :]) ** 2).sum(axis=-1)
    return amplitude ** 2 * np.exp(-sq / (2.0 * length_scale ** 2))


# ==================== GP mean functions ====================

@dataclass(frozen=True, eq=False)
class RepresenterCoefficients:
    """alpha = (K + lambda^2 I)^{-1} theta' for one GP mean function."""
    alpha: np.ndarray


@dataclass(frozen=True, eq=False)
class GPMeanFunction:
    """Posterior mean of a GP regression through noisy node values.

    ``obs_error`` is a standard deviation: the observation covariance is
    obs_error^2 * I.
    """
    nodes: np.ndarray
    node_values: np.ndarray
    obs_error: float
    amplitude: float
    length_scale: float

    def __post_init__(self):
        nodes = _as_points(self.nodes)
        values = np.asarray(self.node_values, dtype=float).reshape(-1)
        if nodes.shape[0] != values.shape[0]:
            raise ValueError("one node value per node is required")
        if min(self.obs_error, self.amplitude, self.length_scale) <= 0:
            raise ValueError("obs_error, amplitude and length_scale must be positive")
        if len(np.unique(nodes, axis=0)) != nodes.shape[0]:
            raise ValueError("nodes must be distinct")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "node_values", values)

    def gram(self) -> np.ndarray:
        return rbf_matrix(self.nodes, self.nodes, self.amplitude, self.length_scale)

    @cached_property
    def coefficients(self) -> RepresenterCoefficients:
        return fit_representer(self)

    def __call__(self, x) -> np.ndarray:
        """Mean at one or many points (cached coefficients)."""
        return evaluate_mean(self, self.coefficients, x)


def fit_representer(f: GPMeanFunction) -> RepresenterCoefficients:
    """Solve (K + lambda^2 I) alpha = theta' by Cholesky.

    A diagonal jitter scaled by amplitude^2 is added only when the plain
    system fails to factor.
    """
    gram = f.gram()
    if not np.all(np.isfinite(gram)):
        raise SingularGram("Gram matrix is not finite")
    system = gram + f.obs_error ** 2 * np.eye(gram.shape[0])
    try:
        factor = cho_factor(system, lower=True)
    except LinAlgError:
        jitter = FUNCPARAM_DEFAULTS["gram_jitter"] * f.amplitude ** 2
        logger.debug("Gram system did not factor, retrying with jitter %.3g", jitter)
        try:
            factor = cho_factor(system + jitter * np.eye(gram.shape[0]), lower=True)
        except LinAlgError as exc:
            raise SingularGram(f"Gram system not positive definite: {exc}") from exc
    alpha = cho_solve(factor, f.node_values)
    if not np.all(np.isfinite(alpha)):
        raise SingularGram("representer coefficients are not finite")
    return RepresenterCoefficients(alpha)


def evaluate_mean(f: GPMeanFunction, coefficients: RepresenterCoefficients, x):
    """sum_i alpha_i k(x, x_(i)); one point in, float out."""
    multivariate = f.nodes.shape[1] > 1
    if not multivariate and np.ndim(x) == 0:
        # scalar fast path, used inside drift evaluations
        offsets = float(x) - f.nodes[:, 0]
        weights = np.exp(-offsets * offsets / (2.0 * f.length_scale ** 2))
        return float(f.amplitude ** 2 * np.dot(weights, coefficients.alpha))
    points = np.atleast_2d(np.asarray(x, dtype=float)) if multivariate else x
    values = rbf_matrix(points, f.nodes, f.amplitude, f.length_scale) @ coefficients.alpha
    if multivariate and np.ndim(x) == 1:
        return float(values[0])
    return values


def equispaced_nodes(interval: Tuple[float, float], count: int) -> np.ndarray:
    """``count`` equispaced node locations spanning the interval."""
    if count < 1:
        raise ValueError("need at least one node")
    low, high = interval
    if count == 1:
        return np.array([0.5 * (low + high)])
    return np.linspace(low, high, count)


def padded_range(values, pad: float = FUNCPARAM_DEFAULTS["node_padding"]) -> Tuple[float, float]:
    """Empirical range of the values widened by ``pad`` of its width on each side."""
    low, high = float(np.min(values)), float(np.max(values))
    width = high - low
    if width == 0:
        width = max(abs(low), 1.0)
    return low - pad * width, high + pad * width


def softplus(x):
    """log(1 + e^x), the positivity map for learned diffusion functions."""
    return np.logaddexp(0.0, x)


# ==================== Gaussian basis on the circle ====================

def wrap_to_circle(phi):
    return (np.asarray(phi, dtype=float) + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True, eq=False)
class GaussianBasisFunction:
    """sum_i w_i exp(-(phi - c_i)^2 / (2 width^2)), extended periodically."""
    centers: np.ndarray
    width: float
    weights: np.ndarray

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.width <= 0:
            raise ValueError("basis width must be positive")
        if centers.shape != weights.shape:
            raise ValueError("one weight per center is required")
        if np.any(centers < -math.pi) or np.any(centers > math.pi):
            raise ValueError("centers must lie in [-pi, pi]")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "weights", weights)

    def __call__(self, phi):
        return evaluate_gaussian_basis(self, phi)[0]

    def derivative(self, phi):
        return evaluate_gaussian_basis(self, phi)[1]


def circle_centers(count: int = FUNCPARAM_DEFAULTS["basis_centers"]) -> np.ndarray:
    """``count`` centers evenly spaced around the circle, starting at -pi."""
    return np.linspace(-math.pi, math.pi, count, endpoint=False)


def evaluate_gaussian_basis(b: GaussianBasisFunction, phi):
    """Value and derivative at phi, summing the images at wrapped phi and phi +- 2 pi."""
    wrapped = wrap_to_circle(phi)
    shifts = np.array([-2.0 * math.pi, 0.0, 2.0 * math.pi])
    # (..., image, center)
    offsets = (
        wrapped[..., np.newaxis, np.newaxis]
        + shifts[:, np.newaxis]
        - b.centers[np.newaxis, :]
    )
    bumps = b.weights * np.exp(-offsets ** 2 / (2.0 * b.width ** 2))
    value = bumps.sum(axis=(-2, -1))
    slope = (-offsets / b.width ** 2 * bumps).sum(axis=(-2, -1))
    if np.ndim(phi) == 0:
        return float(value), float(slope)
    return value, slope


# ==================== Parameter layout ====================

TRANSFORMS = ("identity", "log")


@dataclass(frozen=True)
class ParameterSlice:
    """Named contiguous block of the flat parameter vector."""
    name: str
    size: int = 1
    transform: str = "identity"

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"slice {self.name} must have positive size")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")

    def to_unconstrained(self, raw: np.ndarray) -> np.ndarray:
        if self.transform == "log":
            if np.any(raw <= 0):
                raise LayoutMismatch(f"{self.name} must be positive for the log transform")
            return np.log(raw)
        return raw

    def to_raw(self, unconstrained: np.ndarray) -> np.ndarray:
        if self.transform == "log":
            return np.exp(unconstrained)
        return np.array(unconstrained)


@dataclass(frozen=True)
class ParameterLayout:
    """Ordered slices mapping named raw parameters to the flat EKI vector."""
    slices: Tuple[ParameterSlice, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))
        names = [s.name for s in self.slices]
        if len(set(names)) != len(names):
            raise ValueError("slice names must be unique")

    @property
    def size(self) -> int:
        return sum(s.size for s in self.slices)

    @property
    def names(self) -> List[str]:
        return [s.name for s in self.slices]

    def get(self, name: str) -> Optional[ParameterSlice]:
        for s in self.slices:
            if s.name == name:
                return s
        return None

    def offsets(self) -> Dict[str, slice]:
        positions, start = {}, 0
        for s in self.slices:
            positions[s.name] = slice(start, start + s.size)
            start += s.size
        return positions

    def pack(self, raw: Mapping[str, object]) -> np.ndarray:
        """Named raw values -> flat unconstrained vector."""
        missing = [name for name in self.names if name not in raw]
        extra = [name for name in raw if self.get(name) is None]
        if missing or extra:
            raise LayoutMismatch(f"missing {missing}, unexpected {extra}")
        vector = np.empty(self.size)
        for s, position in zip(self.slices, self.offsets().values()):
            value = np.asarray(raw[s.name], dtype=float).reshape(-1)
            if value.shape[0] != s.size:
                raise LayoutMismatch(f"{s.name} expects {s.size} values, got {value.shape[0]}")
            vector[position] = s.to_unconstrained(value)
        return vector

    def unpack(self, vector) -> Dict[str, np.ndarray]:
        """Flat unconstrained vector -> named raw values (1-D arrays)."""
        vector = np.asarray(vector, dtype=float).reshape(-1)
        if vector.shape[0] != self.size:
            raise LayoutMismatch(f"vector has {vector.shape[0]} entries, layout {self.size}")
        return {
            s.name: s.to_raw(vector[position])
            for s, position in zip(self.slices, self.offsets().values())
        }

    def raw_dict(self, vector) -> Dict[str, object]:
        """Unpacked values with size-1 slices as plain floats (for reports)."""
        return {
            name: float(value[0]) if value.shape[0] == 1 else value.tolist()
            for name, value in self.unpack(vector).items()
        }


def gp_slices(prefix: str, n_nodes: int) -> List[ParameterSlice]:
    """Node values plus log-transformed obs error, amplitude and length scale."""
    return [
        ParameterSlice(f"{prefix}.values", n_nodes),
        ParameterSlice(f"{prefix}.obs_error", 1, "log"),
        ParameterSlice(f"{prefix}.amplitude", 1, "log"),
        ParameterSlice(f"{prefix}.length_scale", 1, "log"),
    ]


def gp_from_params(prefix: str, params: Mapping[str, np.ndarray], nodes: Sequence[float]) -> GPMeanFunction:
    """Build the GP mean function whose slices were declared by gp_slices."""
    return GPMeanFunction(
        nodes=np.asarray(nodes, dtype=float),
        node_values=params[f"{prefix}.values"],
        obs_error=float(params[f"{prefix}.obs_error"][0]),
        amplitude=float(params[f"{prefix}.amplitude"][0]),
        length_scale=float(params[f"{prefix}.length_scale"][0]),
    )
