"""
Ensemble Kalman inversion.

Particles move by theta_j <- theta_j + C^{thetaG} (C^{GG} + Gamma)^{-1} (y_j - G(theta_j)),
with empirical covariances over the ensemble. Forward evaluations of a
generation run concurrently through joblib; each member draws from its own
(seed, generation, member) stream, so results do not depend on scheduling.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from tqdm import tqdm

from .config import EKI_DEFAULTS
from .errors import (
    AllMembersFailed,
    ErgodicEkiError,
    ForwardFailed,
    LayoutMismatch,
    SingularSystem,
)
from .funcparam import ParameterLayout
from .models import DataVector, EkiHistory, Ensemble, GenerationRecord, PriorSpec, StoppingRule
from .rng import STREAM_FORWARD, STREAM_PERTURB, RngStream

logger = logging.getLogger(__name__)

ForwardMap = Callable[[np.ndarray, RngStream], np.ndarray]

# Exceptions a forward evaluation may raise that count as member failure.
FORWARD_FAILURES = (ErgodicEkiError, ValueError, ArithmeticError, np.linalg.LinAlgError)


@dataclass
class InverseProblem:
    """y = G(theta) + eta, eta ~ N(0, Gamma), with G a noisy forward map."""
    forward: ForwardMap
    y: DataVector
    layout: Optional[ParameterLayout] = None
    jitter: float = EKI_DEFAULTS["jitter"]

    def __post_init__(self):
        if self.y.gamma is None:
            raise ValueError("the data vector needs a noise covariance")

    @property
    def data_dimension(self) -> int:
        return self.y.dimension


def default_ensemble_size(n_parameters: int) -> int:
    return max(EKI_DEFAULTS["min_ensemble_size"], 2 * n_parameters)


# ==================== Update ====================

def empirical_covariances(particles: np.ndarray, g_vals: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(C^{thetaG}, C^{GG}) with 1/J_ens normalization."""
    size = particles.shape[0]
    d_theta = particles - particles.mean(axis=0)
    d_g = g_vals - g_vals.mean(axis=0)
    return d_theta.T @ d_g / size, d_g.T @ d_g / size


def _factor(matrix: np.ndarray, jitter: float):
    scale = np.mean(np.diag(matrix))
    if not np.isfinite(scale) or scale <= 0:
        scale = 1.0
    system = matrix + jitter * scale * np.eye(matrix.shape[0])
    try:
        return cho_factor(system, lower=True)
    except (LinAlgError, ValueError) as exc:
        raise SingularSystem(f"innovation covariance not positive definite: {exc}") from exc


def eki_step(
    ens: Ensemble,
    g_vals: np.ndarray,
    y: DataVector,
    perturb: bool,
    rng: RngStream,
    jitter: float = EKI_DEFAULTS["jitter"],
) -> Ensemble:
    """One Kalman update of every particle.

    With ``perturb`` each member sees its own y + N(0, Gamma) draw, otherwise
    every member targets y itself.
    """
    g_vals = np.asarray(g_vals, dtype=float)
    if g_vals.shape != (ens.size, y.dimension):
        raise ValueError(f"g_vals must be {ens.size} x {y.dimension}, got {g_vals.shape}")
    if y.gamma is None:
        raise ValueError("the data vector needs a noise covariance")

    c_theta_g, c_gg = empirical_covariances(ens.particles, g_vals)
    factor = _factor(c_gg + y.gamma, jitter)

    targets = np.broadcast_to(y.values, g_vals.shape)
    if perturb:
        noise = rng.generator().multivariate_normal(
            np.zeros(y.dimension), y.gamma, size=ens.size, method="eigh",
        )
        targets = targets + noise
    innovations = cho_solve(factor, (targets - g_vals).T)
    particles = ens.particles + (c_theta_g @ innovations).T
    if not np.all(np.isfinite(particles)):
        raise SingularSystem("update produced non-finite particles")
    return Ensemble(particles, ens.generation + 1)


# ==================== Objective ====================

def data_misfit(g: np.ndarray, y: DataVector, jitter: float = EKI_DEFAULTS["jitter"]) -> float:
    """1/2 |Gamma^{-1/2} (y - g)|^2 with the regularized Gamma."""
    residual = y.values - np.asarray(g, dtype=float)
    try:
        factor = cho_factor(y.regularized_gamma(jitter), lower=True)
    except LinAlgError as exc:
        raise SingularSystem(f"Gamma not positive definite: {exc}") from exc
    return 0.5 * float(residual @ cho_solve(factor, residual))


def misfit(theta: np.ndarray, problem: InverseProblem, rng: RngStream) -> float:
    """Objective value from one forward evaluation."""
    try:
        g = problem.forward(np.asarray(theta, dtype=float), rng)
    except FORWARD_FAILURES as exc:
        raise ForwardFailed(str(exc)) from exc
    return data_misfit(g, problem.y, problem.jitter)


# ==================== Initial ensemble ====================

def sample_initial_ensemble(
    prior: Sequence[PriorSpec],
    ensemble_size: int,
    rng: RngStream,
    layout: Optional[ParameterLayout] = None,
) -> Ensemble:
    """i.i.d. draws per parameter in the unconstrained space.

    Uniform ranges are raw-space bounds (log-uniform for log-transformed
    slices); normal mean and std are given in the unconstrained space.
    When a layout is supplied the priors are ordered and checked against it.
    """
    if ensemble_size < 2:
        raise ValueError("ensemble size must be >= 2")
    priors = list(prior)
    if layout is not None:
        by_name = {p.name: p for p in priors}
        missing = [name for name in layout.names if name not in by_name]
        if missing:
            raise LayoutMismatch(f"no prior for {missing}")
        priors = [by_name[name] for name in layout.names]
        for p in priors:
            expected = layout.get(p.name)
            if p.size != expected.size or p.transform != expected.transform:
                raise LayoutMismatch(
                    f"prior {p.name} ({p.size}, {p.transform}) does not match layout "
                    f"({expected.size}, {expected.transform})"
                )

    generator = rng.generator()
    columns = []
    for p in priors:
        shape = (ensemble_size, p.size)
        if p.kind == "uniform":
            low, high = (np.log(p.low), np.log(p.high)) if p.transform == "log" else (p.low, p.high)
            columns.append(generator.uniform(low, high, size=shape))
        else:
            columns.append(generator.normal(p.mean, p.std, size=shape))
    return Ensemble(np.hstack(columns), generation=0)


# ==================== Iteration ====================

def _evaluate_member(forward: ForwardMap, theta: np.ndarray, stream: RngStream, size: int):
    try:
        g = np.asarray(forward(theta, stream), dtype=float).reshape(-1)
    except FORWARD_FAILURES as exc:
        return None, f"{type(exc).__name__}: {exc}"
    if g.shape[0] != size:
        return None, f"forward map returned {g.shape[0]} values, expected {size}"
    if not np.all(np.isfinite(g)):
        return None, "forward map returned non-finite values"
    return g, None


def evaluate_ensemble(
    problem: InverseProblem,
    ens: Ensemble,
    rng: RngStream,
    eval_budget: int = EKI_DEFAULTS["n_jobs"],
) -> Tuple[np.ndarray, List[int]]:
    """Forward values of every member, with failures replaced.

    A failed member takes the forward values of the successful member with
    the largest misfit in this generation.
    """
    streams = [rng.child(STREAM_FORWARD, ens.generation, j) for j in range(ens.size)]
    size = problem.data_dimension
    if eval_budget == 1:
        results = [
            _evaluate_member(problem.forward, theta, stream, size)
            for theta, stream in zip(ens.particles, streams)
        ]
    else:
        results = Parallel(n_jobs=eval_budget)(
            delayed(_evaluate_member)(problem.forward, theta, stream, size)
            for theta, stream in zip(ens.particles, streams)
        )

    failed = [j for j, (g, _) in enumerate(results) if g is None]
    succeeded = [j for j, (g, _) in enumerate(results) if g is not None]
    if not succeeded:
        raise AllMembersFailed(ens.generation)

    g_vals = np.empty((ens.size, size))
    for j in succeeded:
        g_vals[j] = results[j][0]
    if failed:
        worst = max(succeeded, key=lambda j: data_misfit(g_vals[j], problem.y, problem.jitter))
        for j in failed:
            logger.warning("generation %d member %d failed (%s)", ens.generation, j, results[j][1])
            g_vals[j] = g_vals[worst]
    return g_vals, failed


def mean_forward(
    problem: InverseProblem,
    ens: Ensemble,
    g_vals: np.ndarray,
    rng: RngStream,
) -> np.ndarray:
    """G at the ensemble-mean parameter, on its own stream.

    Falls back to the mean of the member forward values when that
    evaluation fails.
    """
    stream = rng.child(STREAM_FORWARD, ens.generation, ens.size)
    g, error = _evaluate_member(problem.forward, ens.mean(), stream, problem.data_dimension)
    if g is None:
        logger.warning("generation %d: forward map failed at the mean (%s)", ens.generation, error)
        return g_vals.mean(axis=0)
    return g


def run_eki(
    problem: InverseProblem,
    init: Ensemble,
    max_gens: int = EKI_DEFAULTS["max_gens"],
    stop: Optional[StoppingRule] = None,
    rng: Optional[RngStream] = None,
    eval_budget: int = EKI_DEFAULTS["n_jobs"],
    perturb: bool = EKI_DEFAULTS["perturb"],
    progress: bool = False,
) -> EkiHistory:
    """Alternate ensemble forward evaluation and Kalman updates.

    Records every evaluated generation; ``max_gens`` updates are applied
    unless the stopping rule fires first, and the final ensemble is
    evaluated and recorded too.
    """
    if max_gens < 1:
        raise ValueError("max_gens must be >= 1")
    stop = stop or StoppingRule()
    rng = rng or RngStream(0)
    history = EkiHistory()
    ens = init

    for gen in tqdm(range(max_gens + 1), desc="EKI", disable=not progress):
        g_vals, failed = evaluate_ensemble(problem, ens, rng, eval_budget)
        g_mean = mean_forward(problem, ens, g_vals, rng)
        misfit_mean = data_misfit(g_mean, problem.y, problem.jitter)
        history.append(GenerationRecord(gen, ens.particles.copy(), g_vals, misfit_mean, failed))
        logger.info("generation %d: mean misfit %.6g (%d failed)", gen, misfit_mean, len(failed))

        if gen == max_gens or stop.should_stop(misfit_mean, problem.data_dimension):
            break
        ens = eki_step(ens, g_vals, problem.y, perturb, rng.child(STREAM_PERTURB, gen), problem.jitter)

    history.final = ens
    return history
