"""
Seeded stochastic integrators.

Euler-Maruyama for ordinary SDEs and delay SDEs, and a semi-implicit
Euler-Maruyama scheme for second-order (underdamped) Langevin equations.
All integrators draw their Gaussian increments from an RngStream in fixed
blocks, so a given (seed, stream) always yields the same trajectory.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, List, Sequence

import numpy as np

from .config import INTEGRATION_DEFAULTS
from .errors import InsufficientHistory, NonFiniteState, NonPositiveDamping
from .models import Trajectory
from .rng import RngStream

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SdeModel:
    """dx = f(x; theta) dt + S(x; theta) dW, S the square root of the diffusion.

    ``diffusion_sqrt`` may return an n x n matrix, a length-n vector
    (diagonal noise) or a scalar (isotropic noise).
    """
    dimension: int
    drift: Callable[[np.ndarray, Any], np.ndarray]
    diffusion_sqrt: Callable[[np.ndarray, Any], Any]
    name: str = "sde"


@dataclass(frozen=True)
class SddeModel:
    """Delay SDE: the drift also sees the state at t - tau_i for each delay."""
    dimension: int
    delays: Sequence[float]
    drift: Callable[[np.ndarray, List[np.ndarray], Any], np.ndarray]
    diffusion_sqrt: Callable[[np.ndarray, Any], Any]
    name: str = "sdde"

    def __post_init__(self):
        if len(self.delays) == 0 or min(self.delays) <= 0:
            raise ValueError("delays must be strictly positive")


@dataclass(frozen=True)
class Langevin2Model:
    """phi'' + gamma(phi) phi' + grad Psi(phi) = sqrt(2 sigma gamma(phi)) dW/dt."""
    damping: Callable[[float, Any], float]
    potential_grad: Callable[[float, Any], float]
    noise_scale: Callable[[Any], float]
    periodic: bool = True
    name: str = "langevin2"
    dimension: int = field(default=2, init=False)


def wrap_angle(phi):
    """Map angles to [-pi, pi)."""
    return (phi + math.pi) % TWO_PI - math.pi


def _check_common(dt: float, n_steps: int, record_every: int):
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")


def _apply_diffusion(sqrt_sigma, dw: np.ndarray) -> np.ndarray:
    if np.ndim(sqrt_sigma) == 2:
        return sqrt_sigma @ dw
    return sqrt_sigma * dw


# ==================== Ordinary SDEs ====================

def integrate_em(
    model: SdeModel,
    theta: Any,
    x0,
    dt: float,
    n_steps: int,
    rng: RngStream,
    record_every: int = INTEGRATION_DEFAULTS["record_every"],
    t0: float = 0.0,
) -> Trajectory:
    """Euler-Maruyama: x_{k+1} = x_k + f dt + S sqrt(dt) xi_k."""
    _check_common(dt, n_steps, record_every)
    x = np.array(x0, dtype=float).reshape(-1)
    if x.shape[0] != model.dimension:
        raise ValueError(f"x0 has dimension {x.shape[0]}, model expects {model.dimension}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")

    logger.debug("EM %s: %d steps, dt=%g", model.name, n_steps, dt)
    samples = np.empty((n_steps // record_every + 1, model.dimension))
    samples[0] = x
    generator = rng.generator()
    sqrt_dt = math.sqrt(dt)
    block = INTEGRATION_DEFAULTS["block_steps"]

    step = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while step < n_steps:
            xi = generator.standard_normal((min(block, n_steps - step), model.dimension))
            for dw in xi:
                noise = _apply_diffusion(model.diffusion_sqrt(x, theta), sqrt_dt * dw)
                x = x + model.drift(x, theta) * dt + noise
                step += 1
                if not np.isfinite(x).all():
                    raise NonFiniteState(step)
                if step % record_every == 0:
                    samples[step // record_every] = x
    return Trajectory(dt * record_every, samples, t0)


# ==================== Delay SDEs ====================

def _resample_history(history: Trajectory, dt: float) -> np.ndarray:
    if math.isclose(history.dt, dt, rel_tol=1e-9):
        return history.samples
    end = history.duration
    count = int(math.floor(end / dt + 1e-9)) + 1
    grid = end - dt * np.arange(count)[::-1]
    source = history.times - history.t0
    return np.column_stack(
        [np.interp(grid, source, history.samples[:, i]) for i in range(history.dimension)]
    )


def integrate_sdde(
    model: SddeModel,
    theta: Any,
    history: Trajectory,
    dt: float,
    n_steps: int,
    rng: RngStream,
    record_every: int = INTEGRATION_DEFAULTS["record_every"],
) -> Trajectory:
    """Euler-Maruyama for delay SDEs with linear interpolation of past states.

    The history's last row is the state at t = 0; the returned trajectory
    starts there and excludes the earlier history rows.
    """
    _check_common(dt, n_steps, record_every)
    if history.dimension != model.dimension:
        raise ValueError("history dimension does not match the model")
    past = _resample_history(history, dt)
    n_past = past.shape[0]

    lag_steps = [tau / dt for tau in model.delays]
    if n_past - 1 < max(lag_steps) - 1e-9:
        raise InsufficientHistory(
            f"history spans {(n_past - 1) * dt:g}, largest delay is {max(model.delays):g}"
        )

    # Delay tau sits q + r steps back: read rows (now - q - 1, now - q) with weight r.
    taps = []
    for lag in lag_steps:
        whole = math.floor(lag + 1e-9)
        frac = lag - whole
        if frac < 1e-9:
            taps.append((whole, 0.0))
        else:
            taps.append((whole + 1, 1.0 - frac))

    buffer = np.empty((n_past + n_steps, model.dimension))
    buffer[:n_past] = past
    generator = rng.generator()
    sqrt_dt = math.sqrt(dt)
    block = INTEGRATION_DEFAULTS["block_steps"]

    step = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while step < n_steps:
            xi = generator.standard_normal((min(block, n_steps - step), model.dimension))
            for dw in xi:
                now = n_past - 1 + step
                x = buffer[now]
                delayed = []
                for back, weight in taps:
                    lower = buffer[now - back]
                    if weight == 0.0:
                        delayed.append(lower)
                    else:
                        delayed.append((1.0 - weight) * lower + weight * buffer[now - back + 1])
                noise = _apply_diffusion(model.diffusion_sqrt(x, theta), sqrt_dt * dw)
                x_next = x + model.drift(x, delayed, theta) * dt + noise
                step += 1
                if not np.isfinite(x_next).all():
                    raise NonFiniteState(step)
                buffer[now + 1] = x_next
    samples = buffer[n_past - 1::record_every]
    return Trajectory(dt * record_every, samples, history.t0 + history.duration)


# ==================== Second-order Langevin ====================

def integrate_langevin2(
    model: Langevin2Model,
    theta: Any,
    phi0: float,
    v0: float,
    dt: float,
    n_steps: int,
    rng: RngStream,
    record_every: int = INTEGRATION_DEFAULTS["record_every"],
) -> Trajectory:
    """Semi-implicit Euler-Maruyama for the underdamped Langevin equation.

    The velocity takes an Euler-Maruyama step, then the angle moves with the
    new velocity. The angle is integrated unwrapped and reported in
    [-pi, pi) when the model is periodic. Columns are (phi, v).
    """
    _check_common(dt, n_steps, record_every)
    phi = float(phi0)
    v = float(v0)
    if not (math.isfinite(phi) and math.isfinite(v)):
        raise ValueError("initial angle and velocity must be finite")
    sigma = float(model.noise_scale(theta))
    if sigma < 0:
        raise ValueError("noise scale must be non-negative")

    samples = np.empty((n_steps // record_every + 1, 2))
    samples[0] = (wrap_angle(phi) if model.periodic else phi, v)
    generator = rng.generator()
    sqrt_dt = math.sqrt(dt)
    block = INTEGRATION_DEFAULTS["block_steps"]

    step = 0
    while step < n_steps:
        xi = generator.standard_normal(min(block, n_steps - step))
        for dw in xi:
            gamma = model.damping(phi, theta)
            if not gamma > 0:
                raise NonPositiveDamping(phi)
            force = -gamma * v - model.potential_grad(phi, theta)
            v = v + force * dt + math.sqrt(2.0 * sigma * gamma) * sqrt_dt * dw
            phi = phi + v * dt
            step += 1
            if not (math.isfinite(phi) and math.isfinite(v)):
                raise NonFiniteState(step)
            if step % record_every == 0:
                samples[step // record_every] = (wrap_angle(phi) if model.periodic else phi, v)
    return Trajectory(dt * record_every, samples)
