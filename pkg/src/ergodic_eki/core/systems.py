"""
Benchmark dynamical systems.

Each factory returns a ModelSpec binding an integrable model (SdeModel,
SddeModel or Langevin2Model) to the parameter layout EKI works on. Fixed
constants are factory keyword arguments, so experiment configs can override
them; parameters named in ``learn`` (or the function parameterizations a
factory declares) become slices of the layout.
"""

import logging
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import DEFAULT_DT, FUNCPARAM_DEFAULTS
from .errors import ConfigError
from .funcparam import (
    GaussianBasisFunction,
    ParameterLayout,
    ParameterSlice,
    circle_centers,
    equispaced_nodes,
    gp_from_params,
    gp_slices,
    padded_range,
    softplus,
    wrap_to_circle,
)
from .models import Trajectory
from .rng import STREAM_INITIAL_STATE, RngStream
from .sde_core import (
    Langevin2Model,
    SddeModel,
    SdeModel,
    integrate_em,
    integrate_langevin2,
    integrate_sdde,
)

logger = logging.getLogger(__name__)

Model = Union[SdeModel, SddeModel, Langevin2Model]
FunctionTable = Dict[str, Tuple[Callable, Tuple[float, float]]]

KINDS = ("sde", "sdde", "langevin2")


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A named system: integrable model, parameter layout and fixed constants.

    ``prepare`` turns unpacked raw parameters into the theta object handed to
    the model's drift and diffusion; ``functions`` exposes the learned
    functions of a prepared theta with the interval they are tabulated on.
    ``initial_state`` yields x0 for SDEs, (phi0, v0) for Langevin models and,
    for delay equations, a callable building the seed history for a given dt.
    """
    name: str
    kind: str
    model: Model
    layout: ParameterLayout
    constants: Mapping[str, Any]
    prepare_fn: Callable[[Dict[str, np.ndarray]], Dict[str, Any]]
    initial_state_fn: Callable[[np.random.Generator], Any]
    functions_fn: Optional[Callable[[Dict[str, Any]], FunctionTable]] = None
    observed: Optional[Tuple[int, ...]] = None
    default_dt: float = 1e-3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "constants", MappingProxyType(dict(self.constants)))

    @property
    def dimension(self) -> int:
        return self.model.dimension

    @property
    def n_parameters(self) -> int:
        return self.layout.size

    def pack(self, raw: Mapping[str, Any]) -> np.ndarray:
        return self.layout.pack(raw)

    def prepare(self, vector) -> Dict[str, Any]:
        """Flat unconstrained vector -> theta for the model callables."""
        return self.prepare_fn(self.layout.unpack(vector))

    def initial_state(self, rng: RngStream):
        return self.initial_state_fn(rng.generator())

    def functions(self, vector) -> FunctionTable:
        if self.functions_fn is None:
            return {}
        return self.functions_fn(self.prepare(vector))


def simulate(
    spec: ModelSpec,
    vector,
    dt: float,
    n_steps: int,
    rng: RngStream,
    record_every: int = 1,
    full_state: bool = False,
) -> Trajectory:
    """Integrate a system from its sampled initial state.

    Unless ``full_state`` is set, only the model's observed components are
    returned.
    """
    theta = spec.prepare(vector)
    start = spec.initial_state(rng.child(STREAM_INITIAL_STATE))
    if spec.kind == "sde":
        traj = integrate_em(spec.model, theta, start, dt, n_steps, rng, record_every)
    elif spec.kind == "sdde":
        traj = integrate_sdde(spec.model, theta, start(dt), dt, n_steps, rng, record_every)
    else:
        phi0, v0 = start
        traj = integrate_langevin2(spec.model, theta, phi0, v0, dt, n_steps, rng, record_every)
    if spec.observed is not None and not full_state:
        traj = traj.select(spec.observed)
    return traj


# ==================== Helpers ====================

def _scalar_slices(names: Sequence[str], learn: Sequence[str], log_names: Sequence[str]):
    unknown = [name for name in learn if name not in names]
    if unknown:
        raise ValueError(f"cannot learn {unknown}; learnable scalars are {list(names)}")
    return [
        ParameterSlice(name, 1, "log" if name in log_names else "identity")
        for name in names if name in learn
    ]


def _with_scalars(fixed: Dict[str, float], raw: Mapping[str, np.ndarray]) -> Dict[str, Any]:
    theta: Dict[str, Any] = dict(fixed)
    for name in fixed:
        if name in raw:
            theta[name] = float(raw[name][0])
    return theta


def _node_interval(node_interval, reference: Optional[Trajectory], component: int, fallback):
    if node_interval is not None:
        low, high = node_interval
        return float(low), float(high)
    if reference is not None and component < reference.dimension:
        return padded_range(reference.component(component))
    return fallback


def _tabulate_gp(theta: Dict[str, Any], prefix: str, interval, transform=None):
    gp = theta[prefix]
    if transform is None:
        return gp, interval
    return (lambda x: transform(gp(x))), interval


# ==================== Lorenz 63 ====================

def lorenz63_noisy(
    alpha: float = 10.0,
    rho: float = 28.0,
    beta: float = 8.0 / 3.0,
    sigma: float = 10.0,
    learn: Sequence[str] = ("alpha", "sigma"),
    g_l: str = "linear",
    n_nodes: int = 5,
    node_interval: Optional[Tuple[float, float]] = None,
    reference: Optional[Trajectory] = None,
) -> ModelSpec:
    """Noisy Lorenz 63 with an optional GP-mean replacement of the -x2 term.

    ``g_l="linear"`` keeps g_L(x2) = x2; ``g_l="gp"`` learns g_L through a
    GP mean with ``n_nodes`` nodes spread over the x2 range.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    fixed = {"alpha": alpha, "rho": rho, "beta": beta, "sigma": sigma}
    slices = _scalar_slices(list(fixed), learn, log_names=("sigma",))
    nodes, interval = None, None
    if g_l == "gp":
        interval = _node_interval(node_interval, reference, 1, (-25.0, 25.0))
        nodes = equispaced_nodes(interval, n_nodes)
        slices += gp_slices("g_L", n_nodes)
    elif g_l != "linear":
        raise ValueError(f"g_l must be 'linear' or 'gp', got {g_l!r}")

    def prepare(raw):
        theta = _with_scalars(fixed, raw)
        theta["g_L"] = gp_from_params("g_L", raw, nodes) if g_l == "gp" else None
        theta["sqrt_sigma"] = math.sqrt(max(theta["sigma"], 0.0))
        return theta

    def drift(x, theta):
        g = x[1] if theta["g_L"] is None else theta["g_L"](x[1])
        return np.array([
            theta["alpha"] * (x[1] - x[0]),
            x[0] * (theta["rho"] - x[2]) - g,
            x[0] * x[1] - theta["beta"] * x[2],
        ])

    def functions(theta):
        if theta["g_L"] is None:
            return {}
        return {"g_L": _tabulate_gp(theta, "g_L", interval)}

    model = SdeModel(3, drift, lambda x, theta: theta["sqrt_sigma"], name="lorenz63_noisy")
    return ModelSpec(
        name="lorenz63_noisy",
        kind="sde",
        model=model,
        layout=ParameterLayout(slices),
        constants={**fixed, "g_l": g_l, "n_nodes": n_nodes},
        prepare_fn=prepare,
        initial_state_fn=lambda generator: generator.normal(0.0, 1.0, 3) + np.array([0.0, 0.0, 25.0]),
        functions_fn=functions,
        default_dt=DEFAULT_DT["lorenz63"],
    )


def lorenz63_pca_drift(a: np.ndarray) -> np.ndarray:
    """Lorenz 63 vector field in principal-component coordinates."""
    return np.array([
        2.3 * a[0] - 6.2 * a[2] - 0.49 * a[0] * a[1] - 0.57 * a[1] * a[2],
        -62.0 - 2.7 * a[1] + 0.49 * a[0] ** 2 - 0.49 * a[2] ** 2 + 0.14 * a[0] * a[2],
        -0.63 * a[0] - 13.0 * a[2] + 0.43 * a[0] * a[1] + 0.49 * a[1] * a[2],
    ])


def lorenz63_pca() -> ModelSpec:
    """Deterministic 3-D Lorenz 63 in PCA coordinates; no parameters."""
    model = SdeModel(3, lambda a, theta: lorenz63_pca_drift(a), lambda a, theta: 0.0, name="lorenz63_pca")
    return ModelSpec(
        name="lorenz63_pca",
        kind="sde",
        model=model,
        layout=ParameterLayout(),
        constants={},
        prepare_fn=lambda raw: {},
        initial_state_fn=lambda generator: generator.normal(0.0, 1.0, 3) + np.array([0.0, -20.0, 0.0]),
        default_dt=DEFAULT_DT["lorenz63"],
    )


PCA_CLOSURES = ("psi1", "psi2", "sigma1", "sigma2")


def lorenz63_pca_reduced(
    n_nodes: int = 5,
    a1_interval: Optional[Tuple[float, float]] = None,
    a2_interval: Optional[Tuple[float, float]] = None,
    reference: Optional[Trajectory] = None,
) -> ModelSpec:
    """2-D reduced model in (a1, a2) with four GP-mean closures.

    psi1 and sigma1 are functions of a2, psi2 and sigma2 of a1. The
    diffusion functions pass through softplus and drive independent noises.
    """
    a1_range = _node_interval(a1_interval, reference, 0, (-20.0, 20.0))
    a2_range = _node_interval(a2_interval, reference, 1, (-40.0, 0.0))
    nodes = {
        "psi1": equispaced_nodes(a2_range, n_nodes),
        "sigma1": equispaced_nodes(a2_range, n_nodes),
        "psi2": equispaced_nodes(a1_range, n_nodes),
        "sigma2": equispaced_nodes(a1_range, n_nodes),
    }
    slices = [s for prefix in PCA_CLOSURES for s in gp_slices(prefix, n_nodes)]

    def prepare(raw):
        return {prefix: gp_from_params(prefix, raw, nodes[prefix]) for prefix in PCA_CLOSURES}

    def drift(a, theta):
        return np.array([
            2.3 * a[0] - 0.49 * a[0] * a[1] + theta["psi1"](a[1]),
            -62.0 - 2.7 * a[1] + 0.49 * a[0] ** 2 + theta["psi2"](a[0]),
        ])

    def diffusion_sqrt(a, theta):
        return np.sqrt(softplus(np.array([theta["sigma1"](a[1]), theta["sigma2"](a[0])])))

    def functions(theta):
        return {
            "psi1": _tabulate_gp(theta, "psi1", a2_range),
            "psi2": _tabulate_gp(theta, "psi2", a1_range),
            "sigma1": _tabulate_gp(theta, "sigma1", a2_range, softplus),
            "sigma2": _tabulate_gp(theta, "sigma2", a1_range, softplus),
        }

    return ModelSpec(
        name="lorenz63_pca_reduced",
        kind="sde",
        model=SdeModel(2, drift, diffusion_sqrt, name="lorenz63_pca_reduced"),
        layout=ParameterLayout(slices),
        constants={"n_nodes": n_nodes, "a1_interval": a1_range, "a2_interval": a2_range},
        prepare_fn=prepare,
        initial_state_fn=lambda generator: generator.normal(0.0, 1.0, 2) + np.array([0.0, -20.0]),
        functions_fn=functions,
        default_dt=DEFAULT_DT["lorenz63"],
    )


def pca_variance_fractions(traj: Trajectory) -> np.ndarray:
    """Share of the total variance carried by each component."""
    variances = traj.samples.var(axis=0)
    return variances / variances.sum()


# ==================== Lorenz 96 ====================

def _advection(x: np.ndarray) -> np.ndarray:
    """-x_{k-1} (x_{k-2} - x_{k+1}) on a ring."""
    return -np.roll(x, 1) * (np.roll(x, 2) - np.roll(x, -1))


def lorenz96_multiscale(
    K: int = 36,
    J: int = 10,
    h: float = 1.0,
    F: float = 10.0,
    c: float = 10.0,
    b: float = 10.0,
) -> ModelSpec:
    """Two-scale Lorenz 96; state is x (K) followed by the fast ring y (K*J).

    y is stored k-major (y[k*J + j] = y_{j,k}), so y_{j+J,k} = y_{j,k+1}
    is a plain roll of the flat ring. Only the slow variables are observed.
    """
    if K < 4 or J < 1:
        raise ValueError("need K >= 4 and J >= 1")

    def drift(state, theta):
        x, y = state[:K], state[K:]
        y_bar = y.reshape(K, J).mean(axis=1)
        dx = _advection(x) - x + F - h * c * y_bar
        dy = c * (
            -b * np.roll(y, -1) * (np.roll(y, -2) - np.roll(y, 1))
            - y
            + (h / J) * np.repeat(x, J)
        )
        return np.concatenate([dx, dy])

    def initial_state(generator):
        x = F / 2.0 + generator.normal(0.0, 1.0, K)
        y = (h / J) * np.repeat(x, J) + generator.normal(0.0, 0.1, K * J)
        return np.concatenate([x, y])

    return ModelSpec(
        name="lorenz96_multiscale",
        kind="sde",
        model=SdeModel(K + K * J, drift, lambda state, theta: 0.0, name="lorenz96_multiscale"),
        layout=ParameterLayout(),
        constants={"K": K, "J": J, "h": h, "F": F, "c": c, "b": b},
        prepare_fn=lambda raw: {},
        initial_state_fn=initial_state,
        observed=tuple(range(K)),
        default_dt=DEFAULT_DT["lorenz96"],
    )


def lorenz96_closure(
    K: int = 36,
    J: int = 10,
    h: float = 1.0,
    F: float = 10.0,
    c: float = 10.0,
    sigma: float = 0.0,
    learn: Sequence[str] = ("sigma",),
    closure: str = "gp",
    n_nodes: int = 7,
    node_interval: Optional[Tuple[float, float]] = None,
    reference: Optional[Trajectory] = None,
) -> ModelSpec:
    """Slow-variable closure: balance term -(h^2 c / J) X_k plus psi(X_k) and noise.

    ``closure="gp"`` learns psi with a GP mean, ``closure="none"`` fixes psi = 0.
    """
    if K < 4:
        raise ValueError("need K >= 4")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    fixed = {"sigma": sigma}
    slices = _scalar_slices(list(fixed), learn, log_names=("sigma",))
    nodes, interval = None, None
    if closure == "gp":
        if node_interval is not None:
            interval = (float(node_interval[0]), float(node_interval[1]))
        elif reference is not None:
            # psi is shared by every slow variable
            interval = padded_range(reference.samples)
        else:
            interval = (-10.0, 15.0)
        nodes = equispaced_nodes(interval, n_nodes)
        slices += gp_slices("psi", n_nodes)
    elif closure != "none":
        raise ValueError(f"closure must be 'gp' or 'none', got {closure!r}")
    balance = h * h * c / J

    def prepare(raw):
        theta = _with_scalars(fixed, raw)
        theta["psi"] = gp_from_params("psi", raw, nodes) if closure == "gp" else None
        theta["sqrt_sigma"] = math.sqrt(max(theta["sigma"], 0.0))
        return theta

    def drift(x, theta):
        dx = _advection(x) - x + F - balance * x
        if theta["psi"] is not None:
            dx = dx + theta["psi"](x)
        return dx

    def functions(theta):
        if theta["psi"] is None:
            return {}
        return {"psi": _tabulate_gp(theta, "psi", interval)}

    return ModelSpec(
        name="lorenz96_closure",
        kind="sde",
        model=SdeModel(K, drift, lambda x, theta: theta["sqrt_sigma"], name="lorenz96_closure"),
        layout=ParameterLayout(slices),
        constants={"K": K, "J": J, "h": h, "F": F, "c": c, "sigma": sigma, "closure": closure},
        prepare_fn=prepare,
        initial_state_fn=lambda generator: F / 2.0 + generator.normal(0.0, 1.0, K),
        functions_fn=functions,
        default_dt=DEFAULT_DT["lorenz96"],
    )


def l96_closure_samples(traj: Trajectory, K: int, J: int, h: float, c: float) -> Tuple[np.ndarray, np.ndarray]:
    """(x_k, -h c ybar_k + (h^2 c / J) x_k) pairs from a full multiscale trajectory.

    The second entry is what psi has to reproduce on top of the balance term.
    """
    if traj.dimension != K + K * J:
        raise ValueError(f"expected the full {K + K * J}-dimensional state, got {traj.dimension}")
    x = traj.samples[:, :K]
    y_bar = traj.samples[:, K:].reshape(-1, K, J).mean(axis=2)
    term = -h * c * y_bar + (h * h * c / J) * x
    return x.ravel(), term.ravel()


# ==================== ENSO ====================

def enso_sdde(
    a: float = 1.0,
    b: float = 1.0,
    c: float = 1.0,
    sigma: float = 0.1,
    tau1: float = 1.0,
    tau2: float = 6.0,
    learn: Sequence[str] = ("a", "b", "c", "sigma"),
    history_scale: float = 0.1,
) -> ModelSpec:
    """Delayed oscillator: a tanh(x(t - tau1)) - b tanh(x(t - tau2)) - c x + sqrt(sigma) dW."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    fixed = {"a": a, "b": b, "c": c, "sigma": sigma}
    slices = _scalar_slices(list(fixed), learn, log_names=("sigma",))

    def prepare(raw):
        theta = _with_scalars(fixed, raw)
        theta["sqrt_sigma"] = math.sqrt(max(theta["sigma"], 0.0))
        return theta

    def drift(x, delayed, theta):
        return (
            theta["a"] * np.tanh(delayed[0])
            - theta["b"] * np.tanh(delayed[1])
            - theta["c"] * x
        )

    def initial_history(generator):
        level = generator.normal(0.0, history_scale)
        span = max(tau1, tau2)

        def history(dt):
            rows = int(math.ceil(span / dt - 1e-9)) + 1
            return Trajectory(dt, np.full((rows, 1), level), t0=-(rows - 1) * dt)
        return history

    model = SddeModel(
        1, (tau1, tau2), drift, lambda x, theta: theta["sqrt_sigma"], name="enso_sdde",
    )
    return ModelSpec(
        name="enso_sdde",
        kind="sdde",
        model=model,
        layout=ParameterLayout(slices),
        constants={**fixed, "tau1": tau1, "tau2": tau2},
        prepare_fn=prepare,
        initial_state_fn=initial_history,
        default_dt=DEFAULT_DT["enso"],
    )


# ==================== Butane dihedral angle ====================

def butane_reduced(
    gamma: float = 1.0,
    sigma: float = 1.0,
    weights: Optional[Sequence[float]] = None,
    n_centers: int = FUNCPARAM_DEFAULTS["basis_centers"],
    width: float = FUNCPARAM_DEFAULTS["basis_width"],
    learn: Sequence[str] = ("gamma", "sigma", "weights"),
    damping: str = "scalar",
    n_nodes: int = 5,
) -> ModelSpec:
    """Underdamped Langevin model of the dihedral angle.

    The potential is a periodic Gaussian-basis expansion with fixed centers
    and width; its weights are learned. The damping is a positive scalar
    or, with ``damping="gp"``, softplus of a GP mean on the circle.
    """
    centers = circle_centers(n_centers)
    fixed_weights = np.zeros(n_centers) if weights is None else np.asarray(weights, dtype=float)
    if fixed_weights.shape != (n_centers,):
        raise ValueError(f"expected {n_centers} potential weights")
    if gamma <= 0 or sigma < 0:
        raise ValueError("gamma must be positive and sigma non-negative")

    fixed = {"gamma": gamma, "sigma": sigma}
    scalar_names = ["gamma", "sigma"] if damping == "scalar" else ["sigma"]
    scalar_learn = [name for name in learn if name != "weights"]
    if damping == "gp" and "gamma" in scalar_learn:
        scalar_learn.remove("gamma")
    slices = _scalar_slices(scalar_names, scalar_learn, log_names=("gamma", "sigma"))
    damping_nodes = None
    if damping == "gp":
        damping_nodes = equispaced_nodes((-math.pi, math.pi), n_nodes)
        slices += gp_slices("gamma", n_nodes)
    elif damping != "scalar":
        raise ValueError(f"damping must be 'scalar' or 'gp', got {damping!r}")
    if "weights" in learn:
        slices.append(ParameterSlice("weights", n_centers))

    def prepare(raw):
        theta = _with_scalars(fixed, raw)
        theta["psi"] = GaussianBasisFunction(centers, width, raw.get("weights", fixed_weights))
        theta["gamma_fn"] = gp_from_params("gamma", raw, damping_nodes) if damping == "gp" else None
        return theta

    def damping_at(phi, theta):
        if theta["gamma_fn"] is None:
            return theta["gamma"]
        return float(softplus(theta["gamma_fn"](float(wrap_to_circle(phi)))))

    def functions(theta):
        table = {"potential": (theta["psi"], (-math.pi, math.pi))}
        if theta["gamma_fn"] is not None:
            table["damping"] = (np.vectorize(lambda phi: damping_at(phi, theta)), (-math.pi, math.pi))
        return table

    model = Langevin2Model(
        damping=damping_at,
        potential_grad=lambda phi, theta: theta["psi"].derivative(phi),
        noise_scale=lambda theta: theta["sigma"],
        name="butane_reduced",
    )
    return ModelSpec(
        name="butane_reduced",
        kind="langevin2",
        model=model,
        layout=ParameterLayout(slices),
        constants={**fixed, "n_centers": n_centers, "width": width, "damping": damping},
        prepare_fn=prepare,
        initial_state_fn=lambda generator: (generator.uniform(-math.pi, math.pi), 0.0),
        functions_fn=functions,
        default_dt=DEFAULT_DT["butane"],
    )


# ==================== Registry ====================

MODEL_REGISTRY: Dict[str, Callable[..., ModelSpec]] = {
    "lorenz63_noisy": lorenz63_noisy,
    "lorenz63_pca": lorenz63_pca,
    "lorenz63_pca_reduced": lorenz63_pca_reduced,
    "lorenz96_multiscale": lorenz96_multiscale,
    "lorenz96_closure": lorenz96_closure,
    "enso_sdde": enso_sdde,
    "butane_reduced": butane_reduced,
}

# Factories that place GP nodes from a reference trajectory.
REFERENCE_AWARE = ("lorenz63_noisy", "lorenz63_pca_reduced", "lorenz96_closure")


def build_model(
    name: str,
    constants: Optional[Mapping[str, Any]] = None,
    reference: Optional[Trajectory] = None,
    key: str = "model",
) -> ModelSpec:
    """Look up a factory by name and apply config constants."""
    if name not in MODEL_REGISTRY:
        raise ConfigError(f"{key}.name", f"unknown model {name!r}; choose from {sorted(MODEL_REGISTRY)}")
    kwargs = {
        k: tuple(v) if isinstance(v, list) and k not in ("weights",) else v
        for k, v in (constants or {}).items()
    }
    if name in REFERENCE_AWARE and reference is not None:
        kwargs["reference"] = reference
    try:
        spec = MODEL_REGISTRY[name](**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{key}.constants", str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(f"{key}.constants", str(exc)) from exc
    logger.debug("built %s with %d parameters", name, spec.n_parameters)
    return spec
