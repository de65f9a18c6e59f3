"""
Experiment orchestration.

run_experiment obtains y and Gamma (simulated truth or ingested series),
runs EKI on the configured model, simulates the fitted model at the final
ensemble mean over a long validation window and writes the result bundle.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .data_manager import (
    DataManager,
    Histogram,
    compare_invariant_measures,
    emit_acf,
    emit_function_table,
    emit_histogram,
    emit_scatter,
    ingest_timeseries,
)
from .eki import InverseProblem, default_ensemble_size, run_eki, sample_initial_ensemble
from .errors import ConfigError, ErgodicEkiError, IntegrationError
from .experiment_config import ExperimentConfig, ModelConfig
from .models import DataVector, EkiHistory, StatisticsSpec, Trajectory
from .observables import assemble_data, compute_acf, effective_burn_in, estimate_gamma
from .rng import (
    STREAM_ENSEMBLE_INIT,
    STREAM_TRUTH,
    STREAM_VALIDATION,
    RngStream,
)
from .systems import ModelSpec, build_model, l96_closure_samples, pca_variance_fractions, simulate

logger = logging.getLogger(__name__)


@dataclass
class ObservedData:
    """The data trajectory and the statistics drawn from it."""
    trajectory: Trajectory
    y: DataVector
    statistics: StatisticsSpec
    source: str
    truth_spec: Optional[ModelSpec] = None
    full_state: Optional[Trajectory] = None


@dataclass
class ResultBundle:
    """Everything an experiment produced, plus where it was written."""
    output_dir: str
    y: DataVector
    history: EkiHistory
    fitted_values: np.ndarray
    final_mean: np.ndarray
    histograms: Dict[str, Tuple[Histogram, Histogram]] = field(default_factory=dict)
    tv_distances: Dict[str, float] = field(default_factory=dict)
    summary: Dict = field(default_factory=dict)
    files: List[str] = field(default_factory=list)


def _n_steps(duration: float, dt: float) -> int:
    return max(1, int(math.ceil(duration / dt - 1e-9)))


def _time_step(config: ExperimentConfig, spec: ModelSpec) -> float:
    return config.dt if config.dt is not None else spec.default_dt


def _component_label(index: int) -> str:
    return f"x{index + 1}"


# ==================== Data ====================

def simulate_truth(
    model_config: ModelConfig,
    config: ExperimentConfig,
    rng: RngStream,
    observe: Optional[List[int]] = None,
) -> Tuple[Trajectory, Trajectory, ModelSpec]:
    """Run a truth model for burn-in plus the data window.

    Returns the observed trajectory, the full state and the truth spec.
    """
    spec = build_model(model_config.name, model_config.constants, key="data.truth")
    try:
        vector = spec.pack(model_config.params)
    except (ErgodicEkiError, ValueError, TypeError) as exc:
        raise ConfigError("data.truth.params", str(exc)) from exc
    dt = config.data.dt or _time_step(config, spec)
    record_every = config.data.record_every or config.record_every
    burn_in = config.statistics.burn_in or 0.0
    n_steps = _n_steps(burn_in + config.truth_window, dt)
    logger.info("simulating truth %s: %d steps of dt=%g", spec.name, n_steps, dt)
    full = simulate(spec, vector, dt, n_steps, rng, record_every, full_state=True)
    observed = full.select(spec.observed) if spec.observed is not None else full
    if observe is not None:
        observed = observed.select(observe)
    return observed, full, spec


def observe_data(config: ExperimentConfig, with_data: bool = False) -> ObservedData:
    """Obtain the data trajectory and the realized data vector with Gamma.

    File data is used only when ``with_data`` is set; otherwise file-based
    experiments simulate their stand-in truth instead.
    """
    rng = RngStream(config.seed).child(STREAM_TRUTH)
    statistics = config.statistics
    truth_spec, full_state = None, None

    if config.data.source == "file" and with_data:
        source = config.data.file
        traj = ingest_timeseries(source.path, source.column, source.sampling_interval, source.remove_mean)
        statistics = statistics.with_burn_in(0.0)
        origin = f"file:{source.path}"
    else:
        truth = config.data.truth if config.data.source == "simulate" else config.data.standin
        if truth is None:
            raise ConfigError("data.standin", "file data without --with-data needs a stand-in truth")
        traj, full_state, truth_spec = simulate_truth(truth, config, rng, config.data.observe)
        origin = f"simulate:{truth.name}"

    # y and Gamma use the whole post-burn-in record; Gamma is rescaled to
    # the forward averaging window.
    truth_statistics = StatisticsSpec(
        statistics.moment_terms, statistics.acf_requests, statistics.psd_requests,
        burn_in=effective_burn_in(traj, statistics),
    )
    y = assemble_data(traj, truth_statistics)
    gamma = estimate_gamma(traj, truth_statistics, config.n_batches)
    record_length = traj.duration - truth_statistics.burn_in
    gamma *= record_length / config.statistics.averaging_window
    if config.gamma_kind == "diagonal":
        gamma = np.diag(np.diag(gamma))
    logger.info("data vector of dimension %d from %s", y.dimension, origin)
    return ObservedData(
        trajectory=traj,
        y=DataVector(y.values, gamma, y.labels),
        statistics=statistics,
        source=origin,
        truth_spec=truth_spec,
        full_state=full_state,
    )


# ==================== Forward map ====================

@dataclass
class ForwardMap:
    """theta -> statistics of one forward run of the fitted model."""
    spec: ModelSpec
    statistics: StatisticsSpec
    dt: float
    n_steps: int
    record_every: int = 1

    def trajectory(self, theta: np.ndarray, rng: RngStream, n_steps: Optional[int] = None) -> Trajectory:
        return simulate(self.spec, theta, self.dt, n_steps or self.n_steps, rng, self.record_every)

    def __call__(self, theta: np.ndarray, rng: RngStream) -> np.ndarray:
        return assemble_data(self.trajectory(theta, rng), self.statistics).values


def build_forward(config: ExperimentConfig, spec: ModelSpec) -> ForwardMap:
    dt = _time_step(config, spec)
    burn_in = config.statistics.burn_in or 0.0
    return ForwardMap(
        spec=spec,
        statistics=config.statistics,
        dt=dt,
        n_steps=_n_steps(burn_in + config.statistics.averaging_window, dt),
        record_every=config.record_every,
    )


# ==================== Experiment ====================

def run_experiment(
    config: ExperimentConfig,
    with_data: bool = False,
    output_dir: Optional[str] = None,
    progress: bool = False,
) -> ResultBundle:
    """Data, EKI, validation run and bundle emission for one config."""
    output_dir = output_dir or config.output_dir or os.path.join("results", config.name)
    seed_stream = RngStream(config.seed)

    data = observe_data(config, with_data)
    spec = build_model(config.model.name, config.model.constants, reference=data.trajectory)
    if spec.n_parameters == 0:
        raise ConfigError("model.name", f"{spec.name} has no parameters to learn")
    forward = build_forward(config, spec)
    problem = InverseProblem(forward, data.y, spec.layout)

    priors = config.eki.priors_for(spec.layout)
    ensemble_size = config.eki.ensemble_size or default_ensemble_size(spec.n_parameters)
    init = sample_initial_ensemble(priors, ensemble_size, seed_stream.child(STREAM_ENSEMBLE_INIT), spec.layout)
    logger.info(
        "EKI on %s: %d parameters, %d data, %d members, %d generations",
        spec.name, spec.n_parameters, data.y.dimension, ensemble_size, config.eki.max_gens,
    )
    history = run_eki(
        problem, init,
        max_gens=config.eki.max_gens,
        stop=config.eki.stopping,
        rng=seed_stream,
        eval_budget=config.eki.n_jobs,
        perturb=config.eki.perturb,
        progress=progress,
    )
    final_mean = history.final.mean()

    validation_stream = seed_stream.child(STREAM_VALIDATION)
    fitted_values = forward(final_mean, validation_stream.child(0))
    validation = _validation_run(config, forward, final_mean, validation_stream.child(1))

    bundle = ResultBundle(
        output_dir=output_dir,
        y=data.y,
        history=history,
        fitted_values=fitted_values,
        final_mean=final_mean,
    )
    write_bundle(bundle, config, data, spec, validation)
    return bundle


def _validation_run(
    config: ExperimentConfig,
    forward: ForwardMap,
    theta: np.ndarray,
    rng: RngStream,
) -> Optional[Trajectory]:
    burn_in = config.statistics.burn_in or 0.0
    duration = burn_in + config.validation.factor * config.statistics.averaging_window
    try:
        traj = forward.trajectory(theta, rng, _n_steps(duration, forward.dt))
    except IntegrationError as exc:
        logger.warning("validation run of the fitted model failed: %s", exc)
        return None
    return traj.window(burn_in)


# ==================== Bundle ====================

def write_bundle(
    bundle: ResultBundle,
    config: ExperimentConfig,
    data: ObservedData,
    spec: ModelSpec,
    validation: Optional[Trajectory],
):
    """Emit every bundle file; nothing written depends on wall-clock time."""
    manager = DataManager(bundle.output_dir)
    layout = spec.layout

    manager.save_observation(bundle.y)
    manager.save_history(bundle.history)
    manager.save_final_ensemble(bundle.history.final.particles, _column_names(layout))
    manager.save_data_comparison(bundle.y, bundle.fitted_values)

    truth_window = data.trajectory.window(effective_burn_in(data.trajectory, data.statistics))
    if validation is not None:
        components = range(min(truth_window.dimension, validation.dimension))
        for component in components:
            label = _component_label(component)
            both = np.concatenate([truth_window.component(component), validation.component(component)])
            value_range = (float(both.min()), float(both.max()))
            h_true = emit_histogram(
                manager.histogram_path(f"{label}_truth"), truth_window, component,
                config.validation.bins, value_range,
            )
            h_fit = emit_histogram(
                manager.histogram_path(f"{label}_fitted"), validation, component,
                config.validation.bins, value_range,
            )
            bundle.histograms[label] = (h_true, h_fit)
            bundle.tv_distances[label] = compare_invariant_measures(h_true, h_fit)

        for request in config.statistics.acf_requests:
            lags = [0.0] + list(request.lags)
            label = _component_label(request.component)
            emit_acf(
                manager.acf_path(label), lags,
                compute_acf(truth_window, request.component, lags),
                fitted=compute_acf(validation, request.component, lags),
            )

    grid_points = config.validation.grid_points
    for name, (fn, (low, high)) in spec.functions(bundle.final_mean).items():
        emit_function_table(manager.function_path(name), fn, np.linspace(low, high, grid_points))
    if data.truth_spec is not None and data.truth_spec.name == "lorenz96_multiscale":
        c = data.truth_spec.constants
        x, term = l96_closure_samples(data.full_state, c["K"], c["J"], c["h"], c["c"])
        stride = max(1, x.shape[0] // 5000)
        emit_scatter(manager.function_path("closure_truth"), x[::stride], term[::stride])

    every = config.validation.trajectory_every
    if every > 0:
        manager.save_trajectory("trajectory_truth", data.trajectory, every)
        if validation is not None:
            manager.save_trajectory("trajectory_fitted", validation, every)

    bundle.summary = _summary(bundle, config, data, spec)
    manager.save_summary(bundle.summary)
    bundle.files = sorted(
        os.path.relpath(os.path.join(root, name), bundle.output_dir)
        for root, _, names in os.walk(bundle.output_dir) for name in names
    )
    logger.info("bundle written to %s (%d files)", bundle.output_dir, len(bundle.files))


def _column_names(layout) -> List[str]:
    names = []
    for s in layout.slices:
        if s.size == 1:
            names.append(s.name)
        else:
            names.extend(f"{s.name}[{i}]" for i in range(s.size))
    return names


def _summary(bundle: ResultBundle, config: ExperimentConfig, data: ObservedData, spec: ModelSpec) -> Dict:
    misfits = bundle.history.misfits
    summary = {
        "name": config.name,
        "seed": config.seed,
        "model": spec.name,
        "data_source": data.source,
        "n_parameters": spec.n_parameters,
        "data_dimension": bundle.y.dimension,
        "ensemble_size": bundle.history.final.size,
        "generations": len(bundle.history) - 1,
        "misfit_initial": float(misfits[0]),
        "misfit_final": float(misfits[-1]),
        "failed_members": sum(len(r.failed_members) for r in bundle.history.records),
        "final_mean": spec.layout.raw_dict(bundle.final_mean),
        "tv_distance": bundle.tv_distances,
    }
    if data.truth_spec is not None and data.truth_spec.name == "lorenz63_pca":
        summary["pca_variance_fractions"] = pca_variance_fractions(data.full_state).tolist()
    return summary


def simulate_only(config: ExperimentConfig, with_data: bool = False, output_dir: Optional[str] = None) -> DataVector:
    """Truth data only: observation.json, truth trajectory and histograms."""
    output_dir = output_dir or config.output_dir or os.path.join("results", config.name)
    data = observe_data(config, with_data)
    manager = DataManager(output_dir)
    manager.save_observation(data.y)
    manager.save_trajectory("trajectory_truth", data.trajectory, max(1, config.validation.trajectory_every))
    window = data.trajectory.window(effective_burn_in(data.trajectory, data.statistics))
    for component in range(window.dimension):
        emit_histogram(
            manager.histogram_path(f"{_component_label(component)}_truth"),
            window, component, config.validation.bins,
        )
    return data.y
