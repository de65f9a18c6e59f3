"""
Tests for the benchmark systems and the model registry.
"""

import math

import numpy as np
import pytest

from ergodic_eki.core.errors import ConfigError
from ergodic_eki.core.models import Trajectory
from ergodic_eki.core.rng import RngStream
from ergodic_eki.core.systems import (
    MODEL_REGISTRY,
    build_model,
    l96_closure_samples,
    lorenz63_pca_drift,
    pca_variance_fractions,
    simulate,
)


@pytest.mark.parametrize("name, constants, size", [
    ("lorenz63_noisy", {}, 2),
    ("lorenz63_noisy", {"learn": ["alpha"], "sigma": 0.0}, 1),
    ("lorenz63_noisy", {"g_l": "gp", "learn": ["sigma"]}, 9),
    ("lorenz63_noisy", {"g_l": "gp", "learn": [], "sigma": 0.0}, 8),
    ("lorenz63_pca", {}, 0),
    ("lorenz63_pca_reduced", {}, 32),
    ("lorenz96_multiscale", {"K": 8}, 0),
    ("lorenz96_closure", {"K": 8}, 11),
    ("lorenz96_closure", {"K": 8, "learn": []}, 10),
    ("lorenz96_closure", {"K": 8, "closure": "none"}, 1),
    ("lorenz96_closure", {"K": 36}, 11),
    ("lorenz96_closure", {"K": 36, "sigma": 0.0, "learn": []}, 10),
    ("lorenz96_multiscale", {"K": 36, "J": 10}, 0),
    ("enso_sdde", {}, 4),
    ("butane_reduced", {}, 11),
    ("butane_reduced", {"damping": "gp", "learn": ["sigma", "weights"]}, 18),
])
def test_parameter_counts(name, constants, size):
    assert build_model(name, constants).n_parameters == size


def test_registry_errors():
    assert "lorenz96_closure" in MODEL_REGISTRY
    with pytest.raises(ConfigError) as info:
        build_model("lorenz84")
    assert info.value.key == "model.name"
    with pytest.raises(ConfigError) as info:
        build_model("enso_sdde", {"tau3": 2.0}, key="data.truth")
    assert info.value.key == "data.truth.constants"
    with pytest.raises(ConfigError):
        build_model("lorenz63_noisy", {"learn": ["gamma"]})
    with pytest.raises(ConfigError):
        build_model("lorenz63_noisy", {"sigma": -1.0})


def test_lorenz63_truth_is_reproducible():
    spec = build_model("lorenz63_noisy", {"learn": []})
    vector = spec.pack({})
    a = simulate(spec, vector, 1e-3, 2000, RngStream(1), record_every=10)
    b = simulate(spec, vector, 1e-3, 2000, RngStream(1), record_every=10)
    assert a.samples.shape == (201, 3)
    assert a.dt == pytest.approx(1e-2)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_lorenz63_learned_scalars_reach_the_drift():
    spec = build_model("lorenz63_noisy", {"learn": ["alpha", "sigma"]})
    theta = spec.prepare(spec.pack({"alpha": 12.0, "sigma": 4.0}))
    assert theta["alpha"] == pytest.approx(12.0)
    assert theta["sqrt_sigma"] == pytest.approx(2.0)
    drift = spec.model.drift(np.array([1.0, 2.0, 3.0]), theta)
    np.testing.assert_allclose(drift, [12.0, 1.0 * (28.0 - 3.0) - 2.0, 2.0 - 8.0])


def test_gp_nodes_follow_the_reference():
    reference = Trajectory(0.01, np.column_stack([np.zeros(11), np.linspace(-10.0, 10.0, 11), np.zeros(11)]))
    spec = build_model("lorenz63_noisy", {"g_l": "gp", "learn": []}, reference=reference)
    vector = spec.pack({
        "g_L.values": np.linspace(-12.0, 12.0, 5),
        "g_L.obs_error": 0.1,
        "g_L.amplitude": 10.0,
        "g_L.length_scale": 5.0,
    })
    functions = spec.functions(vector)
    fn, interval = functions["g_L"]
    assert interval == pytest.approx((-12.0, 12.0))
    assert fn(0.0) == pytest.approx(0.0, abs=1e-8)


def test_pca_drift_and_reduced_model():
    np.testing.assert_allclose(lorenz63_pca_drift(np.zeros(3)), [0.0, -62.0, 0.0])
    spec = build_model("lorenz63_pca_reduced", {"a1_interval": [-20.0, 20.0], "a2_interval": [-40.0, 0.0]})
    vector = np.zeros(spec.n_parameters)
    traj = simulate(spec, vector, 1e-3, 500, RngStream(2))
    assert traj.dimension == 2
    assert set(spec.functions(vector)) == {"psi1", "psi2", "sigma1", "sigma2"}
    _, sigma_fn_interval = spec.functions(vector)["sigma1"]
    assert sigma_fn_interval == (-40.0, 0.0)


def test_pca_variance_fractions_sum_to_one():
    traj = Trajectory(1.0, np.random.default_rng(0).normal(size=(1000, 3)) * [3.0, 2.0, 0.5])
    fractions = pca_variance_fractions(traj)
    assert fractions.sum() == pytest.approx(1.0)
    assert fractions[0] > fractions[1] > fractions[2]


def test_l96_multiscale_layout():
    spec = build_model("lorenz96_multiscale", {"K": 4, "J": 3})
    assert spec.dimension == 16
    state = np.concatenate([np.full(4, 10.0), np.zeros(12)])
    np.testing.assert_allclose(spec.model.drift(state, {})[:4], 0.0)
    traj = simulate(spec, spec.pack({}), 1e-3, 100, RngStream(3))
    assert traj.dimension == 4
    full = simulate(spec, spec.pack({}), 1e-3, 100, RngStream(3), full_state=True)
    assert full.dimension == 16
    np.testing.assert_array_equal(full.samples[:, :4], traj.samples)


def test_l96_closure_samples():
    K, J, h, c = 2, 2, 1.0, 10.0
    traj = Trajectory(1.0, [[1.0, 2.0, 0.1, 0.3, 0.5, 0.7]])
    x, term = l96_closure_samples(traj, K, J, h, c)
    np.testing.assert_allclose(x, [1.0, 2.0])
    np.testing.assert_allclose(term, [-10.0 * 0.2 + 5.0 * 1.0, -10.0 * 0.6 + 5.0 * 2.0])
    with pytest.raises(ValueError):
        l96_closure_samples(Trajectory(1.0, [[1.0, 2.0]]), K, J, h, c)


def test_l96_closure_balance_term():
    spec = build_model("lorenz96_closure", {"K": 4, "J": 10, "h": 1.0, "c": 10.0, "closure": "none", "learn": []})
    x = np.full(4, 10.0)
    np.testing.assert_allclose(spec.model.drift(x, spec.prepare(spec.pack({}))), -1.0 * 10.0)


def test_l96_closure_fixed_point_without_psi():
    # balance h^2 c / J = 1 puts the uniform state X = F / 2 at rest
    spec = build_model("lorenz96_closure", {"K": 36, "J": 10, "h": 1.0, "c": 10.0, "F": 10.0, "closure": "none", "learn": []})
    x = np.full(36, 5.0)
    assert np.linalg.norm(spec.model.drift(x, spec.prepare(spec.pack({})))) < 1e-12


@pytest.mark.slow
def test_l96_multiscale_stays_bounded():
    spec = build_model("lorenz96_multiscale", {"K": 36, "J": 10})
    full = simulate(spec, spec.pack({}), 5e-4, 200_000, RngStream(36), record_every=20, full_state=True)
    assert full.dimension == 396
    assert full.duration == pytest.approx(100.0)
    assert np.all(np.isfinite(full.samples))
    assert np.abs(full.samples[:, :36]).max() < 50.0


def test_enso_history_and_run():
    spec = build_model("enso_sdde", {"learn": []})
    history = spec.initial_state(RngStream(4))(0.01)
    assert history.duration >= 6.0 - 1e-9
    assert np.all(history.samples == history.samples[0])
    traj = simulate(spec, spec.pack({}), 0.01, 1000, RngStream(4), record_every=100)
    assert traj.samples.shape == (11, 1)
    assert traj.t0 == pytest.approx(0.0)


def test_butane_potential_and_run():
    weights = [-3.0, 0.0, 1.5, -1.0, 3.0, 3.0, -1.0, 1.5, 0.0]
    spec = build_model("butane_reduced", {"gamma": 2.0, "sigma": 0.5, "weights": weights, "learn": []})
    functions = spec.functions(spec.pack({}))
    potential, interval = functions["potential"]
    assert interval == (-math.pi, math.pi)
    # trans well deeper than the cis barrier
    assert potential(math.pi) < potential(0.0)
    traj = simulate(spec, spec.pack({}), 1e-3, 2000, RngStream(5))
    assert traj.dimension == 2
    assert np.all(np.abs(traj.component(0)) <= math.pi)


def test_butane_learned_damping():
    spec = build_model("butane_reduced", {"damping": "gp", "learn": ["sigma", "weights"]})
    assert spec.layout.get("gamma") is None
    assert spec.layout.get("gamma.values").size == 5
    vector = np.zeros(spec.n_parameters)
    theta = spec.prepare(vector)
    # softplus(0) damping everywhere when the node values vanish
    assert spec.model.damping(1.0, theta) == pytest.approx(math.log(2.0))
    assert "damping" in spec.functions(vector)
