"""
Tests for GP-mean functions, the periodic Gaussian basis and parameter layouts.
"""

import math

import numpy as np
import pytest
from scipy.linalg import LinAlgError

import ergodic_eki.core.funcparam as funcparam
from ergodic_eki.core.errors import LayoutMismatch, SingularGram
from ergodic_eki.core.funcparam import (
    GaussianBasisFunction,
    GPMeanFunction,
    ParameterLayout,
    ParameterSlice,
    circle_centers,
    equispaced_nodes,
    evaluate_mean,
    fit_representer,
    gp_from_params,
    gp_slices,
    padded_range,
    rbf_kernel,
    rbf_matrix,
    softplus,
)


def _gp(values, obs_error=1e-4, amplitude=2.0, length_scale=1.0):
    return GPMeanFunction(np.linspace(-2.0, 2.0, len(values)), values, obs_error, amplitude, length_scale)


# ==================== GP mean functions ====================

def test_kernel_basics():
    assert rbf_kernel(0.3, 0.3, 2.0, 1.0) == pytest.approx(4.0)
    assert rbf_kernel(0.0, 1.0, 1.0, 1.0) == pytest.approx(math.exp(-0.5))
    assert rbf_kernel(0.0, 1.0, 1.0, 1.0) == rbf_kernel(1.0, 0.0, 1.0, 1.0)
    matrix = rbf_matrix([0.0, 1.0, 2.0], [0.0, 1.0, 2.0], 1.0, 1.0)
    np.testing.assert_allclose(matrix, matrix.T)
    with pytest.raises(ValueError):
        rbf_kernel(0.0, 1.0, 1.0, 0.0)


def test_small_obs_error_interpolates_nodes():
    values = np.array([1.0, -0.5, 0.3, 2.0, 0.0])
    f = _gp(values)
    np.testing.assert_allclose(f(f.nodes[:, 0]), values, atol=1e-4)


def test_mean_is_linear_in_node_values():
    a = np.array([1.0, 2.0, -1.0, 0.5, 0.0])
    b = np.array([-0.3, 0.1, 0.7, 1.5, -2.0])
    grid = np.linspace(-3.0, 3.0, 13)
    np.testing.assert_allclose(_gp(a + b)(grid), _gp(a)(grid) + _gp(b)(grid), atol=1e-10)


def test_mean_decays_away_from_nodes():
    f = _gp(np.ones(5))
    assert abs(f(50.0)) < 1e-12


def test_scalar_and_array_evaluation_agree():
    f = _gp(np.array([0.2, -1.0, 0.4, 1.1, 0.0]), obs_error=0.3)
    grid = np.array([-1.7, 0.0, 0.9])
    np.testing.assert_allclose(f(grid), [f(x) for x in grid])
    assert isinstance(f(0.5), float)
    np.testing.assert_allclose(
        f(grid), evaluate_mean(f, fit_representer(f), grid),
    )


def test_multivariate_nodes():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    f = GPMeanFunction(nodes, [1.0, 2.0, 3.0], 1e-4, 1.0, 0.5)
    assert isinstance(f([1.0, 0.0]), float)
    assert f([1.0, 0.0]) == pytest.approx(2.0, abs=1e-4)
    assert f(np.array([[0.0, 1.0], [0.0, 0.0]])).shape == (2,)


def test_invalid_gp_arguments():
    with pytest.raises(ValueError):
        GPMeanFunction([0.0, 0.0, 1.0], [1.0, 2.0, 3.0], 0.1, 1.0, 1.0)
    with pytest.raises(ValueError):
        GPMeanFunction([0.0, 1.0], [1.0], 0.1, 1.0, 1.0)
    with pytest.raises(ValueError):
        GPMeanFunction([0.0, 1.0], [1.0, 2.0], 0.0, 1.0, 1.0)


def test_non_finite_gram_is_singular():
    f = GPMeanFunction([0.0, 1.0], [1.0, 2.0], 0.1, 1e200, 1.0)
    with pytest.raises(SingularGram):
        fit_representer(f)



def test_mean_matches_a_dense_solve():
    generator = np.random.default_rng(2024)
    for _ in range(100):
        n_nodes = int(generator.integers(2, 11))
        nodes = generator.uniform(-3.0, 3.0, n_nodes)
        values = generator.standard_normal(n_nodes)
        obs_error = generator.uniform(0.2, 1.0)
        amplitude = generator.uniform(0.5, 2.0)
        length_scale = generator.uniform(0.3, 2.0)
        points = generator.uniform(-4.0, 4.0, 20)

        f = GPMeanFunction(nodes, values, obs_error, amplitude, length_scale)
        gram = rbf_matrix(nodes, nodes, amplitude, length_scale)
        weights = np.linalg.solve(gram + obs_error ** 2 * np.eye(n_nodes), values)
        expected = rbf_matrix(points, nodes, amplitude, length_scale) @ weights
        np.testing.assert_allclose(f(points), expected, rtol=0, atol=1e-10)


def test_jitter_only_after_a_failed_factorization(monkeypatch):
    f = _gp(np.array([1.0, -0.5, 0.3]), obs_error=0.5, amplitude=1.5)
    plain = fit_representer(f).alpha
    gram = f.gram()
    np.testing.assert_allclose(plain, np.linalg.solve(gram + 0.25 * np.eye(3), f.node_values), atol=1e-12)

    calls = []
    real_cho_factor = funcparam.cho_factor

    def failing_once(matrix, lower=False):
        calls.append(matrix.copy())
        if len(calls) == 1:
            raise LinAlgError("not positive definite")
        return real_cho_factor(matrix, lower=lower)

    monkeypatch.setattr(funcparam, "cho_factor", failing_once)
    fit_representer(f)
    assert len(calls) == 2
    jitter = 1e-10 * 1.5 ** 2
    np.testing.assert_allclose(np.diag(calls[1] - calls[0]), jitter, rtol=1e-4)


# ==================== Gaussian basis ====================

def test_basis_is_periodic_with_matching_derivative():
    b = GaussianBasisFunction(circle_centers(9), 0.5, np.linspace(-1.0, 1.0, 9))
    for phi in (-3.0, -0.4, 1.2, 3.1):
        assert b(phi) == pytest.approx(b(phi + 2.0 * math.pi), abs=1e-12)
        step = 1e-6
        slope = (b(phi + step) - b(phi - step)) / (2.0 * step)
        assert b.derivative(phi) == pytest.approx(slope, rel=1e-5, abs=1e-7)


def test_basis_vectorized():
    b = GaussianBasisFunction(circle_centers(9), 0.5, np.ones(9))
    grid = np.linspace(-math.pi, math.pi, 7)
    np.testing.assert_allclose(b(grid), [b(phi) for phi in grid])


def test_basis_arguments():
    assert circle_centers(9)[0] == pytest.approx(-math.pi)
    assert len(circle_centers(9)) == 9
    with pytest.raises(ValueError):
        GaussianBasisFunction([0.0, 4.0], 0.5, [1.0, 1.0])
    with pytest.raises(ValueError):
        GaussianBasisFunction([0.0, 1.0], 0.5, [1.0])
    with pytest.raises(ValueError):
        GaussianBasisFunction([0.0, 1.0], 0.0, [1.0, 1.0])


# ==================== Layout ====================

def _layout():
    return ParameterLayout([
        ParameterSlice("alpha"),
        ParameterSlice("sigma", 1, "log"),
        ParameterSlice("w", 3),
    ])


def test_layout_pack_unpack():
    layout = _layout()
    assert layout.size == 5
    vector = layout.pack({"alpha": 10.0, "sigma": 4.0, "w": [1.0, 2.0, 3.0]})
    np.testing.assert_allclose(vector, [10.0, math.log(4.0), 1.0, 2.0, 3.0])
    raw = layout.unpack(vector)
    assert raw["sigma"][0] == pytest.approx(4.0)
    assert layout.raw_dict(vector) == {"alpha": 10.0, "sigma": pytest.approx(4.0), "w": [1.0, 2.0, 3.0]}


def test_layout_mismatches():
    layout = _layout()
    with pytest.raises(LayoutMismatch):
        layout.pack({"alpha": 1.0, "sigma": 1.0})
    with pytest.raises(LayoutMismatch):
        layout.pack({"alpha": 1.0, "sigma": 1.0, "w": [1.0, 2.0], })
    with pytest.raises(LayoutMismatch):
        layout.pack({"alpha": 1.0, "sigma": -1.0, "w": [1.0, 2.0, 3.0]})
    with pytest.raises(LayoutMismatch):
        layout.unpack(np.zeros(4))
    with pytest.raises(ValueError):
        ParameterLayout([ParameterSlice("a"), ParameterSlice("a")])
    with pytest.raises(ValueError):
        ParameterSlice("a", 1, "logit")


def test_gp_slices_build_a_function():
    slices = gp_slices("g", 4)
    assert [s.name for s in slices] == ["g.values", "g.obs_error", "g.amplitude", "g.length_scale"]
    assert [s.transform for s in slices] == ["identity", "log", "log", "log"]
    layout = ParameterLayout(slices)
    raw = layout.unpack(layout.pack({
        "g.values": [0.0, 1.0, 2.0, 3.0],
        "g.obs_error": 0.1,
        "g.amplitude": 2.0,
        "g.length_scale": 1.5,
    }))
    f = gp_from_params("g", raw, equispaced_nodes((0.0, 3.0), 4))
    assert f.obs_error == pytest.approx(0.1)
    assert f.length_scale == pytest.approx(1.5)


# ==================== Helpers ====================

def test_node_helpers():
    np.testing.assert_allclose(equispaced_nodes((0.0, 1.0), 3), [0.0, 0.5, 1.0])
    np.testing.assert_allclose(equispaced_nodes((0.0, 1.0), 1), [0.5])
    assert padded_range([0.0, 10.0]) == pytest.approx((-1.0, 11.0))
    assert padded_range([2.0, 2.0]) == pytest.approx((1.8, 2.2))
    with pytest.raises(ValueError):
        equispaced_nodes((0.0, 1.0), 0)


def test_softplus():
    assert softplus(0.0) == pytest.approx(math.log(2.0))
    assert softplus(800.0) == pytest.approx(800.0)
    assert np.all(softplus(np.array([-800.0, -5.0, 5.0])) >= 0.0)
