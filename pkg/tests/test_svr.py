import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rollcast.svr import (
    SVRHyperparams, SVRModel, dual_objective, full_dual_coeffs, kernel_from_sq, kkt_report,
    predict, predict_many, rbf_kernel, sq_distances, train,
)

X_LIN = np.linspace(0.0, 1.0, 50)
Y_LIN = 2.0 * X_LIN
HP_LIN = SVRHyperparams(2.0**10, 1.0, 0.01)


@pytest.fixture(scope="module")
def linear_model():
    return train(X_LIN, Y_LIN, HP_LIN, record=True)


def assert_feasible(model):
    C = model.hyperparams.penalty
    assert abs(model.dual_coeffs.sum()) <= 1e-6
    assert np.all(np.abs(model.dual_coeffs) <= C + 1e-9)


class TestKernel:
    def test_self_value(self):
        assert rbf_kernel([1.0, 2.0], [1.0, 2.0], 0.3) == 1.0

    def test_known_value(self):
        # exp(-2 / (2 * 0.5^2)) = exp(-4)
        assert rbf_kernel([0.0, 0.0], [1.0, 1.0], 0.5) == pytest.approx(math.exp(-4.0), rel=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            rbf_kernel([0.0], [0.0, 1.0], 1.0)

    def test_matrix_matches_scalar(self):
        a = np.random.default_rng(0).random((5, 3))
        K = kernel_from_sq(sq_distances(a, a), 0.7)
        assert K[1, 3] == pytest.approx(rbf_kernel(a[1], a[3], 0.7), rel=1e-12)
        assert np.allclose(K, K.T)


class TestTrain:
    def test_constant_targets(self):
        x = np.random.default_rng(1).random((20, 2))
        m = train(x, np.full(20, 3.0), SVRHyperparams(16.0, 1.0, 0.1))
        assert m.bias == pytest.approx(3.0)
        assert np.allclose(m.dual_coeffs, 0.0)
        assert np.all(np.abs(predict_many(m, x) - 3.0) <= 0.1)
        assert kkt_report(m, x, np.full(20, 3.0)) == pytest.approx(0.0, abs=1e-12)

    def test_linear_fit_within_tube(self, linear_model):
        err = np.abs(predict_many(linear_model, X_LIN) - Y_LIN)
        assert linear_model.converged
        assert err.max() <= 0.01 + 1e-3

    def test_linear_predict_midpoint(self, linear_model):
        assert predict(linear_model, [0.5]) == pytest.approx(1.0, abs=0.01 + 1e-3)

    def test_linear_feasible_and_kkt(self, linear_model):
        assert_feasible(linear_model)
        assert kkt_report(linear_model, X_LIN, Y_LIN) <= 1e-3

    def test_objective_non_decreasing(self, linear_model):
        trace = linear_model.objective_trace
        assert trace.size == linear_model.iterations + 1  # starts at beta = 0
        assert trace[0] == 0.0
        assert np.all(np.diff(trace) >= -1e-9 * np.abs(trace[1:]).max())

    def test_trace_matches_final_objective(self, linear_model):
        x = X_LIN[:, None]
        K = kernel_from_sq(sq_distances(x, x), 1.0)
        beta = full_dual_coeffs(linear_model, X_LIN.size)
        assert linear_model.objective_trace[-1] == pytest.approx(
            dual_objective(beta, K, Y_LIN, 0.01), rel=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000), st.floats(-3, 8), st.floats(-3, 2))
    def test_feasibility_random(self, seed, log_c, log_s):
        g = np.random.default_rng(seed)
        x = g.random((40, 3))
        y = np.sin(3 * x[:, 0]) + 0.1 * g.standard_normal(40)
        m = train(x, y, SVRHyperparams(2.0**log_c, 2.0**log_s, 0.01))
        assert_feasible(m)
        if m.converged:
            assert kkt_report(m, x, y) <= 1e-3 + 1e-9

    def test_truncated_training_is_flagged(self):
        g = np.random.default_rng(2)
        x = g.random((80, 4))
        y = np.sin(6 * x.sum(axis=1))
        m = train(x, y, SVRHyperparams(100.0, 0.3, 0.01), max_iter=1)
        assert not m.converged
        assert kkt_report(m, x, y) > 1e-3
        assert_feasible(m)

    @pytest.mark.parametrize("x, y", [([], []), ([[1.0], [2.0]], [1.0]), ([[1.0]], [1.0])])
    def test_bad_input(self, x, y):
        with pytest.raises(ValueError):
            train(x, y, SVRHyperparams())


class TestPredict:
    def test_bias_only(self):
        m = SVRModel(np.empty((0, 2)), np.empty(0), 0.7, SVRHyperparams(), 2)
        assert predict(m, [5.0, -1.0]) == 0.7

    def test_single_support_vector(self):
        m = SVRModel(np.array([[0.2, 0.4]]), np.array([1.0]), 0.25, SVRHyperparams(), 2)
        assert predict(m, [0.2, 0.4]) == pytest.approx(1.25)

    def test_dimension_mismatch(self):
        m = SVRModel(np.array([[0.2, 0.4]]), np.array([1.0]), 0.0, SVRHyperparams(), 2)
        with pytest.raises(ValueError):
            predict(m, [0.2])


@pytest.mark.parametrize("kw", [{"penalty": 0}, {"kernel_width": -1}, {"tube": -0.1}])
def test_hyperparams_rejected(kw):
    with pytest.raises(ValueError):
        SVRHyperparams(**kw)
