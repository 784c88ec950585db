import numpy as np
import pytest
from scipy.optimize import rosen, rosen_der

from thermopinn.optim import AdamHyperparameters, AdamState, LbfgsOptions, adam_step, lbfgs_minimize
from thermopinn.shared_types import LineSearchStatus


def test_adam_first_step():
    x, state = adam_step(np.array([0.0]), np.array([1.0]), AdamState.fresh(1), 1)
    assert x[0] == pytest.approx(-9.9999999e-4, rel=1e-7)


def test_adam_zero_gradient():
    params = np.array([0.5, -2.0, 3.0])
    x, _ = adam_step(params, np.zeros(3), AdamState.fresh(3), 1)
    assert np.array_equal(x, params)


def test_adam_step_linear_in_learning_rate():
    g = np.array([0.3, -1.7, 2e-3])
    x1, _ = adam_step(np.zeros(3), g, AdamState.fresh(3), 1, AdamHyperparameters(learning_rate=1e-3))
    x2, _ = adam_step(np.zeros(3), g, AdamState.fresh(3), 1, AdamHyperparameters(learning_rate=2e-3))
    assert np.array_equal(x2, 2 * x1)


def test_adam_leaves_inputs_alone():
    params, state = np.ones(2), AdamState.fresh(2)
    adam_step(params, np.ones(2), state, 1)
    assert np.array_equal(params, np.ones(2)) and not state.m.any()


def square(x):
    return float(x @ x), 2 * x


def test_lbfgs_quadratic():
    result = lbfgs_minimize(square, np.array([1.0]), LbfgsOptions(max_iterations=10))
    assert abs(result.x[0]) < 1e-8
    assert result.iterations <= 10


def test_lbfgs_rosenbrock():
    result = lbfgs_minimize(lambda x: (rosen(x), rosen_der(x)), np.array([-1.2, 1.0]), LbfgsOptions(max_iterations=200))
    assert np.max(np.abs(result.x - 1.0)) < 1e-6
    assert result.iterations <= 200


def test_lbfgs_zero_gradient_returns_immediately():
    calls = []

    def flat(x):
        calls.append(x.copy())
        return 3.0, np.zeros_like(x)

    result = lbfgs_minimize(flat, np.array([0.2, 0.4]))
    assert result.iterations == 0
    assert result.status is LineSearchStatus.GRADIENT_TOLERANCE
    assert len(calls) == 1


def test_lbfgs_loss_threshold_and_callback():
    seen = []
    result = lbfgs_minimize(
        lambda x: (rosen(x), rosen_der(x)),
        np.array([-1.2, 1.0]),
        LbfgsOptions(max_iterations=500, loss_threshold=1e-3),
        callback=lambda it, x, f: seen.append((it, f)) and False,
    )
    assert result.status is LineSearchStatus.LOSS_THRESHOLD
    assert result.f <= 1e-3
    assert [it for it, _ in seen] == list(range(1, result.iterations + 1))

    stopped = lbfgs_minimize(square, np.array([3.0, -1.0]), callback=lambda it, x, f: True)
    assert stopped.status is LineSearchStatus.STOPPED_BY_CALLBACK and stopped.iterations == 1


def test_lbfgs_line_search_failure_keeps_best_point():
    def nasty(x):
        # gradient pointing the wrong way, no step can satisfy the Wolfe conditions
        return float(x @ x), -2 * x

    x0 = np.array([1.0, 2.0])
    result = lbfgs_minimize(nasty, x0, LbfgsOptions(max_iterations=5))
    assert result.status is LineSearchStatus.LINE_SEARCH_FAILED
    assert np.array_equal(result.x, x0)
