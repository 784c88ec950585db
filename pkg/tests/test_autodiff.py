import math

import numpy as np
import pytest

from thermopinn.autodiff import LossSpec, evaluate_jet, evaluate_jet_batch, loss_gradient
from thermopinn.exceptions import NumericalOverflow
from thermopinn.net import forward, forward_batch, init_parameters
from thermopinn.sampling import latin_hypercube
from thermopinn.types import FieldJet2, Jet, MLPArchitecture, ParameterVector, Point2
from thermopinn.verification import forward_second_differences, gradient_check, jet_check, small_collocation

from conftest import random_points


class ZeroSolution:
    """u = v = p = theta = 0 with no forcing, so zero parameters are an exact minimizer."""

    def fields(self, x, y):
        z = 0.0 * np.asarray(x)
        return z, z, z, z

    def jet(self, x, y):
        z = 0.0 * np.asarray(x)
        return FieldJet2(*(Jet(z, z, z, z, z, z) for _ in range(4)))

    def forcing(self, x, y, flow):
        z = 0.0 * np.asarray(x)
        return z, z, z

    def forcing_divergence(self, x, y, flow):
        return 0.0 * np.asarray(x)

    def dirichlet(self, x, y):
        return np.zeros((np.asarray(x).shape[0], 4))


def test_zero_params_give_zero_jet():
    arch = MLPArchitecture.parse("2-8-8-4")
    jet = evaluate_jet(arch, ParameterVector(np.zeros(arch.parameter_count)), Point2(0.4, -0.1))
    for field in jet.jets():
        assert tuple(field) == (0.0,) * 6


def test_linear_network_jet():
    arch = MLPArchitecture.parse("2-4")
    w = np.arange(8, dtype=float).reshape(4, 2) - 3.0
    params = ParameterVector.from_layers([(w, np.ones(4))])
    jet = evaluate_jet(arch, params, Point2(0.2, 0.7))
    for k, field in enumerate(jet.jets()):
        assert (field.x, field.y) == (w[k, 0], w[k, 1])
        assert (field.xx, field.xy, field.yy) == (0.0, 0.0, 0.0)


def test_tanh_derivatives():
    arch = MLPArchitecture.parse("2-1-4")
    params = ParameterVector.from_layers(
        [(np.array([[1.0, 0.0]]), np.zeros(1)), (np.array([[1.0], [0.0], [0.0], [0.0]]), np.zeros(4))]
    )
    at_zero = evaluate_jet(arch, params, Point2(0.0, 0.0)).u
    assert at_zero.x == 1.0
    assert at_zero.xx == 0.0
    at_one = evaluate_jet(arch, params, Point2(1.0, 0.0)).u
    t = math.tanh(1.0)
    assert at_one.x == pytest.approx(1 - t * t, rel=1e-14)
    assert at_one.x == pytest.approx(0.41997, abs=1e-5)
    assert at_one.xx == pytest.approx(-2 * t * (1 - t * t), rel=1e-14)
    assert at_one.xx == pytest.approx(-0.63970, abs=1e-5)
    assert at_one.y == 0.0 and at_one.yy == 0.0 and at_one.xy == 0.0


def test_jet_values_match_forward_bitwise():
    arch = MLPArchitecture.parse("2-32-32-4")
    params = init_parameters(arch, 2)
    pts = random_points(50, 0)
    jet = evaluate_jet_batch(arch, params, pts)
    values = forward_batch(arch, params, pts).numpy()
    for k, field in enumerate(jet.jets()):
        assert np.array_equal(field.value, values[:, k])
    single = evaluate_jet(arch, params, Point2(0.25, -0.5))
    assert tuple(single.values()) == tuple(forward(arch, params, Point2(0.25, -0.5)))


def test_jets_match_finite_differences(rect):
    arch = MLPArchitecture.parse("2-32-32-4")
    first, second = jet_check(arch, init_parameters(arch, 7), latin_hypercube(100, rect, 7))
    assert first < 1e-5
    assert second < 1e-4


def test_second_derivatives_match_forward_second_differences(rect):
    arch = MLPArchitecture.parse("2-16-16-4")
    params = init_parameters(arch, 3)
    pts = latin_hypercube(50, rect, 3)
    fd = forward_second_differences(arch, params, pts)
    jet = evaluate_jet_batch(arch, params, pts)
    for k, field in enumerate(jet.jets()):
        for c, exact in enumerate((field.xx, field.xy, field.yy)):
            scale = np.maximum(np.abs(exact), 1e-2)
            assert np.max(np.abs(fd[:, k, c] - exact) / scale) < 1e-4


@pytest.mark.parametrize("augmented", [True, False])
@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(small_arch, rect, flow, augmented, seed):
    collocation = small_collocation(12, 1, rect, seed)
    assert collocation.total == 16
    assert gradient_check(small_arch, init_parameters(small_arch, seed), collocation, flow, augmented) < 1e-5


def test_gradient_vanishes_at_exact_minimizer(small_arch, rect, flow):
    solution = ZeroSolution()
    collocation = small_collocation(12, 1, rect, 0, solution)
    zero = ParameterVector(np.zeros(small_arch.parameter_count))
    grad, loss = loss_gradient(small_arch, zero, LossSpec(augmented=True), collocation, flow, solution)
    assert loss == 0.0
    assert np.linalg.norm(grad) == 0.0


def test_duplicated_points_leave_gradient_unchanged(small_arch, rect, flow):
    collocation = small_collocation(12, 1, rect, 4)
    params = init_parameters(small_arch, 4)
    grad, loss = loss_gradient(small_arch, params, LossSpec(), collocation, flow)
    grad2, loss2 = loss_gradient(small_arch, params, LossSpec(), collocation.duplicated(), flow)
    assert loss2 == pytest.approx(loss, rel=1e-13)
    np.testing.assert_allclose(grad2, grad, rtol=1e-12, atol=1e-14 * np.max(np.abs(grad)))


def test_overflow_names_layer():
    arch = MLPArchitecture.parse("2-4")
    params = ParameterVector.from_layers([(np.full((4, 2), 1e308), np.zeros(4))])
    with pytest.raises(NumericalOverflow) as info:
        evaluate_jet(arch, params, Point2(1.0, 1.0))
    assert info.value.layer == 1
