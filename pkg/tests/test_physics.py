import math
import types

import numpy as np
import pytest
import torch

from thermopinn.exceptions import ConfigurationError
from thermopinn.physics import (
    BELTRAMI,
    augmentation_residual_point,
    beltrami_exact,
    beltrami_exact_jet,
    beltrami_forcing,
    beltrami_forcing_divergence,
    boundary_residual_point,
    domain_residual_point,
    total_loss,
)
from thermopinn.sampling import test_grid
from thermopinn.types import FieldState, FlowParameters, Point2
from thermopinn.types.residuals import combine
from thermopinn.verification import manufactured_residuals

from conftest import make_jet, random_points

PI = math.pi


def test_exact_jet_satisfies_equations(flow):
    for x, y in random_points(50, 1):
        jet = beltrami_exact_jet(Point2(x, y))
        fb, f = beltrami_forcing(Point2(x, y), flow)
        assert max(domain_residual_point(jet, flow, fb, f)) < 1e-20
        div_fb = beltrami_forcing_divergence(Point2(x, y), flow)
        assert max(augmentation_residual_point(jet, flow, div_fb)) < 1e-20


def test_manufactured_oracle_on_ladder_and_grid(ladder, rect, flow):
    pts = np.concatenate([ladder[-1].domain_points, test_grid(rect, 100)])
    assert max(manufactured_residuals(pts, flow).values()) < 1e-20


@pytest.mark.parametrize(
    "flow_kwargs", [{"nu": 0.1, "g": (0.0, -9.8)}, {"nu": 0.5, "alpha": 2.0, "beta": 0.3, "g": (0.4, -1.0)}]
)
def test_manufactured_oracle_other_parameters(flow_kwargs):
    pts = random_points(200, 3)
    assert max(manufactured_residuals(pts, FlowParameters(**flow_kwargs)).values()) < 1e-18


def test_pressure_gradient_only(flow):
    jet = make_jet(p={"x": 1.0})
    assert domain_residual_point(jet, flow, (0.0, 0.0), 0.0) == (1.0, 0.0, 0.0, 0.0)


def test_buoyancy_only(flow):
    jet = make_jet(theta={"value": 1.0})
    assert domain_residual_point(jet, flow, (0.0, 0.0), 0.0)[1] == 1.0


def test_div_x_residual(flow):
    jet = make_jet(u={"x": 0.3, "xx": 1.0})
    assert augmentation_residual_point(jet, flow, 0.0)[1] == 1.0


def test_pressure_poisson_residual(flow):
    jet = make_jet(p={"xx": 2.0})
    assert augmentation_residual_point(jet, flow, 0.0)[0] == 4.0


def test_boundary_residuals():
    target = (0.1, -0.2, 0.5)
    assert boundary_residual_point(FieldState(0.1, -0.2, 9.0, 0.5), target) == (0.0, 0.0, 0.0)
    res = boundary_residual_point(FieldState(0.3, -0.2, 0.0, 0.5), target)
    assert res[0] == pytest.approx(0.04, rel=1e-12)
    assert res[1:] == (0.0, 0.0)
    exact = beltrami_exact(Point2(0.0, 0.5))
    assert boundary_residual_point(FieldState(0.0, 0.0, 0.0, 0.0), (exact.u, exact.v, exact.theta)) == pytest.approx(
        (1.0, 0.0, 0.0), abs=1e-30
    )


@pytest.mark.parametrize(
    "point, expected",
    [((0.0, 0.0), (0.0, 0.0, -0.5, 1.0)), ((0.0, 0.5), (-1.0, 0.0, 0.0, 0.0)), ((0.5, 0.5), (0.0, 0.0, 0.5, 0.0))],
)
def test_exact_solution_values(point, expected):
    assert tuple(beltrami_exact(Point2(*point))) == pytest.approx(expected, abs=1e-15)


def test_exact_jet_entries():
    assert beltrami_exact_jet(Point2(0.5, 0.5)).u.x == pytest.approx(PI, rel=1e-15)
    assert beltrami_exact_jet(Point2(0.0, 0.0)).theta.laplacian == pytest.approx(-2 * PI**2, rel=1e-15)
    for x, y in random_points(20, 2):
        assert abs(beltrami_exact_jet(Point2(x, y)).divergence) < 1e-14


def test_exact_jet_matches_finite_differences():
    h = 1e-5
    for x, y in random_points(100, 4):
        jet = beltrami_exact_jet(Point2(x, y))
        for k, field in enumerate(jet.jets()):
            f = lambda a, b: beltrami_exact(Point2(a, b))[k]  # noqa: E731
            fd_x = (f(x + h, y) - f(x - h, y)) / (2 * h)
            fd_y = (f(x, y + h) - f(x, y - h)) / (2 * h)
            assert fd_x == pytest.approx(field.x, rel=1e-6, abs=1e-8)
            assert fd_y == pytest.approx(field.y, rel=1e-6, abs=1e-8)


def test_exact_second_derivatives_match_finite_differences():
    h = 1e-5
    for x, y in random_points(100, 5):
        plus_x, minus_x = beltrami_exact_jet(Point2(x + h, y)), beltrami_exact_jet(Point2(x - h, y))
        plus_y, minus_y = beltrami_exact_jet(Point2(x, y + h)), beltrami_exact_jet(Point2(x, y - h))
        for k, field in enumerate(beltrami_exact_jet(Point2(x, y)).jets()):
            px, mx, py, my = (j.jets()[k] for j in (plus_x, minus_x, plus_y, minus_y))
            assert (px.x - mx.x) / (2 * h) == pytest.approx(field.xx, rel=1e-6, abs=1e-7)
            assert (py.x - my.x) / (2 * h) == pytest.approx(field.xy, rel=1e-6, abs=1e-7)
            assert (px.y - mx.y) / (2 * h) == pytest.approx(field.xy, rel=1e-6, abs=1e-7)
            assert (py.y - my.y) / (2 * h) == pytest.approx(field.yy, rel=1e-6, abs=1e-7)


def test_forcing_values(flow):
    fb, f = beltrami_forcing(Point2(0.0, 0.0), flow)
    assert fb == pytest.approx((0.0, -1.0), abs=1e-15)
    assert f == pytest.approx(2 * PI**2, rel=1e-15)
    assert f == pytest.approx(19.7392, abs=1e-4)
    fb, f = beltrami_forcing(Point2(0.5, 0.5), flow)
    assert fb == pytest.approx((0.0, 0.0), abs=1e-15)
    assert f == pytest.approx(0.0, abs=1e-15)


def test_forcing_linear_in_nu():
    p = Point2(0.3, -0.4)
    base, _ = beltrami_forcing(p, FlowParameters(nu=1.0, beta=0.0))
    double, _ = beltrami_forcing(p, FlowParameters(nu=2.0, beta=0.0))
    assert double == pytest.approx((2 * base[0], 2 * base[1]), rel=1e-14)


def test_forcing_divergence_matches_finite_differences(flow):
    h = 1e-5
    for x, y in random_points(20, 5):
        fd = (
            beltrami_forcing(Point2(x + h, y), flow)[0][0]
            - beltrami_forcing(Point2(x - h, y), flow)[0][0]
            + beltrami_forcing(Point2(x, y + h), flow)[0][1]
            - beltrami_forcing(Point2(x, y - h), flow)[0][1]
        ) / (2 * h)
        assert beltrami_forcing_divergence(Point2(x, y), flow) == pytest.approx(fd, abs=1e-6)
    assert beltrami_forcing_divergence(Point2(0.0, 0.0), flow) == 0.0


def test_forcing_divergence_vanishes_without_viscosity_and_buoyancy():
    # FlowParameters rejects nu = 0, the closed form only needs the attributes
    inviscid = types.SimpleNamespace(nu=0.0, alpha=1.0, beta=0.0, g=(0.0, -1.0))
    for x, y in random_points(10, 6):
        assert BELTRAMI.forcing_divergence(x, y, inviscid) == 0.0


def test_total_loss_single_point(flow):
    jet = make_jet(p={"x": 1.0}).map(lambda v: np.array([v]))
    targets = np.zeros((1, 4))
    forcing = (np.zeros(1), np.zeros(1), np.zeros(1), np.zeros(1))
    bd = total_loss(jet, np.zeros((1, 4)), targets, flow, forcing, augmented=False)
    assert bd.r_domain == 1.0 and bd.r_total == 1.0
    assert bd.r_augm is None and bd.r_p is None


def test_augmentation_adds_exactly_r_augm(flow):
    x, y = random_points(30, 7).T
    jet = BELTRAMI.jet(x, y).map(lambda a: a + 0.01 * np.sin(3 * x))
    fbx, fby, f = BELTRAMI.forcing(x, y, flow)
    forcing = (fbx, fby, f, BELTRAMI.forcing_divergence(x, y, flow))
    pred = np.zeros((4, 4))
    targets = BELTRAMI.dirichlet(np.array([-1, 1, 0, 0.5]), np.array([0, 0, 1, -1]))
    bare = total_loss(jet, pred, targets, flow, forcing, augmented=False)
    aug = total_loss(jet, pred, targets, flow, forcing, augmented=True)
    assert aug.r_total == bare.r_total + aug.r_augm
    assert aug.r_domain == bare.r_domain and aug.r_boundary == bare.r_boundary


def test_sum_identities_hold_for_tensors_and_floats():
    comps = {k: float(v) for k, v in zip(
        ("r_u", "r_v", "r_div", "r_theta", "r_u_b", "r_v_b", "r_theta_b", "r_p", "r_div_x", "r_div_y"),
        np.random.default_rng(0).uniform(0, 1, 10),
    )}
    floats = combine(comps, augmented=True)
    tensors = combine({k: torch.tensor(v, dtype=torch.float64) for k, v in comps.items()}, augmented=True)
    for key in ("r_domain", "r_boundary", "r_augm", "r_total"):
        assert floats[key] == float(tensors[key])


def test_empty_points_are_rejected(flow):
    empty = np.zeros(0)
    jet = make_jet().map(lambda v: empty)
    with pytest.raises(ConfigurationError):
        total_loss(jet, np.zeros((0, 4)), np.zeros((0, 4)), flow, (empty,) * 4, augmented=True)
    bd = total_loss(jet, np.zeros((0, 4)), np.zeros((0, 4)), flow, (empty,) * 4, augmented=True, allow_empty=True)
    assert bd.r_total == 0.0
