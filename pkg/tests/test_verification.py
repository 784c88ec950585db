import pytest

from thermopinn.sampling import test_grid
from thermopinn.types import FlowParameters
from thermopinn.verification import COMPONENTS, manufactured_residuals, small_collocation


@pytest.mark.parametrize("flow", [FlowParameters(), FlowParameters(nu=0.1, g=(0.0, -9.8)), FlowParameters(alpha=0.3, beta=2.0, g=(0.5, -1.0))])
def test_manufactured_residuals_vanish(rect, ladder, flow):
    points = ladder[-1].domain_points
    residuals = manufactured_residuals(points, flow)
    assert set(residuals) == set(COMPONENTS)
    assert max(residuals.values()) < 1e-20
    assert max(manufactured_residuals(test_grid(rect, 100), flow).values()) < 1e-20


def test_small_collocation(rect):
    collocation = small_collocation(12, 1, rect, 3)
    assert (collocation.n_domain, collocation.n_boundary) == (12, 4)
    assert collocation.total == 16
