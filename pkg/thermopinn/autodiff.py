"""
Second-order spatial jets of the network and exact parameter gradients of the residual loss.

Spatial derivatives are carried forward through the layers as truncated Taylor coefficients
(value, d/dx, d/dy, d2/dx2, d2/dxdy, d2/dy2), six per scalar since the input is 2-D. The
parameter gradient is torch's reverse pass over that jet-valued forward computation, so no
nested tapes are needed.
"""

from dataclasses import dataclass

import numpy as np
import torch

from .net import DTYPE, as_tensor, check_finite, split_layers
from .physics import BELTRAMI, ExactSolution, loss_tensor, residual_components
from .types import (
    CollocationSet,
    FieldJet2,
    FlowParameters,
    Jet,
    MLPArchitecture,
    ParameterVector,
    Point2,
    ResidualBreakdown,
)

# order of the derivative channels
X, Y, XX, XY, YY = range(5)


def jet_forward(arch: MLPArchitecture, flat: torch.Tensor, points: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Propagates jets through the network.

    Returns (values (N, 4), derivatives (5, N, 4)). The value channel uses the same kernels as
    `net.forward_batch`, so values agree bit for bit.
    """
    n = points.shape[0]
    val = points
    der = torch.zeros((5, n, 2), dtype=DTYPE)
    der[X, :, 0] = 1.0
    der[Y, :, 1] = 1.0
    layers = split_layers(arch, flat)
    for i, (w, b) in enumerate(layers, start=1):
        z = torch.addmm(b, val, w.t())
        dz = torch.matmul(der, w.t())
        if i < len(layers):
            t = torch.tanh(z)
            s1 = 1.0 - t * t
            s2 = -2.0 * t * s1
            zx, zy = dz[X], dz[Y]
            der = torch.stack(
                (
                    s1 * zx,
                    s1 * zy,
                    s2 * zx * zx + s1 * dz[XX],
                    s2 * zx * zy + s1 * dz[XY],
                    s2 * zy * zy + s1 * dz[YY],
                )
            )
            val = t
        else:
            val, der = z, dz
        check_finite(val, i)
        check_finite(der, i)
    return val, der


def to_field_jet(val: torch.Tensor, der: torch.Tensor) -> FieldJet2:
    return FieldJet2(
        *(Jet(val[:, k], der[X, :, k], der[Y, :, k], der[XX, :, k], der[XY, :, k], der[YY, :, k]) for k in range(4))
    )


def _points_tensor(points) -> torch.Tensor:
    return torch.as_tensor(np.asarray(points, dtype=np.float64), dtype=DTYPE).reshape(-1, 2)


def evaluate_jet_batch(arch: MLPArchitecture, params: ParameterVector, points) -> FieldJet2:
    """Jets at an (N, 2) batch as numpy arrays."""
    with torch.no_grad():
        val, der = jet_forward(arch, as_tensor(params), _points_tensor(points))
    return to_field_jet(val, der).map(lambda t: t.numpy())


def evaluate_jet(arch: MLPArchitecture, params: ParameterVector, point: Point2) -> FieldJet2:
    """Values and spatial derivatives up to order 2 of all four outputs at one point."""
    return evaluate_jet_batch(arch, params, [[point[0], point[1]]]).map(lambda a: float(a[0]))


@dataclass(frozen=True)
class LossSpec:
    """Which total residual gets minimized: the augmented one or the bare one."""

    augmented: bool = True
    pressure_boundary: bool = False


class ResidualProblem:
    """A collocation set with its forcing and boundary data staged as tensors, ready for repeated loss evaluation."""

    def __init__(
        self,
        arch: MLPArchitecture,
        collocation: CollocationSet,
        flow: FlowParameters,
        spec: LossSpec,
        solution: ExactSolution = BELTRAMI,
        allow_empty: bool = False,
    ):
        self.arch = arch
        self.flow = flow
        self.spec = spec
        self.allow_empty = allow_empty
        self.domain = _points_tensor(collocation.domain_points)
        self.boundary = _points_tensor(collocation.boundary_points)
        self.targets = torch.as_tensor(np.asarray(collocation.boundary_targets), dtype=DTYPE).reshape(-1, 4)
        x, y = collocation.domain_points[:, 0], collocation.domain_points[:, 1]
        fbx, fby, f = solution.forcing(x, y, flow)
        div_fb = solution.forcing_divergence(x, y, flow)
        self.forcing = tuple(
            torch.as_tensor(np.broadcast_to(np.asarray(a, dtype=np.float64), x.shape).copy(), dtype=DTYPE)
            for a in (fbx, fby, f, div_fb)
        )

    def components(self, flat: torch.Tensor) -> dict:
        val, der = jet_forward(self.arch, flat, self.domain)
        jet = to_field_jet(val, der)
        # boundary terms only need values
        bval, _ = jet_forward(self.arch, flat, self.boundary) if self.boundary.shape[0] else (self.targets, None)
        return residual_components(
            jet,
            bval,
            self.targets,
            self.flow,
            self.forcing,
            self.spec.augmented,
            self.spec.pressure_boundary,
            self.allow_empty,
        )

    def breakdown(self, params: ParameterVector | np.ndarray) -> ResidualBreakdown:
        with torch.no_grad():
            comps = self.components(as_tensor(params))
        return ResidualBreakdown.from_components(comps, self.spec.augmented, self.spec.pressure_boundary)

    def value_and_grad(self, params: ParameterVector | np.ndarray) -> tuple[float, np.ndarray, ResidualBreakdown]:
        flat = as_tensor(params, requires_grad=True)
        comps = self.components(flat)
        loss = loss_tensor(comps, self.spec.augmented, self.spec.pressure_boundary)
        (grad,) = torch.autograd.grad(loss, flat)
        breakdown = ResidualBreakdown.from_components(
            {k: v.detach() for k, v in comps.items()}, self.spec.augmented, self.spec.pressure_boundary
        )
        return float(loss.detach()), grad.numpy().copy(), breakdown


def loss_gradient(
    arch: MLPArchitecture,
    params: ParameterVector,
    loss_spec: LossSpec,
    collocation: CollocationSet,
    flow: FlowParameters,
    solution: ExactSolution = BELTRAMI,
) -> tuple[np.ndarray, float]:
    """Exact gradient of the total residual w.r.t. every parameter, plus the loss value."""
    problem = ResidualProblem(arch, collocation, flow, loss_spec, solution)
    loss, grad, _ = problem.value_and_grad(params)
    return grad, loss


def collocation_loss(
    arch: MLPArchitecture,
    params: ParameterVector,
    collocation: CollocationSet,
    flow: FlowParameters,
    augmented: bool,
    solution: ExactSolution = BELTRAMI,
    pressure_boundary: bool = False,
    allow_empty: bool = False,
) -> ResidualBreakdown:
    """`physics.total_loss` with the network evaluated on a collocation set."""
    problem = ResidualProblem(
        arch, collocation, flow, LossSpec(augmented, pressure_boundary), solution, allow_empty
    )
    return problem.breakdown(params)


