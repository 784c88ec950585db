"""
Boussinesq residuals, the pressure-Poisson augmentation and the Beltrami manufactured solution.

Every residual here is plain arithmetic on jet entries, so the same function runs on floats
(single points), numpy arrays (evaluation grids) and torch tensors (training, where autograd
differentiates through it).
"""

import typing

import numpy as np

from .exceptions import ConfigurationError
from .types import FieldJet2, FieldState, FlowParameters, Jet, Point2, ResidualBreakdown
from .types.residuals import combine

PI = np.pi


def domain_residual_point(jet: FieldJet2, flow: FlowParameters, fb, f) -> tuple:
    """Squared residuals (momentum-x, momentum-y, divergence, energy).

    Momentum is u.grad(u) + grad(p) - nu*lap(u) + g*beta*theta - f_b, energy is
    u.grad(theta) - alpha*lap(theta) - f. The viscous term uses nu*lap(u), which equals
    div(2 nu sym grad u) for constant nu and a solenoidal field.
    """
    u, v, p, th = jet.u, jet.v, jet.p, jet.theta
    gx, gy = flow.g
    mom_x = u.value * u.x + v.value * u.y + p.x - flow.nu * u.laplacian + gx * flow.beta * th.value - fb[0]
    mom_y = u.value * v.x + v.value * v.y + p.y - flow.nu * v.laplacian + gy * flow.beta * th.value - fb[1]
    div = u.x + v.y
    energy = u.value * th.x + v.value * th.y - flow.alpha * th.laplacian - f
    return mom_x**2, mom_y**2, div**2, energy**2


def convective_divergence(jet: FieldJet2):
    """div(u.grad u) expanded with the product rule."""
    u, v = jet.u, jet.v
    return (
        u.x * u.x
        + u.value * u.xx
        + v.x * u.y
        + v.value * u.xy
        + u.y * v.x
        + u.value * v.xy
        + v.y * v.y
        + v.value * v.yy
    )


def augmentation_residual_point(jet: FieldJet2, flow: FlowParameters, fb_divergence) -> tuple:
    """Squared residuals (pressure-Poisson, (div u)_x, (div u)_y).

    The pressure-Poisson residual is lap(p) - div(f_b - u.grad u - g beta theta), with
    div(f_b) passed in as `fb_divergence`.
    """
    u, v, p, th = jet.u, jet.v, jet.p, jet.theta
    gx, gy = flow.g
    buoyancy_div = flow.beta * (gx * th.x + gy * th.y)
    pressure = p.laplacian - (fb_divergence - convective_divergence(jet) - buoyancy_div)
    div_x = u.xx + v.xy
    div_y = u.xy + v.yy
    return pressure**2, div_x**2, div_y**2


def boundary_residual_point(pred: FieldState, target: typing.Sequence) -> tuple:
    """Squared Dirichlet mismatches for (u, v, theta). Pressure is not part of the default boundary term."""
    return (
        (pred[0] - target[0]) ** 2,
        (pred[1] - target[1]) ** 2,
        (pred[3] - target[2]) ** 2,
    )


def _mean(values, allow_empty: bool, what: str):
    if values.shape[0] == 0:
        if allow_empty:
            return 0.0
        raise ConfigurationError(f"total_loss: no {what} points to average over.")
    return values.mean()


def residual_components(
    domain_jet: FieldJet2,
    boundary_pred,
    boundary_targets,
    flow: FlowParameters,
    forcing: tuple,
    augmented: bool,
    pressure_boundary: bool = False,
    allow_empty: bool = False,
) -> dict:
    """Mean squared residual of every component.

    `boundary_pred` is (M, 4) network output, `boundary_targets` is (M, 4) holding
    (g_u, g_v, g_theta, g_p), `forcing` is (f_bx, f_by, f, div f_b) at the domain points.
    Returns arrays/tensors, not floats, so autograd can see them.
    """
    fbx, fby, f, div_fb = forcing
    r_u, r_v, r_div, r_theta = domain_residual_point(domain_jet, flow, (fbx, fby), f)
    pred = (boundary_pred[:, 0], boundary_pred[:, 1], boundary_pred[:, 2], boundary_pred[:, 3])
    b_u, b_v, b_theta = boundary_residual_point(pred, (boundary_targets[:, 0], boundary_targets[:, 1], boundary_targets[:, 2]))
    out = {
        "r_u": _mean(r_u, allow_empty, "domain"),
        "r_v": _mean(r_v, allow_empty, "domain"),
        "r_div": _mean(r_div, allow_empty, "domain"),
        "r_theta": _mean(r_theta, allow_empty, "domain"),
        "r_u_b": _mean(b_u, allow_empty, "boundary"),
        "r_v_b": _mean(b_v, allow_empty, "boundary"),
        "r_theta_b": _mean(b_theta, allow_empty, "boundary"),
    }
    if pressure_boundary:
        out["r_p_b"] = _mean((pred[2] - boundary_targets[:, 3]) ** 2, allow_empty, "boundary")
    if augmented:
        r_p, r_dx, r_dy = augmentation_residual_point(domain_jet, flow, div_fb)
        out["r_p"] = _mean(r_p, allow_empty, "domain")
        out["r_div_x"] = _mean(r_dx, allow_empty, "domain")
        out["r_div_y"] = _mean(r_dy, allow_empty, "domain")
    return out


def total_loss(
    domain_jet: FieldJet2,
    boundary_pred,
    boundary_targets,
    flow: FlowParameters,
    forcing: tuple,
    augmented: bool,
    pressure_boundary: bool = False,
    allow_empty: bool = False,
) -> ResidualBreakdown:
    """Mean-squared residual components and their unweighted totals (no penalty weights)."""
    comps = residual_components(
        domain_jet, boundary_pred, boundary_targets, flow, forcing, augmented, pressure_boundary, allow_empty
    )
    return ResidualBreakdown.from_components(comps, augmented, pressure_boundary)


def loss_tensor(components: dict, augmented: bool, pressure_boundary: bool = False):
    """The scalar that gets minimized, summed in the same order the breakdown logs."""
    return combine(components, augmented, pressure_boundary)["r_total"]


class ExactSolution(typing.Protocol):
    """What the trainer and evaluator need from a reference solution. Everything is vectorized over x, y."""

    def fields(self, x, y) -> tuple: ...

    def jet(self, x, y) -> FieldJet2: ...

    def forcing(self, x, y, flow: FlowParameters) -> tuple: ...

    def forcing_divergence(self, x, y, flow: FlowParameters): ...


class BeltramiSolution:
    """Closed-form Beltrami flow with temperature, and the body force / heat source that drive it.

    u = -cos(pi x) sin(pi y), v = sin(pi x) cos(pi y), p = -(cos(2 pi x) + cos(2 pi y)) / 4,
    theta = cos(pi x) cos(pi y).
    """

    name = "beltrami"

    def fields(self, x, y) -> tuple:
        cx, sx, cy, sy = np.cos(PI * x), np.sin(PI * x), np.cos(PI * y), np.sin(PI * y)
        u = -cx * sy
        v = sx * cy
        p = -0.25 * (np.cos(2 * PI * x) + np.cos(2 * PI * y))
        theta = cx * cy
        return u, v, p, theta

    def jet(self, x, y) -> FieldJet2:
        cx, sx, cy, sy = np.cos(PI * x), np.sin(PI * x), np.cos(PI * y), np.sin(PI * y)
        pi2 = PI * PI
        zero = 0.0 * cx
        u = Jet(-cx * sy, PI * sx * sy, -PI * cx * cy, pi2 * cx * sy, pi2 * sx * cy, pi2 * cx * sy)
        v = Jet(sx * cy, PI * cx * cy, -PI * sx * sy, -pi2 * sx * cy, -pi2 * cx * sy, -pi2 * sx * cy)
        c2x, c2y = np.cos(2 * PI * x), np.cos(2 * PI * y)
        p = Jet(
            -0.25 * (c2x + c2y),
            0.5 * PI * np.sin(2 * PI * x),
            0.5 * PI * np.sin(2 * PI * y),
            pi2 * c2x,
            zero,
            pi2 * c2y,
        )
        theta = Jet(cx * cy, -PI * sx * cy, -PI * cx * sy, -pi2 * cx * cy, pi2 * sx * sy, -pi2 * cx * cy)
        return FieldJet2(u, v, p, theta)

    def forcing(self, x, y, flow: FlowParameters) -> tuple:
        """(f_bx, f_by, f) holding the solution above in balance."""
        cx, sx, cy, sy = np.cos(PI * x), np.sin(PI * x), np.cos(PI * y), np.sin(PI * y)
        g1, g2 = flow.g
        two_pi2 = 2 * PI * PI
        fbx = -two_pi2 * flow.nu * cx * sy + g1 * flow.beta * cx * cy
        fby = two_pi2 * flow.nu * sx * cy + g2 * flow.beta * cx * cy
        f = two_pi2 * flow.alpha * cx * cy
        return fbx, fby, f

    def forcing_divergence(self, x, y, flow: FlowParameters):
        cx, sx, cy, sy = np.cos(PI * x), np.sin(PI * x), np.cos(PI * y), np.sin(PI * y)
        g1, g2 = flow.g
        two_pi3 = 2 * PI**3
        dfbx_dx = two_pi3 * flow.nu * sx * sy - g1 * flow.beta * PI * sx * cy
        dfby_dy = -two_pi3 * flow.nu * sx * sy - g2 * flow.beta * PI * cx * sy
        return dfbx_dx + dfby_dy

    def dirichlet(self, x, y) -> np.ndarray:
        """(g_u, g_v, g_theta, g_p) columns for boundary samples."""
        u, v, p, theta = self.fields(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        return np.stack([u, v, theta, p], axis=-1)


BELTRAMI = BeltramiSolution()


def beltrami_exact(point: Point2) -> FieldState:
    return FieldState(*(float(v) for v in BELTRAMI.fields(point[0], point[1])))


def beltrami_exact_jet(point: Point2) -> FieldJet2:
    return BELTRAMI.jet(float(point[0]), float(point[1])).map(float)


def beltrami_forcing(point: Point2, flow: FlowParameters) -> tuple[tuple[float, float], float]:
    """(f_b, f) at a point."""
    fbx, fby, f = BELTRAMI.forcing(point[0], point[1], flow)
    return (float(fbx), float(fby)), float(f)


def beltrami_forcing_divergence(point: Point2, flow: FlowParameters) -> float:
    return float(BELTRAMI.forcing_divergence(point[0], point[1], flow))
