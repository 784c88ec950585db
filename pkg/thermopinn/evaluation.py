"""Errors of a trained network against the exact solution and fitted convergence rates."""

import math
import typing

import numpy as np
from scipy import stats

from .autodiff import collocation_loss, evaluate_jet_batch
from .exceptions import ArgumentError
from .physics import BELTRAMI, ExactSolution
from .sampling import grid_collocation, test_grid
from .shared_types import make_logger
from .types import (
    FIELD_NAMES,
    ConvergenceFit,
    DomainSpec,
    ErrorReport,
    FieldErrors,
    FieldJet2,
    FlowParameters,
    MLPArchitecture,
    ParameterVector,
)

logger = make_logger("eval")

ABSCISSAS = ("training_error", "collocation_count")


def _grid_jets(arch, params, grid, solution: ExactSolution) -> tuple[FieldJet2, FieldJet2]:
    grid = np.asarray(grid, dtype=np.float64).reshape(-1, 2)
    pred = evaluate_jet_batch(arch, params, grid)
    shape = grid[:, 0].shape
    exact = solution.jet(grid[:, 0], grid[:, 1]).map(lambda a: np.broadcast_to(np.asarray(a, dtype=np.float64), shape))
    return pred, exact


def _seminorm(pred, exact, m: int) -> float:
    """max over |alpha| = m and over the grid of |D^alpha (exact - pred)|."""
    pairs = zip(exact.derivatives_of_order(m), pred.derivatives_of_order(m))
    return max(float(np.max(np.abs(e - p), initial=0.0)) for e, p in pairs)


def sobolev_error_from_jets(pred: FieldJet2, exact: FieldJet2, k: int) -> dict[str, float]:
    """Discrete W^{k,inf} error per field given both jets on the same grid."""
    if k not in (0, 1, 2):
        raise ArgumentError(f"sobolev_error(): order must be 0, 1 or 2, got {k}")
    out = {}
    for name in FIELD_NAMES:
        p, e = pred.field(name), exact.field(name)
        out[name] = max(_seminorm(p, e, m) for m in range(k + 1))
    return out


def l2_error_from_jets(pred: FieldJet2, exact: FieldJet2) -> dict[str, float]:
    out = {}
    for name in FIELD_NAMES:
        diff = np.asarray(exact.field(name).value) - np.asarray(pred.field(name).value)
        out[name] = math.sqrt(float(np.mean(diff * diff))) if diff.size else 0.0
    return out


def sobolev_error(
    arch: MLPArchitecture,
    params: ParameterVector,
    grid,
    k: int,
    solution: ExactSolution = BELTRAMI,
) -> dict[str, float]:
    """max over orders m <= k, multi-indices |alpha| = m and grid points of |D^alpha(exact - predicted)|."""
    return sobolev_error_from_jets(*_grid_jets(arch, params, grid, solution), k)


def l2_error(arch: MLPArchitecture, params: ParameterVector, grid, solution: ExactSolution = BELTRAMI) -> dict[str, float]:
    """Root-mean-square pointwise error per field over the grid."""
    return l2_error_from_jets(*_grid_jets(arch, params, grid, solution))


def error_field(arch: MLPArchitecture, params: ParameterVector, grid, solution: ExactSolution = BELTRAMI) -> dict[str, np.ndarray]:
    """|exact - predicted| per field, aligned with the grid rows."""
    pred, exact = _grid_jets(arch, params, grid, solution)
    return {name: np.abs(np.asarray(exact.field(name).value) - np.asarray(pred.field(name).value)) for name in FIELD_NAMES}


def error_report(
    arch: MLPArchitecture,
    params: ParameterVector,
    rect: DomainSpec,
    n_per_side: int = 100,
    solution: ExactSolution = BELTRAMI,
) -> ErrorReport:
    """All norms of all fields on the n x n test grid, from one jet evaluation."""
    pred, exact = _grid_jets(arch, params, test_grid(rect, n_per_side), solution)
    w = [sobolev_error_from_jets(pred, exact, k) for k in (0, 1, 2)]
    l2 = l2_error_from_jets(pred, exact)
    per_field = {name: FieldErrors(w[0][name], w[1][name], w[2][name], l2[name]) for name in FIELD_NAMES}
    return ErrorReport(
        **per_field,
        grid_points=n_per_side * n_per_side,
        grid_per_side=n_per_side,
        domain=rect.to_dict(),
    )


def estimate_generalization_error(
    arch: MLPArchitecture,
    params: ParameterVector,
    rect: DomainSpec,
    flow: FlowParameters,
    n_per_side: int = 100,
    solution: ExactSolution = BELTRAMI,
    augmented: bool = False,
) -> float:
    """Mean squared domain residual plus mean squared boundary residual on a dense unseen grid.

    The grid's interior and perimeter points form the domain set, its perimeter the boundary set.
    """
    grid_set = grid_collocation(rect, n_per_side, solution)
    return collocation_loss(arch, params, grid_set, flow, augmented, solution).r_total


def fit_convergence(points: typing.Sequence[tuple[float, float]], abscissa: str = "training_error") -> ConvergenceFit:
    """Least-squares line through (log10 a, log10 e)."""
    if abscissa not in ABSCISSAS:
        raise ArgumentError(f"fit_convergence(): abscissa must be one of {ABSCISSAS}, got {abscissa!r}")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise ArgumentError(f"fit_convergence(): need at least 2 points, got {pts.shape[0]}")
    if not np.all(np.isfinite(pts)) or np.any(pts <= 0):
        raise ArgumentError("fit_convergence(): all abscissas and errors must be finite and strictly positive")
    log_a, log_e = np.log10(pts[:, 0]), np.log10(pts[:, 1])
    if np.all(log_a == log_a[0]):
        raise ArgumentError("fit_convergence(): abscissas must not all be equal")
    fit = stats.linregress(log_a, log_e)
    r_squared = float(fit.rvalue) ** 2 if np.isfinite(fit.rvalue) else 1.0
    return ConvergenceFit(float(fit.slope), float(fit.intercept), r_squared, abscissa, int(pts.shape[0]))
