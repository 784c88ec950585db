"""Self-checks run by `thermopinn verify`: the manufactured solution, parameter gradients and spatial jets."""

import numpy as np

from .autodiff import LossSpec, ResidualProblem, evaluate_jet_batch
from .net import forward_batch, init_parameters, make_rng
from .physics import BELTRAMI, augmentation_residual_point, domain_residual_point
from .sampling import edge_points, hierarchical_datasets, latin_hypercube, test_grid
from .shared_types import EDGE_ORDER, make_logger
from .types import CollocationSet, DomainSpec, FlowParameters, MLPArchitecture, ParameterVector

logger = make_logger("harness")

FD_STEP = 1e-5
SECOND_FD_STEP = 1e-3
# fourth-order central stencils, offsets in steps
FIRST_STENCIL = {-2: 1.0 / 12, -1: -8.0 / 12, 1: 8.0 / 12, 2: -1.0 / 12}
SECOND_STENCIL = {-2: -1.0 / 12, -1: 16.0 / 12, 0: -30.0 / 12, 1: 16.0 / 12, 2: -1.0 / 12}
COMPONENTS = ("r_u", "r_v", "r_div", "r_theta", "r_p", "r_div_x", "r_div_y")


def manufactured_residuals(points: np.ndarray, flow: FlowParameters, solution=BELTRAMI) -> dict[str, float]:
    """Largest pointwise squared residual of every domain and augmentation component on the exact jets."""
    x, y = points[:, 0], points[:, 1]
    jet = solution.jet(x, y)
    fbx, fby, f = solution.forcing(x, y, flow)
    squares = domain_residual_point(jet, flow, (fbx, fby), f)
    squares += augmentation_residual_point(jet, flow, solution.forcing_divergence(x, y, flow))
    return {name: float(np.max(sq)) for name, sq in zip(COMPONENTS, squares)}


def small_collocation(n_domain: int, per_edge: int, rect: DomainSpec, seed: int, solution=BELTRAMI) -> CollocationSet:
    rng = make_rng(seed)
    domain = latin_hypercube(n_domain, rect, rng)
    boundary = np.concatenate([edge_points(edge, per_edge, rect, rng) for edge in EDGE_ORDER])
    edges = tuple(edge for edge in EDGE_ORDER for _ in range(per_edge))
    return CollocationSet(domain, boundary, edges, solution.dirichlet(boundary[:, 0], boundary[:, 1]), seed=seed)


def _relative(a: np.ndarray, b: np.ndarray, floor: float) -> float:
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def gradient_check(arch: MLPArchitecture, params: ParameterVector, collocation: CollocationSet, flow: FlowParameters, augmented: bool, h: float = FD_STEP) -> float:
    """Max relative difference between the autodiff gradient and central differences of the loss."""
    problem = ResidualProblem(arch, collocation, flow, LossSpec(augmented))
    _, grad, _ = problem.value_and_grad(params)
    x = params.values.copy()
    fd = np.empty_like(x)
    for i in range(x.shape[0]):
        step = np.zeros_like(x)
        step[i] = h
        fd[i] = (problem.breakdown(x + step).r_total - problem.breakdown(x - step).r_total) / (2 * h)
    return _relative(grad, fd, 1e-3 * float(np.max(np.abs(fd)) or 1.0))


def forward_second_differences(arch: MLPArchitecture, params: ParameterVector, points: np.ndarray, h: float = SECOND_FD_STEP) -> np.ndarray:
    """(N, 4, 3) second differences (xx, xy, yy) of the forward pass. The mixed entry applies the first
    difference stencil along x and y."""
    val = lambda i, j: forward_batch(arch, params, points + h * np.array([i, j], dtype=np.float64)).numpy()  # noqa: E731
    xx = sum(c * val(i, 0) for i, c in SECOND_STENCIL.items()) / h**2
    yy = sum(c * val(0, j) for j, c in SECOND_STENCIL.items()) / h**2
    xy = sum(a * b * val(i, j) for i, a in FIRST_STENCIL.items() for j, b in FIRST_STENCIL.items()) / h**2
    return np.stack([xx, xy, yy], axis=-1)


def jet_check(arch: MLPArchitecture, params: ParameterVector, points: np.ndarray, h: float = FD_STEP) -> tuple[float, float]:
    """(first, second) order relative errors of the jets against central differences.

    First derivatives are checked against differences of the forward pass. Second derivatives are checked
    against second differences of the forward pass and against differences of the jet's first derivatives;
    the worse of the two is reported.
    """
    jet = evaluate_jet_batch(arch, params, points)
    dx, dy = np.array([h, 0.0]), np.array([0.0, h])
    val = lambda pts: forward_batch(arch, params, pts).numpy()  # noqa: E731
    fd_x = (val(points + dx) - val(points - dx)) / (2 * h)
    fd_y = (val(points + dy) - val(points - dy)) / (2 * h)
    first = np.stack([np.stack([f.x, f.y], axis=-1) for f in jet.jets()], axis=1)
    first_fd = np.stack([fd_x, fd_y], axis=-1)

    plus_x, minus_x = evaluate_jet_batch(arch, params, points + dx), evaluate_jet_batch(arch, params, points - dx)
    plus_y, minus_y = evaluate_jet_batch(arch, params, points + dy), evaluate_jet_batch(arch, params, points - dy)
    second, second_fd = [], []
    for k, f in enumerate(jet.jets()):
        px, mx, py, my = (j.jets()[k] for j in (plus_x, minus_x, plus_y, minus_y))
        second.append(np.stack([f.xx, f.xy, f.yy], axis=-1))
        second_fd.append(np.stack([(px.x - mx.x) / (2 * h), (px.y - mx.y) / (2 * h), (py.y - my.y) / (2 * h)], axis=-1))
    second = np.stack(second, axis=1)
    from_jets = _relative(second, np.stack(second_fd, axis=1), 1e-2)
    from_forward = _relative(second, forward_second_differences(arch, params, points), 1e-2)
    return _relative(first, first_fd, 1e-2), max(from_jets, from_forward)


def run_all(seeds=range(5)) -> dict:
    """Every oracle with its tolerance; `passed` is the overall verdict."""
    rect, flow = DomainSpec(), FlowParameters()
    points = np.concatenate([hierarchical_datasets(8, rect, 0)[-1].domain_points, test_grid(rect, 100)])
    manufactured = manufactured_residuals(points, flow)

    small = MLPArchitecture.parse("2-8-8-4")
    gradients = {}
    for augmented in (True, False):
        gradients["augmented" if augmented else "bare"] = max(
            gradient_check(small, init_parameters(small, seed), small_collocation(12, 1, rect, seed), flow, augmented)
            for seed in seeds
        )

    arch = MLPArchitecture.parse("2-32-32-4")
    first, second = jet_check(arch, init_parameters(arch, 7), latin_hypercube(100, rect, 7))

    results = {
        "manufactured": {"max": max(manufactured.values()), "tolerance": 1e-20, "components": manufactured},
        "gradient": {"max": max(gradients.values()), "tolerance": 1e-5, "losses": gradients},
        "jet_first": {"max": first, "tolerance": 1e-5},
        "jet_second": {"max": second, "tolerance": 1e-4},
    }
    for name, check in results.items():
        check["passed"] = check["max"] < check["tolerance"]
        log = logger.info if check["passed"] else logger.error
        log(f"{name}: {check['max']:.3e} (tolerance {check['tolerance']:g})")
    results["passed"] = all(check["passed"] for check in results.values())
    return results
