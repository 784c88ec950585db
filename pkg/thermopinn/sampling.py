"""Latin-hypercube collocation points, nested dataset ladders, validation splits and the uniform test grid."""

import numpy as np
from scipy.stats import qmc

from .exceptions import ArgumentError
from .net import PRNG_NAME, SEED_MASK, make_rng
from .physics import BELTRAMI
from .shared_types import EDGE_ORDER, EdgeTag, make_logger
from .types import CollocationSet, DomainSpec
from .util import round_half_up

logger = make_logger("sampling")

BASE_DOMAIN_POINTS = 8
BASE_POINTS_PER_EDGE = 1
CANONICAL_LEVELS = 8

# recorded in the config echo so datasets can be regenerated
SAMPLER_INFO = {"prng": PRNG_NAME, "lhs": "scipy.stats.qmc.LatinHypercube(scramble=True)"}


def _unit_lhs(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    try:
        sampler = qmc.LatinHypercube(d=d, rng=rng)
    except TypeError:
        # scipy < 1.15 only knows `seed`
        sampler = qmc.LatinHypercube(d=d, seed=rng)
    return sampler.random(n)


def latin_hypercube(n: int, rect: DomainSpec, seed: int | np.random.Generator) -> np.ndarray:
    """n points in `rect`, one per stratum along each axis, as an (n, 2) array."""
    if n < 1:
        raise ArgumentError(f"latin_hypercube(): need at least one point, got n={n}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    unit = _unit_lhs(n, 2, rng)
    return qmc.scale(unit, [rect.x_min, rect.y_min], [rect.x_max, rect.y_max])


def edge_points(edge: EdgeTag, n: int, rect: DomainSpec, rng: np.random.Generator) -> np.ndarray:
    """1-D LHS along one edge, the fixed coordinate set exactly to the edge value."""
    t = _unit_lhs(n, 1, rng)[:, 0]
    pts = np.empty((n, 2))
    if edge in (EdgeTag.SOUTH, EdgeTag.NORTH):
        pts[:, 0] = rect.x_min + t * rect.width
        pts[:, 1] = rect.y_min if edge is EdgeTag.SOUTH else rect.y_max
    else:
        pts[:, 0] = rect.x_max if edge is EdgeTag.EAST else rect.x_min
        pts[:, 1] = rect.y_min + t * rect.height
    return pts


def hierarchical_datasets(levels: int, rect: DomainSpec, seed: int, exact_solution=BELTRAMI) -> list[CollocationSet]:
    """Nested ladder of collocation sets: 12, 24, 48, ... total points, 2:1 domain to boundary.

    Level k+1 keeps every point of level k and adds as many new ones, drawn by LHS (the
    stratification holds per increment, not for the union).
    """
    if levels < 1:
        raise ArgumentError(f"hierarchical_datasets(): need at least one level, got {levels}")
    if levels > CANONICAL_LEVELS:
        logger.warning(f"{levels} levels requested, the canonical ladder stops at {CANONICAL_LEVELS}.")
    children = np.random.SeedSequence(int(seed) & SEED_MASK).spawn(levels)
    domain = np.empty((0, 2))
    boundary = np.empty((0, 2))
    edges: list[EdgeTag] = []
    out = []
    for level, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        new_domain = BASE_DOMAIN_POINTS * 2 ** max(level - 1, 0)
        new_per_edge = BASE_POINTS_PER_EDGE * 2 ** max(level - 1, 0)
        domain = np.concatenate([domain, latin_hypercube(new_domain, rect, rng)])
        for edge in EDGE_ORDER:
            boundary = np.concatenate([boundary, edge_points(edge, new_per_edge, rect, rng)])
            edges.extend([edge] * new_per_edge)
        targets = exact_solution.dirichlet(boundary[:, 0], boundary[:, 1])
        out.append(CollocationSet(domain, boundary, tuple(edges), targets, level=level, seed=seed))
        logger.debug(f"level {level}: {domain.shape[0]} domain + {boundary.shape[0]} boundary points")
    return out


def split_validation(collocation: CollocationSet, fraction: float, seed: int) -> tuple[CollocationSet, CollocationSet]:
    """Holds out round-half-up(fraction * total) points, drawn uniformly over domain and boundary together."""
    if not 0 <= fraction < 1:
        raise ArgumentError(f"split_validation(): fraction must lie in [0, 1), got {fraction}")
    total = collocation.total
    n_val = round_half_up(fraction * total)
    picked = np.zeros(total, dtype=bool)
    if n_val:
        picked[make_rng(seed).choice(total, size=n_val, replace=False)] = True
    n_d = collocation.n_domain
    train = collocation.subset(np.flatnonzero(~picked[:n_d]), np.flatnonzero(~picked[n_d:]))
    val = collocation.subset(np.flatnonzero(picked[:n_d]), np.flatnonzero(picked[n_d:]))
    return train, val


def test_grid(rect: DomainSpec, n_per_side: int) -> np.ndarray:
    """n x n uniform grid including the corners, x varying fastest, starting at (x_min, y_min)."""
    if n_per_side < 2:
        raise ArgumentError(f"test_grid(): need at least 2 points per side, got {n_per_side}")
    xs = np.linspace(rect.x_min, rect.x_max, n_per_side)
    ys = np.linspace(rect.y_min, rect.y_max, n_per_side)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    return np.column_stack([gx.ravel(), gy.ravel()])


# pytest would try to collect `test_grid` from modules importing it by name
test_grid.__test__ = False


def grid_collocation(rect: DomainSpec, n_per_side: int, exact_solution=BELTRAMI) -> CollocationSet:
    """The test grid as a collocation set: every grid point is a domain point, the grid's
    perimeter points are also boundary points with exact Dirichlet data."""
    grid = test_grid(rect, n_per_side)
    i = np.arange(grid.shape[0])
    col, row = i % n_per_side, i // n_per_side
    tags = np.full(grid.shape[0], None, dtype=object)
    # corners go to the first matching edge in EDGE_ORDER
    for edge, mask in zip(
        EDGE_ORDER, (row == 0, col == n_per_side - 1, row == n_per_side - 1, col == 0)
    ):
        tags[(tags == None) & mask] = edge  # noqa: E711
    on_edge = np.flatnonzero(tags != None)  # noqa: E711
    boundary = grid[on_edge]
    return CollocationSet(
        grid,
        boundary,
        tuple(tags[on_edge]),
        exact_solution.dirichlet(boundary[:, 0], boundary[:, 1]),
    )
