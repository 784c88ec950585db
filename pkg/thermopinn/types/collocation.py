import csv
import io
import typing
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ConfigurationError
from ..shared_types import EdgeTag
from .fields import Point2

CSV_COLUMNS = ("x", "y", "kind", "g_u", "g_v", "g_theta", "g_p")


def _frozen(arr, shape_tail: tuple) -> np.ndarray:
    out = np.array(arr, dtype=np.float64).reshape((-1, *shape_tail))
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class CollocationSet:
    """Training points: domain samples plus boundary samples carrying Dirichlet data.

    `boundary_targets` columns are (g_u, g_v, g_theta, g_p). Arrays are read-only.
    """

    domain_points: np.ndarray = field(repr=False)
    boundary_points: np.ndarray = field(repr=False)
    boundary_edges: tuple[EdgeTag, ...] = field(repr=False)
    boundary_targets: np.ndarray = field(repr=False)
    level: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "domain_points", _frozen(self.domain_points, (2,)))
        object.__setattr__(self, "boundary_points", _frozen(self.boundary_points, (2,)))
        object.__setattr__(self, "boundary_targets", _frozen(self.boundary_targets, (4,)))
        object.__setattr__(self, "boundary_edges", tuple(self.boundary_edges))
        n_b = self.boundary_points.shape[0]
        if len(self.boundary_edges) != n_b or self.boundary_targets.shape[0] != n_b:
            raise ConfigurationError(
                "CollocationSet: boundary points, edge tags and targets differ in length."
            )

    @property
    def n_domain(self) -> int:
        return self.domain_points.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary_points.shape[0]

    @property
    def total(self) -> int:
        return self.n_domain + self.n_boundary

    def domain(self) -> list[Point2]:
        return [Point2(float(x), float(y)) for x, y in self.domain_points]

    def boundary(self) -> list[tuple[Point2, EdgeTag, tuple[float, float, float]]]:
        """(point, edge, (g_u, g_v, g_theta)) per boundary sample."""
        return [
            (Point2(float(p[0]), float(p[1])), e, (float(t[0]), float(t[1]), float(t[2])))
            for p, e, t in zip(self.boundary_points, self.boundary_edges, self.boundary_targets)
        ]

    def has_canonical_ratio(self) -> bool:
        """Twice as many domain points as boundary points, boundary split evenly over four edges."""
        counts = [sum(1 for e in self.boundary_edges if e is tag) for tag in EdgeTag]
        return self.n_domain == 2 * self.n_boundary and len(set(counts)) == 1

    def subset(self, domain_index: np.ndarray, boundary_index: np.ndarray) -> "CollocationSet":
        return CollocationSet(
            self.domain_points[domain_index],
            self.boundary_points[boundary_index],
            tuple(self.boundary_edges[i] for i in boundary_index),
            self.boundary_targets[boundary_index],
            level=self.level,
            seed=self.seed,
        )

    def duplicated(self) -> "CollocationSet":
        """Every point twice, handy for checking the mean convention."""
        d = np.concatenate([np.arange(self.n_domain)] * 2)
        b = np.concatenate([np.arange(self.n_boundary)] * 2)
        return self.subset(d, b)

    def to_csv(self, stream: typing.TextIO | None = None, header_lines: typing.Sequence[str] = ()) -> str:
        """Writes the set as CSV (domain rows carry empty target cells). Returns the text."""
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for x, y in self.domain_points:
            writer.writerow([repr(float(x)), repr(float(y)), "domain", "", "", "", ""])
        for p, e, t in zip(self.boundary_points, self.boundary_edges, self.boundary_targets):
            writer.writerow(
                [repr(float(p[0])), repr(float(p[1])), e.kind, *(repr(float(v)) for v in t)]
            )
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text

    @classmethod
    def from_csv(cls, stream: typing.TextIO, level: int = 0, seed: int = 0):
        rows = csv.DictReader(line for line in stream if not line.startswith("#"))
        domain, points, edges, targets = [], [], [], []
        by_kind = {tag.kind: tag for tag in EdgeTag}
        for row in rows:
            xy = (float(row["x"]), float(row["y"]))
            if row["kind"] == "domain":
                domain.append(xy)
            elif row["kind"] in by_kind:
                points.append(xy)
                edges.append(by_kind[row["kind"]])
                targets.append([float(row[c]) for c in ("g_u", "g_v", "g_theta", "g_p")])
            else:
                raise ConfigurationError(f"collocation CSV: unknown kind {row['kind']!r}")
        return cls(
            np.array(domain).reshape(-1, 2),
            np.array(points).reshape(-1, 2),
            tuple(edges),
            np.array(targets).reshape(-1, 4),
            level=level,
            seed=seed,
        )
