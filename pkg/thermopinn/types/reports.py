import json
from dataclasses import dataclass, asdict

from .fields import FIELD_NAMES


@dataclass(frozen=True)
class FieldErrors:
    """Errors of one field against the exact solution on the test grid."""

    w0_inf: float
    w1_inf: float
    w2_inf: float
    l2: float

    def norm(self, name: str) -> float:
        return getattr(self, name)


@dataclass(frozen=True)
class ErrorReport:
    """Per-field W^{k,inf} and discrete L2 errors plus the grid they were measured on."""

    u: FieldErrors
    v: FieldErrors
    p: FieldErrors
    theta: FieldErrors
    grid_points: int
    grid_per_side: int
    domain: dict

    def field(self, name: str) -> FieldErrors:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, provenance: dict | None = None) -> str:
        data = self.to_dict()
        if provenance is not None:
            data = {"provenance": provenance, **data}
        return json.dumps(data, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict):
        return cls(
            **{f: FieldErrors(**data[f]) for f in FIELD_NAMES},
            grid_points=data["grid_points"],
            grid_per_side=data["grid_per_side"],
            domain=data["domain"],
        )


@dataclass(frozen=True)
class ConvergenceFit:
    """Least-squares line through (log10 abscissa, log10 error)."""

    slope: float
    intercept: float
    r_squared: float
    abscissa: str
    """`training_error` or `collocation_count`."""
    points: int

    @property
    def rate(self) -> float:
        """Positive rate: the slope vs training error, minus the slope vs collocation count."""
        return -self.slope if self.abscissa == "collocation_count" else self.slope

    def to_dict(self) -> dict:
        return {**asdict(self), "rate": self.rate}
