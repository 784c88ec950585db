import math
from dataclasses import dataclass

from ..exceptions import ConfigurationError


@dataclass(frozen=True)
class FlowParameters:
    """Material parameters of the Boussinesq system, all nondimensional.

    The Reynolds number enters as `nu = 1 / Re` (see `from_reynolds`).
    """

    nu: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    g: tuple[float, float] = (0.0, -1.0)

    def __post_init__(self):
        values = (self.nu, self.alpha, self.beta, *self.g)
        if not all(math.isfinite(v) for v in values):
            raise ConfigurationError(f"FlowParameters: non-finite entry in {self}")
        if self.nu <= 0 or self.alpha <= 0:
            raise ConfigurationError(
                f"FlowParameters: nu and alpha must be positive, got nu={self.nu}, alpha={self.alpha}"
            )
        object.__setattr__(self, "g", (float(self.g[0]), float(self.g[1])))

    @classmethod
    def from_reynolds(cls, reynolds: float, **kwargs):
        """Unit velocity and length scales on the bi-unit square, so Re = 1/nu."""
        return cls(nu=1.0 / reynolds, **kwargs)

    @property
    def reynolds(self) -> float:
        return 1.0 / self.nu

    def to_dict(self) -> dict:
        return {"nu": self.nu, "alpha": self.alpha, "beta": self.beta, "g": list(self.g)}

    @classmethod
    def from_dict(cls, data: dict):
        return cls(
            nu=float(data.get("nu", 1.0)),
            alpha=float(data.get("alpha", 1.0)),
            beta=float(data.get("beta", 1.0)),
            g=tuple(data.get("g", (0.0, -1.0))),
        )


@dataclass(frozen=True)
class DomainSpec:
    """Axis-aligned rectangle [x_min, x_max] x [y_min, y_max]."""

    x_min: float = -1.0
    x_max: float = 1.0
    y_min: float = -1.0
    y_max: float = 1.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ConfigurationError(f"DomainSpec: empty rectangle {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "y_min": self.y_min, "y_max": self.y_max}

    @classmethod
    def from_dict(cls, data: dict):
        return cls(**{k: float(data[k]) for k in ("x_min", "x_max", "y_min", "y_max") if k in data})
