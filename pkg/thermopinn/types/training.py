import math
from dataclasses import dataclass, field, asdict, replace

from ..exceptions import ConfigurationError
from ..shared_types import OptimizerKind, TrainStatus
from .residuals import ResidualBreakdown


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and stopping settings for one training run."""

    optimizer: OptimizerKind = OptimizerKind.ADAM
    learning_rate: float = 1e-3
    threshold: float = 1e-2
    """epsilon_T, training stops once r_total <= threshold."""
    max_epochs: int = 50_000
    augmented: bool = True
    pressure_boundary: bool = False
    """Adds the optional pressure Dirichlet term R_p^B to the boundary residual."""
    validation_fraction: float = 0.15
    seed: int = 0
    lbfgs_history: int = 20
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    gradient_tolerance: float = 1e-12
    divergence_limit: float = 1e6
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    log_every: int = 1000

    def __post_init__(self):
        if isinstance(self.optimizer, str):
            object.__setattr__(self, "optimizer", OptimizerKind(self.optimizer))
        if not self.threshold >= 0 or math.isnan(self.threshold):
            raise ConfigurationError(f"TrainConfig: threshold must be >= 0, got {self.threshold}")
        if self.max_epochs < 1:
            raise ConfigurationError(f"TrainConfig: max_epochs must be >= 1, got {self.max_epochs}")
        if not 0 <= self.validation_fraction < 1:
            raise ConfigurationError(
                f"TrainConfig: validation_fraction must lie in [0, 1), got {self.validation_fraction}"
            )
        if self.learning_rate <= 0 or self.lbfgs_history < 1:
            raise ConfigurationError("TrainConfig: learning_rate and lbfgs_history must be positive")

    def with_(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["optimizer"] = self.optimizer.value
        return data

    @classmethod
    def from_dict(cls, data: dict):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"TrainConfig: unknown settings {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    breakdown: ResidualBreakdown
    validation_total: float | None

    @property
    def r_total(self) -> float:
        return self.breakdown.r_total


@dataclass
class TrainingHistory:
    """Per-epoch residual records and how the run ended."""

    records: list[EpochRecord] = field(default_factory=list)
    status: TrainStatus | None = None
    epochs_used: int = 0

    @property
    def final(self) -> EpochRecord | None:
        return self.records[-1] if self.records else None

    @property
    def final_total(self) -> float:
        return self.records[-1].r_total if self.records else math.inf

    @property
    def converged(self) -> bool:
        return self.status is TrainStatus.CONVERGED

    def series(self, key: str) -> list[float | None]:
        """One column over epochs, e.g. `series("r_boundary")`."""
        if key == "validation_total":
            return [r.validation_total for r in self.records]
        return [getattr(r.breakdown, key) for r in self.records]
