"""
Checkpoints: trained parameters plus what is needed to reproduce or continue the run.

Floats are stored as `float.hex` strings so a save/load cycle is bit-exact.
"""

import json
import pathlib
import typing
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ArchitectureError, CheckpointError, CheckpointVersionError
from .shared_types import TrainStatus, make_logger
from .types import MLPArchitecture, ParameterVector
from .util import floats_to_hex, hex_to_array

logger = make_logger("harness")

FORMAT_VERSION = 1
REQUIRED_KEYS = ("format_version", "architecture", "activation", "seed", "parameters")


@dataclass(frozen=True)
class Checkpoint:
    architecture: MLPArchitecture
    parameters: ParameterVector
    seed: int = 0
    config: dict = field(default_factory=dict)
    """Resolved experiment config of the run that produced the parameters."""
    status: TrainStatus | None = None
    epochs_used: int = 0
    optimizer_state: dict | None = None
    """Optional Adam moments: {"kind": "adam", "t": steps, "m": array, "v": array}."""
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        try:
            self.parameters.check(self.architecture)
        except ArchitectureError as e:
            raise CheckpointError(f"checkpoint parameters don't fit the architecture: {e}") from None

    def to_dict(self) -> dict:
        data = {
            "format_version": self.format_version,
            "architecture": str(self.architecture),
            "activation": self.architecture.activation.value,
            "seed": self.seed,
            "parameters": floats_to_hex(self.parameters.values),
            "config": self.config,
            "status": self.status.value if self.status is not None else None,
            "epochs_used": self.epochs_used,
            "optimizer_state": None,
        }
        if self.optimizer_state is not None:
            state = dict(self.optimizer_state)
            for key in ("m", "v"):
                if key in state:
                    state[key] = floats_to_hex(np.asarray(state[key]).reshape(-1))
            data["optimizer_state"] = state
        return data

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: typing.Any):
        if not isinstance(data, dict):
            raise CheckpointError("checkpoint must be a JSON object")
        if data.get("format_version") != FORMAT_VERSION:
            raise CheckpointVersionError(data.get("format_version"), FORMAT_VERSION)
        missing = [k for k in REQUIRED_KEYS if k not in data]
        if missing:
            raise CheckpointError(f"checkpoint is missing {', '.join(missing)}")
        try:
            arch = MLPArchitecture.parse(data["architecture"], data["activation"])
            params = ParameterVector(hex_to_array(data["parameters"]))
            status = TrainStatus(data["status"]) if data.get("status") is not None else None
            state = data.get("optimizer_state")
            if state is not None:
                state = {k: hex_to_array(v) if k in ("m", "v") else v for k, v in state.items()}
        except (ArchitectureError, ValueError, TypeError, AttributeError) as e:
            raise CheckpointError(f"checkpoint is malformed: {e}") from None
        return cls(
            arch,
            params,
            seed=int(data["seed"]),
            config=data.get("config") or {},
            status=status,
            epochs_used=int(data.get("epochs_used", 0)),
            optimizer_state=state,
        )

    @classmethod
    def loads(cls, text: str):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise CheckpointError(f"checkpoint is not valid JSON (truncated?): {e}") from None
        return cls.from_dict(data)


def save_checkpoint(checkpoint: Checkpoint, path: str | pathlib.Path) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint.dumps().encode("utf-8"))
    logger.debug(f"wrote checkpoint {path}")
    return path


def load_checkpoint(path: str | pathlib.Path) -> Checkpoint:
    path = pathlib.Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint {str(path)!r} does not exist") from None
    except (OSError, UnicodeDecodeError) as e:
        raise CheckpointError(f"can't read checkpoint {str(path)!r}: {e}") from None
    return Checkpoint.loads(text)
