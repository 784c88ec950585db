from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ArchitectureError
from ..shared_types import Activation


@dataclass(frozen=True)
class MLPArchitecture:
    """Layer layout of the fully connected network, e.g. `MLPArchitecture.parse("2-128-128-4")`.

    First width is 2 (x, y), last is 4 (u, v, p, theta). Hidden layers use `activation`, the output layer is linear.
    """

    layer_widths: tuple[int, ...]
    activation: Activation = Activation.TANH

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2 or widths[0] != 2 or widths[-1] != 4:
            raise ArchitectureError(
                f"architecture {self}: first width must be 2 and last width 4."
            )
        if any(w < 1 for w in widths):
            raise ArchitectureError(f"architecture {self}: widths must be positive.")

    @classmethod
    def parse(cls, text: str, activation: str = "tanh"):
        try:
            widths = tuple(int(part) for part in text.strip().split("-"))
        except ValueError:
            raise ArchitectureError(f"can't parse architecture string {text!r}") from None
        try:
            act = Activation(activation)
        except ValueError:
            raise ArchitectureError(f"unknown activation {activation!r}") from None
        return cls(widths, act)

    def __str__(self):
        return "-".join(str(w) for w in self.layer_widths)

    @property
    def hidden_layers(self) -> int:
        return len(self.layer_widths) - 2

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        """(fan_out, fan_in) for each affine layer."""
        w = self.layer_widths
        return [(w[i], w[i - 1]) for i in range(1, len(w))]

    @property
    def parameter_count(self) -> int:
        return sum(out * inp + out for out, inp in self.layer_shapes)


@dataclass(frozen=True, eq=False)
class ParameterVector:
    """Flat trainable parameters, layer by layer: weight matrix (row-major, shape fan_out x fan_in) then bias.

    The wrapped array is read-only.
    """

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ArchitectureError("ParameterVector: all entries must be finite.")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ParameterVector):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(np.array_equal(self.values, other.values))

    def check(self, arch: MLPArchitecture) -> "ParameterVector":
        if len(self) != arch.parameter_count:
            raise ArchitectureError(
                f"parameter vector has {len(self)} entries, architecture {arch} needs {arch.parameter_count}."
            )
        return self

    def layers(self, arch: MLPArchitecture) -> list[tuple[np.ndarray, np.ndarray]]:
        """Splits into (W, b) views per layer."""
        self.check(arch)
        out, offset = [], 0
        for fan_out, fan_in in arch.layer_shapes:
            w = self.values[offset : offset + fan_out * fan_in].reshape(fan_out, fan_in)
            offset += fan_out * fan_in
            b = self.values[offset : offset + fan_out]
            offset += fan_out
            out.append((w, b))
        return out

    @classmethod
    def from_layers(cls, layers: list[tuple[np.ndarray, np.ndarray]]):
        parts = []
        for w, b in layers:
            parts.append(np.asarray(w, dtype=np.float64).reshape(-1))
            parts.append(np.asarray(b, dtype=np.float64).reshape(-1))
        return cls(np.concatenate(parts) if parts else np.zeros(0))
