"""The fully connected network (x, y) -> (u, v, p, theta) and its flat parameterization."""

import numpy as np
import torch

from .exceptions import ArchitectureError, NumericalOverflow
from .shared_types import make_logger
from .types import FieldState, MLPArchitecture, ParameterVector, Point2

logger = make_logger("net")

# every computation in the package is float64
DTYPE = torch.float64
SEED_MASK = (1 << 64) - 1
PRNG_NAME = "numpy.PCG64"


def parameter_count(arch: MLPArchitecture) -> int:
    """Sum over layers of fan_in * fan_out + fan_out."""
    return arch.parameter_count


def make_rng(seed: int) -> np.random.Generator:
    """The one PRNG of the package (PCG64), seeded from a 64-bit integer."""
    return np.random.Generator(np.random.PCG64(int(seed) & SEED_MASK))


def init_parameters(arch: MLPArchitecture, seed: int) -> ParameterVector:
    """Glorot-uniform weights, zero biases, deterministic in (arch, seed)."""
    rng = make_rng(seed)
    layers = []
    for fan_out, fan_in in arch.layer_shapes:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append((rng.uniform(-bound, bound, size=(fan_out, fan_in)), np.zeros(fan_out)))
    params = ParameterVector.from_layers(layers)
    logger.debug(f"initialized {arch} ({len(params)} parameters) with seed {seed}")
    return params


def as_tensor(params: ParameterVector | np.ndarray, requires_grad: bool = False) -> torch.Tensor:
    flat = params.values if isinstance(params, ParameterVector) else params
    out = torch.tensor(np.array(flat, dtype=np.float64), dtype=DTYPE)
    return out.requires_grad_(requires_grad)


def split_layers(arch: MLPArchitecture, flat: torch.Tensor) -> list[tuple[torch.Tensor, torch.Tensor]]:
    """(W, b) views into a flat tensor, gradients flow back into `flat`."""
    if flat.shape[0] != arch.parameter_count:
        raise ArchitectureError(
            f"parameter vector has {flat.shape[0]} entries, architecture {arch} needs {arch.parameter_count}."
        )
    layers, offset = [], 0
    for fan_out, fan_in in arch.layer_shapes:
        w = flat[offset : offset + fan_out * fan_in].view(fan_out, fan_in)
        offset += fan_out * fan_in
        b = flat[offset : offset + fan_out]
        offset += fan_out
        layers.append((w, b))
    return layers


def check_finite(t: torch.Tensor, layer: int):
    if not bool(torch.isfinite(t).all()):
        raise NumericalOverflow(layer)


def forward_batch(arch: MLPArchitecture, params: ParameterVector | torch.Tensor, points) -> torch.Tensor:
    """Network outputs for an (N, 2) batch, shape (N, 4)."""
    flat = params if isinstance(params, torch.Tensor) else as_tensor(params)
    a = torch.as_tensor(np.asarray(points, dtype=np.float64), dtype=DTYPE).reshape(-1, 2)
    layers = split_layers(arch, flat)
    for i, (w, b) in enumerate(layers, start=1):
        a = torch.addmm(b, a, w.t())
        if i < len(layers):
            a = torch.tanh(a)
        check_finite(a, i)
    return a


def forward(arch: MLPArchitecture, params: ParameterVector, point: Point2) -> FieldState:
    """(u, v, p, theta) at one point."""
    with torch.no_grad():
        out = forward_batch(arch, params, [[point[0], point[1]]])[0]
    return FieldState(*(float(v) for v in out))
