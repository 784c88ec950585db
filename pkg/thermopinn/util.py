"""Helper functions for internal and external purposes."""

import math
import typing

import numpy as np

# don't modify __version__ by hand, pyproject reads it from here
__version__: str = "0.1.0"


def round_half_up(value: float) -> int:
    """Rounds to the nearest integer, ties going up (`round` in python rounds ties to even)."""
    return math.floor(value + 0.5)


def float_to_hex(value: float) -> str:
    """Lossless text form of a float, used by checkpoints."""
    return float(value).hex()


def hex_to_float(text: str) -> float:
    return float.fromhex(text)


def floats_to_hex(values: typing.Iterable[float]) -> list[str]:
    return [float(v).hex() for v in values]


def hex_to_array(texts: typing.Sequence[str]) -> np.ndarray:
    """Decodes a list of `float.hex` strings into a float64 array."""
    return np.array([float.fromhex(t) for t in texts], dtype=np.float64)


def parse_bool(text: str | bool) -> bool:
    """Parses the `true|false` strings the CLI accepts."""
    if isinstance(text, bool):
        return text
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")
