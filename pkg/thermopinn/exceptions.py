from .shared_types import logger


class ThermoPinnException(Exception):
    """Base class, every thermopinn error logs itself when raised."""

    def __init__(self, *args):
        super().__init__(*args)
        logger.error(" ".join(str(a) for a in args))


class ArchitectureError(ThermoPinnException):
    """Malformed architecture string or a parameter vector that doesn't fit the architecture."""


class NumericalOverflow(ThermoPinnException):
    def __init__(self, layer: int, txt: str = ""):
        self.layer = layer
        super().__init__(f"non-finite values after layer {layer}. {txt}".strip())


class ConfigurationError(ThermoPinnException):
    """Raised for unusable configs and empty point sets."""


class ArgumentError(ThermoPinnException, ValueError):
    """A precondition on an argument failed."""


class CheckpointError(ThermoPinnException):
    pass


class CheckpointVersionError(CheckpointError):
    def __init__(self, found, expected):
        self.found = found
        super().__init__(
            f"checkpoint format_version {found!r} is not supported (expected {expected})."
        )


class ImproperUsage(Warning):
    def __init__(self, *args, txt: str):
        super().__init__(*args)
        logger.warning(f" {args}: {txt}")
