"""
This file holds small enums and the logging setup that would clog up the modules that use them, so they're put here.
"""

import enum
import logging
import sys


class Activation(enum.Enum):
    """Hidden-layer activations. Only tanh ships, the output layer is always linear."""

    TANH = "tanh"


class OptimizerKind(enum.Enum):
    ADAM = "adam"
    LBFGS = "lbfgs"


class TrainStatus(enum.Enum):
    """Terminal status of a training run."""

    CONVERGED = "Converged"
    """r_total reached the threshold."""
    MAX_EPOCHS_REACHED = "MaxEpochsReached"
    """Epoch cap hit first, shown as N.C. in sweep tables."""
    DIVERGED = "Diverged"
    """Loss went non-finite or above the divergence guard."""


class LineSearchStatus(enum.Enum):
    """Why `lbfgs_minimize` stopped."""

    GRADIENT_TOLERANCE = "gradient_tolerance"
    LOSS_THRESHOLD = "loss_threshold"
    MAX_ITERATIONS = "max_iterations"
    LINE_SEARCH_FAILED = "line_search_failed"
    STOPPED_BY_CALLBACK = "stopped_by_callback"


class EdgeTag(enum.Enum):
    """Boundary edge of the rectangle a boundary sample lies on."""

    SOUTH = "S"
    EAST = "E"
    NORTH = "N"
    WEST = "W"

    @property
    def kind(self) -> str:
        """The `kind` column used in collocation CSVs."""
        return f"edge-{self.value}"


# fixed order, boundary samples are generated edge by edge in this order
EDGE_ORDER = (EdgeTag.SOUTH, EdgeTag.EAST, EdgeTag.NORTH, EdgeTag.WEST)


class ColourFormatter(logging.Formatter):
    """Formatter that tints the logger name and level, the way every thermopinn logger prints."""

    FMT = "[ \x1b[38;2;255;128;0m\x1b[3;1m%(name)s\x1b[0m ] | %(levelname)s ~\x1b[38;2;255;217;0m %(asctime)s\x1b[0m ~: %(message)s"
    PLAIN = "[ %(name)s ] | %(levelname)s ~ %(asctime)s ~: %(message)s"

    def __init__(self, colour: bool = True):
        super().__init__(self.FMT if colour else self.PLAIN, datefmt="%H:%M:%S")


def make_logger(area: str) -> logging.Logger:
    """Returns the `thermopinn-<area>` logger, attaching the stream handler once."""
    logger = logging.getLogger(f"thermopinn-{area}")
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(ColourFormatter(colour=sys.stderr.isatty()))
        logger.addHandler(handler)
        logger.setLevel(logging.INFO)
        logger.propagate = False
    return logger


def set_verbosity(level: int):
    """Sets the level on every thermopinn logger created so far."""
    for name in list(logging.root.manager.loggerDict):
        if name.startswith("thermopinn-"):
            logging.getLogger(name).setLevel(level)


logger = make_logger("core")
