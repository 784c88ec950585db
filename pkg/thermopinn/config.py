"""Experiment configuration: defaults, presets, JSON files and command-line overrides."""

import copy
import json
import pathlib
import typing

from .exceptions import ArchitectureError, ConfigurationError
from .sampling import SAMPLER_INFO
from .shared_types import make_logger
from .types import DomainSpec, FlowParameters, MLPArchitecture, TrainConfig

logger = make_logger("harness")

ARCHITECTURE_SWEEP = ("2-32-4", "2-64-4", "2-128-4", "2-32-32-4", "2-64-64-4", "2-128-128-4")

DEFAULTS: dict[str, typing.Any] = {
    "preset": "desk",
    "seed": 0,
    "augmented": True,
    "architecture": "2-32-32-4",
    "activation": "tanh",
    "domain": {"x_min": -1.0, "x_max": 1.0, "y_min": -1.0, "y_max": 1.0},
    "flow": {"nu": 1.0, "alpha": 1.0, "beta": 1.0, "g": [0.0, -1.0]},
    "train": {
        "optimizer": "adam",
        "learning_rate": 1e-3,
        "threshold": 1e-2,
        "max_epochs": 50_000,
        "pressure_boundary": False,
        "validation_fraction": 0.15,
        "lbfgs_history": 20,
        "wolfe_c1": 1e-4,
        "wolfe_c2": 0.9,
        "gradient_tolerance": 1e-12,
        "divergence_limit": 1e6,
        "log_every": 1000,
    },
    "levels": 6,
    "level": 5,
    "test_grid": 100,
    "out": "runs",
    "plots": False,
    "workers": 1,
    "sampler": dict(SAMPLER_INFO),
    "study": {
        "thresholds": [1e-1, 1e-2, 1e-3],
        "levels": [0, 1, 2, 3, 4, 5],
        "architectures": list(ARCHITECTURE_SWEEP),
        "seeds": [0],
        "ablation_threshold": 1e-3,
        "ablation_levels": [4, 5, 6],
    },
    "transfer": {
        "checkpoint": None,
        "optimizer": "lbfgs",
        "max_epochs": 5000,
        "epochs": None,
        "threshold": None,
        "domain": {},
        "flow": {},
        "cold_baseline": False,
    },
}

PRESETS: dict[str, dict] = {
    "desk": {},
    "full-scale": {
        "architecture": "2-128-128-4",
        "train": {"threshold": 1e-4, "max_epochs": 350_000},
        "levels": 8,
        "level": 7,
        "study": {
            "thresholds": [1e-1, 1e-2, 1e-3, 1e-4],
            "levels": [0, 1, 2, 3, 4, 5, 6, 7],
            "ablation_threshold": 1e-4,
            "ablation_levels": [5, 6, 7],
        },
    },
    # the two transfer cases; sweeps and runs under these presets use the new domain / flow directly
    "half-domain": {
        "domain": {"x_min": 0.0, "x_max": 1.0, "y_min": -1.0, "y_max": 1.0},
        "transfer": {"domain": {"x_min": 0.0, "x_max": 1.0, "y_min": -1.0, "y_max": 1.0}},
    },
    "reynolds-10": {
        "flow": {"nu": 0.1, "g": [0.0, -9.8]},
        "transfer": {"flow": {"nu": 0.1, "g": [0.0, -9.8]}},
    },
    "ablation": {"levels": 7, "level": 6, "study": {"ablation_threshold": 1e-3, "ablation_levels": [6]}},
}
PRESETS["paper-scale"] = PRESETS["full-scale"]
LONG_RUNNING = ("full-scale", "paper-scale")

DOMAIN_KEYS = ("x_min", "x_max", "y_min", "y_max")
FLOW_KEYS = ("nu", "alpha", "beta", "g")
# seed and augmented live at the top level and are folded into the train section
TRAIN_KEYS = tuple(k for k in TrainConfig.__dataclass_fields__ if k not in ("seed", "augmented"))
SECTION_KEYS: dict[tuple[str, ...], tuple[str, ...]] = {
    ("domain",): DOMAIN_KEYS,
    ("flow",): FLOW_KEYS,
    ("train",): TRAIN_KEYS,
    ("study",): tuple(DEFAULTS["study"]),
    ("transfer",): tuple(DEFAULTS["transfer"]),
    ("transfer", "domain"): DOMAIN_KEYS,
    ("transfer", "flow"): FLOW_KEYS,
    ("sampler",): tuple(DEFAULTS["sampler"]),
}


def check_sections(data: dict):
    """Raises ConfigurationError for keys a section doesn't know, e.g. a misspelled `train.treshold`."""
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for path, allowed in SECTION_KEYS.items():
        node = data
        for part in path:
            node = node.get(part) if isinstance(node, dict) else None
        if node is None:
            continue
        if not isinstance(node, dict):
            raise ConfigurationError(f"config section {'.'.join(path)!r} must be an object")
        unknown = set(node) - set(allowed)
        if unknown:
            names = ", ".join(".".join((*path, k)) for k in sorted(unknown))
            raise ConfigurationError(f"unknown config keys: {names} (known: {', '.join(allowed)})")


def deep_merge(base: dict, changes: dict) -> dict:
    """Returns a copy of `base` with `changes` merged in, nested dicts merged key by key."""
    out = copy.deepcopy(base)
    for key, value in changes.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_override(text: str) -> tuple[list[str], typing.Any]:
    """`train.threshold=1e-3` -> (["train", "threshold"], 0.001). Values are JSON, else plain strings."""
    if "=" not in text:
        raise ConfigurationError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    path = [part for part in key.strip().split(".") if part]
    if not path:
        raise ConfigurationError(f"--set: empty key in {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_override(data: dict, path: list[str], value) -> dict:
    if path[0] not in DEFAULTS:
        raise ConfigurationError(f"unknown config key {'.'.join(path)!r}")
    node = data
    for part in path[:-1]:
        child = node.get(part)
        if child is None:
            child = node[part] = {}
        if not isinstance(child, dict):
            raise ConfigurationError(f"config key {'.'.join(path)!r} goes through a non-object value")
        node = child
    node[path[-1]] = value
    return data


def load_json(path: str | pathlib.Path) -> dict:
    path = pathlib.Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigurationError(f"config file {str(path)!r} does not exist") from None
    except OSError as e:
        raise ConfigurationError(f"can't read config file {str(path)!r}: {e}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config file {str(path)!r} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {str(path)!r} must hold a JSON object")
    return data


class ExperimentConfig:
    """A fully resolved experiment configuration. The underlying dictionary is what gets echoed into outputs."""

    def __init__(self, _data: dict[str, typing.Any], explicit: typing.Iterable[str] = ()):
        check_sections(_data)
        self.__data = deep_merge(DEFAULTS, _data)
        self.explicit = frozenset(explicit)
        """Top-level keys set by a preset, file, override or flag rather than the built-in defaults."""
        # fail early on anything that doesn't build
        self.domain, self.flow, self.architecture, self.train_config
        self.transfer_domain, self.transfer_flow, self.transfer_config
        if not 1 <= self.levels <= 8 or not 0 <= self.level < self.levels:
            raise ConfigurationError(f"need 1 <= levels <= 8 and 0 <= level < levels, got {self.levels}, {self.level}")
        if self.test_grid < 2 or self.workers < 1:
            raise ConfigurationError("test_grid must be >= 2 and workers >= 1")

    @property
    def preset(self) -> str:
        return self.__data["preset"]

    @property
    def seed(self) -> int:
        return int(self.__data["seed"])

    @property
    def augmented(self) -> bool:
        "Whether the pressure-Poisson terms are part of the minimized residual."
        return bool(self.__data["augmented"])

    @property
    def architecture(self) -> MLPArchitecture:
        try:
            return MLPArchitecture.parse(str(self.__data["architecture"]), self.__data["activation"])
        except ArchitectureError as e:
            raise ConfigurationError(f"bad architecture: {e}") from None

    @property
    def domain(self) -> DomainSpec:
        return self._domain(self.__data["domain"])

    @property
    def flow(self) -> FlowParameters:
        return self._flow(self.__data["flow"])

    @staticmethod
    def _domain(data: dict) -> DomainSpec:
        try:
            return DomainSpec.from_dict(data)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"bad domain {data!r}: {e}") from None

    @staticmethod
    def _flow(data: dict) -> FlowParameters:
        try:
            return FlowParameters.from_dict(data)
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise ConfigurationError(f"bad flow parameters {data!r}: {e}") from None

    @property
    def train_config(self) -> TrainConfig:
        """TrainConfig with the top-level seed and augmentation flag folded in."""
        return self._train_config(self.__data["train"])

    def _train_config(self, data: dict) -> TrainConfig:
        merged = {**data, "seed": self.seed, "augmented": self.augmented}
        try:
            return TrainConfig.from_dict(merged)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"bad train settings {data!r}: {e}") from None

    @property
    def levels(self) -> int:
        "Number of dataset ladder levels generated."
        return int(self.__data["levels"])

    @property
    def level(self) -> int:
        "Ladder level `train` uses."
        return int(self.__data["level"])

    @property
    def test_grid(self) -> int:
        return int(self.__data["test_grid"])

    @property
    def out_dir(self) -> pathlib.Path:
        return pathlib.Path(self.__data["out"])

    @property
    def plots(self) -> bool:
        return bool(self.__data["plots"])

    @property
    def workers(self) -> int:
        return int(self.__data["workers"])

    @property
    def study(self) -> dict:
        return self.__data["study"]

    @property
    def thresholds(self) -> list[float]:
        return [float(t) for t in self.study["thresholds"]]

    @property
    def study_levels(self) -> list[int]:
        return [int(k) for k in self.study["levels"]]

    @property
    def study_architectures(self) -> list[MLPArchitecture]:
        return [MLPArchitecture.parse(a) for a in self.study["architectures"]]

    @property
    def study_seeds(self) -> list[int]:
        return [int(s) for s in self.study["seeds"]]

    @property
    def transfer(self) -> dict:
        return self.__data["transfer"]

    @property
    def transfer_domain(self) -> DomainSpec:
        return self._domain({**self.__data["domain"], **(self.transfer["domain"] or {})})

    @property
    def transfer_flow(self) -> FlowParameters:
        return self._flow({**self.__data["flow"], **(self.transfer["flow"] or {})})

    @property
    def transfer_config(self) -> TrainConfig:
        "Settings for the warm start. Same as `train` except optimizer, epoch cap and optionally threshold."
        t = self.transfer
        changes = {"optimizer": t["optimizer"], "max_epochs": t["max_epochs"]}
        if t.get("threshold") is not None:
            changes["threshold"] = t["threshold"]
        return self._train_config({**self.__data["train"], **changes})

    def with_(self, **changes) -> "ExperimentConfig":
        return ExperimentConfig(deep_merge(self.__data, changes), self.explicit | set(changes))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.__data)

    def to_json(self) -> str:
        return json.dumps(self.__data, indent=2, sort_keys=True)


def resolve_config(
    preset: str | None = None,
    path: str | pathlib.Path | None = None,
    overrides: typing.Iterable[str] = (),
    seed: int | None = None,
    augmented: bool | None = None,
    out: str | None = None,
    plots: bool | None = None,
    full_scale: bool = False,
) -> ExperimentConfig:
    """Defaults, then the preset, then the JSON file, then `--set` overrides, then dedicated flags."""
    file_data = load_json(path) if path is not None else {}
    name = preset or file_data.get("preset") or "desk"
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}, choose from {', '.join(PRESETS)}")
    data = deep_merge(DEFAULTS, PRESETS[name])
    data = deep_merge(data, file_data)
    data["preset"] = name
    explicit = set(PRESETS[name]) | set(file_data)
    for text in overrides:
        key, value = parse_override(text)
        data = apply_override(data, key, value)
        explicit.add(key[0])
    for key, value in (("seed", seed), ("augmented", augmented), ("out", out), ("plots", plots)):
        if value is not None:
            data[key] = value
            explicit.add(key)
    if name in LONG_RUNNING:
        if not full_scale:
            raise ConfigurationError(
                f"preset {name!r} is long-running (about 20 CPU-hours per cell); pass --full-scale (or --paper-scale) to run it"
            )
        logger.warning(f"preset {name!r}: full-scale settings, expect runs of many CPU-hours.")
    return ExperimentConfig(data, explicit - {"preset"})
