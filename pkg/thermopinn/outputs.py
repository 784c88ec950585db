"""
CSV and JSON writers. Every file starts with the provenance (resolved config, seed, version) so results
can be traced back to the run that made them: as `#` comment lines in CSVs, as a `provenance` key in JSON.
"""

import csv
import io
import json
import pathlib
import typing

import numpy as np

from .net import PRNG_NAME
from .shared_types import make_logger
from .types import FIELD_NAMES, FieldJet2, TrainingHistory
from .util import __version__

logger = make_logger("harness")

METRICS_COLUMNS = (
    "epoch",
    "r_u",
    "r_v",
    "r_div",
    "r_theta",
    "r_boundary_total",
    "r_p",
    "r_div_x",
    "r_div_y",
    "r_domain",
    "r_augm",
    "r_total",
    "validation_total",
)
FIELD_COLUMNS = ("x", "y", *FIELD_NAMES, *(f"err_{name}" for name in FIELD_NAMES))


def provenance(config: dict, seed: int, **extra) -> dict:
    return {"config": config, "seed": seed, "version": __version__, "prng": PRNG_NAME, **extra}


def header_lines(prov: dict) -> list[str]:
    return [json.dumps(prov, sort_keys=True)]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_text(path: str | pathlib.Path, text: str) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode("utf-8"))
    logger.debug(f"wrote {path}")
    return path


def table_text(columns: typing.Sequence[str], rows: typing.Iterable[typing.Sequence], prov: dict | None = None) -> str:
    buf = io.StringIO()
    if prov is not None:
        for line in header_lines(prov):
            buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_table(path, columns, rows, prov: dict | None = None) -> pathlib.Path:
    return write_text(path, table_text(columns, rows, prov))


def metrics_rows(history: TrainingHistory) -> list[list]:
    """One row per epoch. Augmentation cells stay empty when the run minimized the bare residual."""
    rows = []
    for record in history.records:
        b = record.breakdown
        rows.append(
            [
                record.epoch,
                b.r_u,
                b.r_v,
                b.r_div,
                b.r_theta,
                b.r_boundary,
                b.r_p if b.augmented else None,
                b.r_div_x if b.augmented else None,
                b.r_div_y if b.augmented else None,
                b.r_domain,
                b.r_augm,
                b.r_total,
                record.validation_total,
            ]
        )
    return rows


def write_metrics(path, history: TrainingHistory, prov: dict) -> pathlib.Path:
    return write_table(path, METRICS_COLUMNS, metrics_rows(history), prov)


def read_table(path) -> tuple[list[str], list[dict[str, str]]]:
    """Reads a CSV written by `write_table`: returns the `#` header lines and the rows."""
    comments, body = [], []
    for line in pathlib.Path(path).read_text(encoding="utf-8").splitlines():
        (comments if line.startswith("#") else body).append(line)
    return [c[1:].strip() for c in comments], list(csv.DictReader(body))


def write_field_table(path, grid: np.ndarray, predicted: FieldJet2, errors: dict[str, np.ndarray], prov: dict) -> pathlib.Path:
    """Predicted values and pointwise absolute errors per grid point, in grid order."""
    columns = [grid[:, 0], grid[:, 1]]
    columns += [np.asarray(predicted.field(name).value) for name in FIELD_NAMES]
    columns += [errors[name] for name in FIELD_NAMES]
    return write_table(path, FIELD_COLUMNS, zip(*columns), prov)


def write_json(path, data: dict, prov: dict | None = None) -> pathlib.Path:
    if prov is not None:
        data = {"provenance": prov, **data}
    return write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")
