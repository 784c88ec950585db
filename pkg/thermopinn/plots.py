"""Optional SVG figures, only drawn when `--plots` is given."""

import pathlib
import typing

import numpy as np

from .shared_types import make_logger
from .types import TrainingHistory

logger = make_logger("harness")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "thermopinn"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    fig.clf()
    logger.debug(f"wrote plot {path}")
    return path


def residual_decomposition(history: TrainingHistory, path) -> pathlib.Path:
    """r_domain, r_boundary, r_augm and r_total per epoch on a log scale."""
    plt = _pyplot()
    fig, ax = plt.subplots()
    epochs = [r.epoch for r in history.records]
    for key, style in (("r_total", "k-"), ("r_domain", "b--"), ("r_boundary", "r--"), ("r_augm", "g:")):
        series = history.series(key)
        if any(v is None for v in series):
            continue
        ax.semilogy(epochs, series, style, label=key)
    validation = history.series("validation_total")
    if validation and all(v is not None for v in validation):
        ax.semilogy(epochs, validation, "m-.", label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("residual")
    ax.legend()
    out = _save(fig, path)
    plt.close(fig)
    return out


def loglog(
    series: dict[str, typing.Sequence[tuple[float, float]]],
    path,
    xlabel: str,
    ylabel: str,
    title: str = "",
    invert_x: bool = False,
) -> pathlib.Path:
    """One line per label through (abscissa, error) pairs; nonpositive pairs are skipped."""
    plt = _pyplot()
    fig, ax = plt.subplots()
    for label, pts in series.items():
        pts = [(a, e) for a, e in pts if a > 0 and e > 0]
        if pts:
            a, e = zip(*sorted(pts))
            ax.loglog(a, e, "o-", label=label)
    if invert_x:
        ax.invert_xaxis()
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend()
    out = _save(fig, path)
    plt.close(fig)
    return out


def field_heatmap(values: np.ndarray, n_per_side: int, extent: tuple[float, float, float, float], path, title: str = "") -> pathlib.Path:
    """Heat map of a quantity given on the n x n test grid (x fastest)."""
    plt = _pyplot()
    fig, ax = plt.subplots()
    image = ax.imshow(np.asarray(values).reshape(n_per_side, n_per_side), origin="lower", extent=extent, cmap="viridis")
    fig.colorbar(image, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    out = _save(fig, path)
    plt.close(fig)
    return out


def epochs_heatmap(rows: list[str], columns: list[str], epochs: list[list[int | None]], path) -> pathlib.Path:
    """Epochs-to-threshold per (architecture, dataset) cell, N.C. cells left blank and labelled."""
    plt = _pyplot()
    data = np.array([[np.nan if e is None else e for e in row] for row in epochs], dtype=np.float64)
    fig, ax = plt.subplots()
    image = ax.imshow(data, cmap="magma_r", aspect="auto")
    fig.colorbar(image, ax=ax, label="epochs")
    ax.set_xticks(range(len(columns)), labels=columns)
    ax.set_yticks(range(len(rows)), labels=rows)
    for i, row in enumerate(epochs):
        for j, e in enumerate(row):
            ax.text(j, i, "N.C." if e is None else str(e), ha="center", va="center", fontsize=7)
    ax.set_xlabel("collocation points")
    out = _save(fig, path)
    plt.close(fig)
    return out
