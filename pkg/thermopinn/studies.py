"""
Experiment drivers behind the CLI: a single training run, checkpoint evaluation, warm starts and the
three sweeps (threshold x dataset convergence, architecture x dataset, augmented vs bare ablation).

Sweep cells are independent; they can run in a process pool and are always collected in cell order,
so the written tables don't depend on the number of workers.
"""

import concurrent.futures
import pathlib
import typing
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
import torch

from . import outputs, plots
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ExperimentConfig
from .evaluation import error_field, error_report, estimate_generalization_error, fit_convergence
from .exceptions import CheckpointError, ImproperUsage
from .autodiff import evaluate_jet_batch
from .listener import TrainingListener
from .net import init_parameters
from .sampling import hierarchical_datasets, test_grid
from .shared_types import TrainStatus, make_logger
from .training import Trainer, train, transfer_learn
from .types import (
    FIELD_NAMES,
    DomainSpec,
    ErrorReport,
    FlowParameters,
    MLPArchitecture,
    ParameterVector,
    TrainingHistory,
)
from .util import round_half_up

logger = make_logger("harness")

NORMS = ("w0_inf", "w1_inf", "w2_inf", "l2")
ERROR_COLUMNS = tuple(f"{name}_{norm}" for name in FIELD_NAMES for norm in NORMS)
CELL_COLUMNS = (
    "seed",
    "architecture",
    "augmented",
    "level",
    "points",
    "threshold",
    "status",
    "epochs_used",
    "r_total",
    *ERROR_COLUMNS,
)


def error_columns(report: ErrorReport | None) -> dict:
    if report is None:
        return {c: None for c in ERROR_COLUMNS}
    return {f"{name}_{norm}": report.field(name).norm(norm) for name in FIELD_NAMES for norm in NORMS}


def run_summary(history: TrainingHistory, report: ErrorReport | None) -> dict:
    return {
        "status": history.status.value,
        "epochs_used": history.epochs_used,
        "r_total": history.final_total if history.records else None,
        "errors": report.to_dict() if report is not None else None,
    }


def _dataset(cfg: ExperimentConfig, level: int, seed: int, domain=None):
    return hierarchical_datasets(level + 1, domain or cfg.domain, seed)[level]


def train_run(cfg: ExperimentConfig) -> tuple[ParameterVector, TrainingHistory]:
    """Trains the configured network on the configured ladder level and writes all run outputs."""
    out = cfg.out_dir
    arch = cfg.architecture
    prov = outputs.provenance(cfg.to_dict(), cfg.seed)
    collocation = _dataset(cfg, cfg.level, cfg.seed)
    outputs.write_text(out / "collocation.csv", collocation.to_csv(header_lines=outputs.header_lines(prov)))
    logger.info(f"training {arch} on {collocation.total} points (level {cfg.level}), augmented={cfg.augmented}")

    trainer = Trainer(arch, cfg.flow, cfg.train_config)
    trainer.listeners.append(TrainingListener(lambda r: logger.debug(f"epoch {r.epoch}: {r.r_total:.6e}"), "epoch"))
    params, history = trainer.train(init_parameters(arch, cfg.seed), collocation)

    outputs.write_metrics(out / "metrics.csv", history, prov)
    save_checkpoint(
        Checkpoint(
            arch,
            params,
            seed=cfg.seed,
            config=cfg.to_dict(),
            status=history.status,
            epochs_used=history.epochs_used,
            optimizer_state=trainer.optimizer_state,
        ),
        out / "checkpoint.json",
    )
    if history.status is not TrainStatus.DIVERGED:
        write_evaluation(cfg, arch, params, out, extra=run_summary(history, None))
    if cfg.plots and history.records:
        plots.residual_decomposition(history, out / "residuals.svg")
    return params, history


def write_evaluation(
    cfg: ExperimentConfig,
    arch: MLPArchitecture,
    params: ParameterVector,
    out: pathlib.Path,
    extra: dict | None = None,
    domain: DomainSpec | None = None,
    flow: FlowParameters | None = None,
) -> ErrorReport:
    """Error report JSON (with e_G), predicted/error field CSV and optional heat maps.

    `domain` and `flow` default to the configured ones.
    """
    domain, flow = domain or cfg.domain, flow or cfg.flow
    prov = outputs.provenance(cfg.to_dict(), cfg.seed, domain=domain.to_dict(), flow=flow.to_dict())
    report = error_report(arch, params, domain, cfg.test_grid)
    e_g = estimate_generalization_error(arch, params, domain, flow, cfg.test_grid)
    data = {"architecture": str(arch), "report": report.to_dict(), "generalization_error": e_g}
    if extra:
        data.update({k: v for k, v in extra.items() if k != "errors"})
    outputs.write_json(out / "error_report.json", data, prov)

    grid = test_grid(domain, cfg.test_grid)
    predicted = evaluate_jet_batch(arch, params, grid)
    errors = error_field(arch, params, grid)
    outputs.write_field_table(out / "fields.csv", grid, predicted, errors, prov)
    if cfg.plots:
        extent = (domain.x_min, domain.x_max, domain.y_min, domain.y_max)
        for name in FIELD_NAMES:
            plots.field_heatmap(errors[name], cfg.test_grid, extent, out / f"error_{name}.svg", f"|{name} - exact|")
            plots.field_heatmap(predicted.field(name).value, cfg.test_grid, extent, out / f"{name}.svg", name)
    logger.info(
        "errors (W0 inf): " + ", ".join(f"{n}={report.field(n).w0_inf:.3e}" for n in FIELD_NAMES) + f", e_G={e_g:.3e}"
    )
    return report


def evaluate_run(cfg: ExperimentConfig, checkpoint_path) -> ErrorReport:
    """Scores a checkpoint on the domain and flow it was trained on, unless the configuration sets them."""
    ckpt = load_checkpoint(checkpoint_path)
    trained = ckpt.config or {}
    domain = cfg.domain if "domain" in cfg.explicit or "domain" not in trained else DomainSpec.from_dict(trained["domain"])
    flow = cfg.flow if "flow" in cfg.explicit or "flow" not in trained else FlowParameters.from_dict(trained["flow"])
    extra = {"checkpoint": str(checkpoint_path), "status": ckpt.status.value if ckpt.status else None}
    logger.info(f"evaluating {ckpt.architecture} on domain {domain.to_dict()}, nu={flow.nu}")
    return write_evaluation(cfg, ckpt.architecture, ckpt.parameters, cfg.out_dir, extra, domain, flow)


def transfer_run(cfg: ExperimentConfig, checkpoint_path, cold_baseline: bool = False) -> TrainingHistory:
    """Warm start on the transfer domain/flow; optionally the same run from a fresh initialization."""
    ckpt = load_checkpoint(checkpoint_path)
    arch = cfg.architecture
    domain, flow, tcfg = cfg.transfer_domain, cfg.transfer_flow, cfg.transfer_config
    epochs = cfg.transfer.get("epochs")
    out = cfg.out_dir
    prov = outputs.provenance(cfg.to_dict(), cfg.seed, checkpoint=str(checkpoint_path))
    collocation = _dataset(cfg, cfg.level, cfg.seed, domain)
    logger.info(f"transfer to domain {domain.to_dict()} with nu={flow.nu}, g={flow.g}, optimizer {tcfg.optimizer.value}")

    params, history = transfer_learn(ckpt, collocation, flow, tcfg, arch=arch, epochs=epochs)
    target = cfg.with_(domain=domain.to_dict(), flow=flow.to_dict())
    outputs.write_metrics(out / "transfer_metrics.csv", history, prov)
    save_checkpoint(
        Checkpoint(arch, params, seed=cfg.seed, config=target.to_dict(), status=history.status, epochs_used=history.epochs_used),
        out / "transfer_checkpoint.json",
    )
    report = error_report(arch, params, domain, cfg.test_grid)
    comparison = {"warm": run_summary(history, report)}

    if cold_baseline:
        cold_params, cold_history = train(arch, init_parameters(arch, cfg.seed), collocation, flow, tcfg)
        outputs.write_metrics(out / "cold_metrics.csv", cold_history, prov)
        cold_report = error_report(arch, cold_params, domain, cfg.test_grid) if cold_history.status is not TrainStatus.DIVERGED else None
        comparison["cold"] = run_summary(cold_history, cold_report)
        if cold_history.epochs_used:
            comparison["epoch_ratio"] = history.epochs_used / cold_history.epochs_used
        logger.info(f"warm start: {history.epochs_used} epochs, cold start: {cold_history.epochs_used} epochs")
    outputs.write_json(out / "transfer_report.json", comparison, prov)
    if cfg.plots and history.records:
        plots.residual_decomposition(history, out / "transfer_residuals.svg")
    return history


@dataclass(frozen=True)
class Cell:
    """One training run of a sweep."""

    config: dict
    architecture: str
    level: int
    threshold: float
    seed: int
    augmented: bool
    checkpoint: str | None = None
    """Warm start from this checkpoint with the transfer optimizer instead of a fresh initialization."""


def run_cell(cell: Cell) -> dict:
    cfg = ExperimentConfig(cell.config)
    arch = MLPArchitecture.parse(cell.architecture)
    collocation = _dataset(cfg, cell.level, cell.seed)
    if cell.checkpoint is None:
        train_cfg = cfg.train_config.with_(threshold=cell.threshold, seed=cell.seed, augmented=cell.augmented)
        params, history = train(arch, init_parameters(arch, cell.seed), collocation, cfg.flow, train_cfg)
    else:
        train_cfg = cfg.transfer_config.with_(threshold=cell.threshold, seed=cell.seed, augmented=cell.augmented)
        params, history = transfer_learn(load_checkpoint(cell.checkpoint), collocation, cfg.flow, train_cfg, arch=arch)
    report = None
    if history.status is not TrainStatus.DIVERGED:
        report = error_report(arch, params, cfg.domain, cfg.test_grid)
    return {
        "seed": cell.seed,
        "architecture": cell.architecture,
        "augmented": cell.augmented,
        "level": cell.level,
        "points": collocation.total,
        "threshold": cell.threshold,
        "status": history.status.value,
        "epochs_used": history.epochs_used,
        "r_total": history.final_total if history.records else None,
        **error_columns(report),
    }


def _worker_init():
    torch.set_num_threads(1)


def run_cells(cells: list[Cell], workers: int = 1) -> list[dict]:
    """Runs every cell, in a process pool when workers > 1. Results come back in cell order."""
    if not cells:
        raise ImproperUsage("run_cells()", txt="the sweep has no cells (empty levels, thresholds, architectures or seeds), nothing was run.")
    logger.info(f"sweep of {len(cells)} cells on {workers} worker(s)")
    if workers <= 1:
        rows = []
        for i, cell in enumerate(cells, start=1):
            rows.append(run_cell(cell))
            logger.info(f"cell {i}/{len(cells)}: {_describe(rows[-1])}")
        return rows
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers, initializer=_worker_init) as pool:
        rows = list(pool.map(run_cell, cells))
    for i, row in enumerate(rows, start=1):
        logger.info(f"cell {i}/{len(cells)}: {_describe(row)}")
    return rows


def _describe(row: dict) -> str:
    status = "N.C." if row["status"] != TrainStatus.CONVERGED.value else f"{row['epochs_used']} epochs"
    return f"{row['architecture']} level {row['level']} eps {row['threshold']:g} seed {row['seed']}: {status}"


def _median(values: typing.Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return float(np.median(vals)) if vals else None


def fit_table(rows: list[dict], columns: typing.Sequence[str] = ERROR_COLUMNS) -> list[dict]:
    """Log-log fits of every error column, against the final training error (one fit per dataset level,
    across thresholds) and against the collocation count (one fit per threshold, across levels).

    Only converged cells count; seeds are reduced to the median first. Groups with fewer than two usable
    points are skipped.
    """
    grouped: dict[tuple[int, float], list[dict]] = defaultdict(list)
    for row in rows:
        if row["status"] == TrainStatus.CONVERGED.value:
            grouped[(int(row["level"]), float(row["threshold"]))].append(row)
    cells = {
        key: {
            "points": group[0]["points"],
            "r_total": _median(r["r_total"] for r in group),
            **{c: _median(r.get(c) for r in group) for c in columns},
        }
        for key, group in grouped.items()
    }
    fits = []
    for kind, group_index, abscissa_key in (("training_error", 0, "r_total"), ("collocation_count", 1, "points")):
        for group in sorted({key[group_index] for key in cells}):
            members = [cells[key] for key in sorted(cells) if key[group_index] == group]
            for column in columns:
                pts = [(m[abscissa_key], m[column]) for m in members]
                pts = [(a, e) for a, e in pts if a is not None and e is not None and a > 0 and e > 0]
                if len(pts) < 2 or len({a for a, _ in pts}) < 2:
                    continue
                fit = fit_convergence(pts, kind)
                field, norm = column.split("_", 1)
                fits.append(
                    {
                        "group": "level" if kind == "training_error" else "threshold",
                        "group_value": group,
                        "field": field,
                        "norm": norm,
                        **fit.to_dict(),
                    }
                )
    return fits


def _cells(cfg: ExperimentConfig, archs, levels, thresholds, augmented_flags, checkpoint=None) -> list[Cell]:
    data = cfg.to_dict()
    return [
        Cell(data, str(arch), level, threshold, seed, augmented, checkpoint)
        for seed in cfg.study_seeds
        for arch in archs
        for augmented in augmented_flags
        for level in levels
        for threshold in thresholds
    ]


def convergence_study(cfg: ExperimentConfig) -> tuple[list[dict], list[dict]]:
    """Threshold ladder x dataset ladder on the configured domain and flow; error table, fits, optional log-log plots.

    With `transfer.checkpoint` set every cell is warm-started from that checkpoint.
    """
    checkpoint = cfg.transfer.get("checkpoint")
    if checkpoint is not None:
        checkpoint = str(checkpoint)
        # fail before any cell runs
        if load_checkpoint(checkpoint).architecture != cfg.architecture:
            raise CheckpointError(f"convergence_study(): checkpoint {checkpoint} does not hold a {cfg.architecture} network.")
    logger.info(f"convergence study on domain {cfg.domain.to_dict()}, nu={cfg.flow.nu}, g={cfg.flow.g}, warm start: {checkpoint}")
    cells = _cells(cfg, [cfg.architecture], cfg.study_levels, cfg.thresholds, [cfg.augmented], checkpoint)
    rows = run_cells(cells, cfg.workers)
    fits = fit_table(rows)
    prov = outputs.provenance(
        cfg.to_dict(), cfg.seed, domain=cfg.domain.to_dict(), flow=cfg.flow.to_dict(), checkpoint=checkpoint
    )
    out = cfg.out_dir
    outputs.write_table(out / "convergence.csv", CELL_COLUMNS, ([r[c] for c in CELL_COLUMNS] for r in rows), prov)
    outputs.write_json(out / "convergence_fits.json", {"fits": fits}, prov)
    if cfg.plots:
        converged = [r for r in rows if r["status"] == TrainStatus.CONVERGED.value]
        for name in FIELD_NAMES:
            column = f"{name}_w0_inf"
            by_level = {
                f"{r['points']} points": [(x["r_total"], x[column]) for x in converged if x["level"] == r["level"]]
                for r in converged
            }
            plots.loglog(by_level, out / f"convergence_{name}_training_error.svg", "training error", f"{name} W0,inf error", invert_x=True)
            by_threshold = {
                f"eps {r['threshold']:g}": [(x["points"], x[column]) for x in converged if x["threshold"] == r["threshold"]]
                for r in converged
            }
            plots.loglog(by_threshold, out / f"convergence_{name}_points.svg", "collocation points", f"{name} W0,inf error")
    return rows, fits


def architecture_study(cfg: ExperimentConfig) -> list[dict]:
    """Architectures x dataset ladder at the configured threshold; epochs to threshold or N.C."""
    archs = cfg.study_architectures
    cells = _cells(cfg, archs, cfg.study_levels, [cfg.train_config.threshold], [cfg.augmented])
    rows = run_cells(cells, cfg.workers)
    prov = outputs.provenance(cfg.to_dict(), cfg.seed)
    out = cfg.out_dir
    outputs.write_table(out / "architecture.csv", CELL_COLUMNS, ([r[c] for c in CELL_COLUMNS] for r in rows), prov)

    points = {r["level"]: r["points"] for r in rows}
    levels = sorted(points)
    grid = []
    for arch in archs:
        line = []
        for level in levels:
            epochs = [
                r["epochs_used"]
                for r in rows
                if r["architecture"] == str(arch) and r["level"] == level and r["status"] == TrainStatus.CONVERGED.value
            ]
            line.append(round_half_up(float(np.median(epochs))) if epochs else None)
        grid.append(line)
    heat_rows = ([str(arch), *("N.C." if e is None else e for e in line)] for arch, line in zip(archs, grid))
    outputs.write_table(out / "architecture_heatmap.csv", ["architecture", *(str(points[k]) for k in levels)], heat_rows, prov)
    if cfg.plots:
        plots.epochs_heatmap([str(a) for a in archs], [str(points[k]) for k in levels], grid, out / "architecture_heatmap.svg")
    return rows


def ablation_study(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    """Augmented vs bare residual at one threshold over the configured dataset levels."""
    threshold = float(cfg.study["ablation_threshold"])
    levels = [int(k) for k in cfg.study["ablation_levels"]]
    cells = _cells(cfg, [cfg.architecture], levels, [threshold], [True, False])
    rows = run_cells(cells, cfg.workers)
    summary = {}
    for level in levels:
        picked = [r for r in rows if r["level"] == level]
        aug = _median(r["p_w0_inf"] for r in picked if r["augmented"])
        bare = _median(r["p_w0_inf"] for r in picked if not r["augmented"])
        summary[str(level)] = {
            "points": picked[0]["points"] if picked else None,
            "p_w0_inf_augmented": aug,
            "p_w0_inf_bare": bare,
            "ratio": aug / bare if aug is not None and bare else None,
        }
    prov = outputs.provenance(cfg.to_dict(), cfg.seed)
    out = cfg.out_dir
    outputs.write_table(out / "ablation.csv", CELL_COLUMNS, ([r[c] for c in CELL_COLUMNS] for r in rows), prov)
    outputs.write_json(out / "ablation_summary.json", {"threshold": threshold, "levels": summary}, prov)
    if cfg.plots:
        series = {
            label: [(r["points"], r["p_w0_inf"]) for r in rows if r["augmented"] is flag and r["p_w0_inf"] is not None]
            for label, flag in (("augmented", True), ("bare", False))
        }
        plots.loglog(series, out / "ablation_pressure.svg", "collocation points", "p W0,inf error")
    return rows, summary
