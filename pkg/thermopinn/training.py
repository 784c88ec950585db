"""Minimizes the total residual, applies the stopping rules and supports warm starts."""

import typing

import numpy as np
import torch

from .autodiff import LossSpec, ResidualProblem
from .exceptions import CheckpointError, NumericalOverflow
from .listener import TrainingListener, dispatch
from .optim import AdamHyperparameters, AdamState, LbfgsOptions, adam_step, lbfgs_minimize
from .physics import BELTRAMI, ExactSolution
from .sampling import split_validation
from .shared_types import LineSearchStatus, OptimizerKind, TrainStatus, make_logger
from .types import (
    CollocationSet,
    EpochRecord,
    FlowParameters,
    MLPArchitecture,
    ParameterVector,
    ResidualBreakdown,
    TrainConfig,
    TrainingHistory,
)

if typing.TYPE_CHECKING:
    from .checkpoint import Checkpoint

logger = make_logger("train")


class Trainer:
    """Trains one network on one collocation set. Listeners can be attached to observe epochs.

    Example:
    ```python

    trainer = Trainer(MLPArchitecture.parse("2-32-32-4"), FlowParameters(), TrainConfig(threshold=1e-2))

    @trainer.listener("epoch")
    def show(record):
        print(record.epoch, record.r_total)

    params, history = trainer.train(init_parameters(trainer.arch, 0), collocation)

    ```
    """

    def __init__(
        self,
        arch: MLPArchitecture,
        flow: FlowParameters,
        config: TrainConfig,
        solution: ExactSolution = BELTRAMI,
    ):
        self.arch = arch
        self.flow = flow
        self.config = config
        self.solution = solution
        self.listeners: list[TrainingListener] = []
        self.optimizer_state: dict | None = None
        """Adam moments after the last run, for checkpoints."""

    def listener(self, event: str):
        """Decorator registering `func` for `event` ("epoch" or "finished")."""

        def register(func: typing.Callable):
            self.listeners.append(TrainingListener(func, event))
            return func

        return register

    def _problems(self, collocation: CollocationSet):
        cfg = self.config
        train_set, val_set = split_validation(collocation, cfg.validation_fraction, cfg.seed)
        spec = LossSpec(cfg.augmented, cfg.pressure_boundary)
        problem = ResidualProblem(self.arch, train_set, self.flow, spec, self.solution)
        val_problem = (
            ResidualProblem(self.arch, val_set, self.flow, spec, self.solution, allow_empty=True)
            if val_set.total
            else None
        )
        return problem, val_problem

    def _record(self, history, epoch, breakdown, x, val_problem) -> EpochRecord:
        validation = None
        if val_problem is not None:
            try:
                validation = val_problem.breakdown(x).r_total
            except NumericalOverflow:
                validation = float("nan")
        record = EpochRecord(epoch, breakdown, validation)
        history.records.append(record)
        dispatch(self.listeners, "epoch", record)
        if self.config.log_every and epoch % self.config.log_every == 0:
            logger.info(
                f"epoch {epoch}: r_total={breakdown.r_total:.3e} (domain {breakdown.r_domain:.3e}, boundary {breakdown.r_boundary:.3e})"
            )
        return record

    def _diverged(self, breakdown: ResidualBreakdown | None) -> bool:
        return (
            breakdown is None
            or not breakdown.is_finite()
            or breakdown.r_total > self.config.divergence_limit
        )

    def _finish(self, history: TrainingHistory, status: TrainStatus, epochs: int):
        history.status = status
        history.epochs_used = epochs
        if status is TrainStatus.DIVERGED:
            logger.warning(f"training diverged at epoch {epochs}.")
        elif status is TrainStatus.MAX_EPOCHS_REACHED:
            logger.warning(
                f"N.C.: threshold {self.config.threshold:g} not reached in {epochs} epochs (r_total={history.final_total:.3e})."
            )
        else:
            logger.info(f"converged in {epochs} epochs (r_total={history.final_total:.3e}).")
        dispatch(self.listeners, "finished", history)

    def train(
        self, params: ParameterVector, collocation: CollocationSet, epochs: int | None = None
    ) -> tuple[ParameterVector, TrainingHistory]:
        """Runs the configured optimizer. `epochs` overrides max_epochs, 0 only evaluates."""
        params.check(self.arch)
        deterministic = torch.are_deterministic_algorithms_enabled()
        torch.use_deterministic_algorithms(True)
        try:
            max_epochs = self.config.max_epochs if epochs is None else epochs
            problem, val_problem = self._problems(collocation)
            history = TrainingHistory()
            if max_epochs == 0:
                return self._evaluate_only(params, problem, val_problem, history)
            if self.config.optimizer is OptimizerKind.ADAM:
                x = self._adam(params.values.copy(), problem, val_problem, history, max_epochs)
            else:
                x = self._lbfgs(params.values.copy(), problem, val_problem, history, max_epochs)
            return ParameterVector(x), history
        finally:
            torch.use_deterministic_algorithms(deterministic)

    def _evaluate_only(self, params, problem, val_problem, history):
        try:
            breakdown = problem.breakdown(params)
        except NumericalOverflow:
            breakdown = None
        if self._diverged(breakdown):
            self._finish(history, TrainStatus.DIVERGED, 0)
            return params, history
        self._record(history, 0, breakdown, params.values, val_problem)
        converged = breakdown.r_total <= self.config.threshold
        self._finish(history, TrainStatus.CONVERGED if converged else TrainStatus.MAX_EPOCHS_REACHED, 0)
        return params, history

    def _adam(self, x, problem, val_problem, history, max_epochs) -> np.ndarray:
        cfg = self.config
        hyper = AdamHyperparameters(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        state = AdamState.fresh(x.shape[0])
        last_good = x
        for epoch in range(1, max_epochs + 1):
            try:
                _, grad, breakdown = problem.value_and_grad(x)
            except NumericalOverflow:
                breakdown = None
            if self._diverged(breakdown):
                if breakdown is not None and breakdown.is_finite():
                    self._record(history, epoch, breakdown, x, val_problem)
                self.optimizer_state = _adam_state(state, epoch - 1)
                self._finish(history, TrainStatus.DIVERGED, epoch)
                return last_good
            last_good = x
            self._record(history, epoch, breakdown, x, val_problem)
            if breakdown.r_total <= cfg.threshold:
                self.optimizer_state = _adam_state(state, epoch - 1)
                self._finish(history, TrainStatus.CONVERGED, epoch)
                return x
            if epoch == max_epochs:
                break
            x, state = adam_step(x, grad, state, epoch, hyper)
        self.optimizer_state = _adam_state(state, max_epochs - 1)
        self._finish(history, TrainStatus.MAX_EPOCHS_REACHED, max_epochs)
        return x

    def _lbfgs(self, x0, problem, val_problem, history, max_epochs) -> np.ndarray:
        cfg = self.config
        seen: dict[bytes, ResidualBreakdown] = {}

        def objective(x):
            try:
                loss, grad, breakdown = problem.value_and_grad(x)
            except NumericalOverflow:
                return np.inf, np.zeros_like(x)
            seen[x.tobytes()] = breakdown
            return loss, grad

        objective(x0)
        first = seen.get(x0.tobytes())
        if self._diverged(first):
            self._finish(history, TrainStatus.DIVERGED, 1)
            return x0
        self._record(history, 1, first, x0, val_problem)
        if first.r_total <= cfg.threshold:
            self._finish(history, TrainStatus.CONVERGED, 1)
            return x0
        if max_epochs == 1:
            self._finish(history, TrainStatus.MAX_EPOCHS_REACHED, 1)
            return x0

        outcome = {"status": None, "x": x0}

        def after_step(it, x, f):
            breakdown = seen.get(x.tobytes())
            seen.clear()
            if breakdown is None:
                try:
                    breakdown = problem.breakdown(x)
                except NumericalOverflow:
                    pass
            epoch = it + 1
            if self._diverged(breakdown):
                outcome["status"] = TrainStatus.DIVERGED
                outcome["epochs"] = epoch
                return True
            outcome["x"] = x
            self._record(history, epoch, breakdown, x, val_problem)
            if breakdown.r_total <= cfg.threshold:
                outcome["status"] = TrainStatus.CONVERGED
                return True
            return False

        options = LbfgsOptions(
            history=cfg.lbfgs_history,
            max_iterations=max_epochs - 1,
            gradient_tolerance=cfg.gradient_tolerance,
            c1=cfg.wolfe_c1,
            c2=cfg.wolfe_c2,
        )
        result = lbfgs_minimize(objective, x0, options, callback=after_step)
        status = outcome["status"]
        if status is None:
            if result.status is LineSearchStatus.LINE_SEARCH_FAILED:
                logger.warning("L-BFGS stalled in the line search before reaching the threshold.")
            status = TrainStatus.MAX_EPOCHS_REACHED
        self._finish(history, status, outcome.get("epochs", len(history.records)))
        return outcome["x"]


def _adam_state(state: AdamState, steps: int) -> dict:
    return {"kind": "adam", "t": steps, "m": state.m.copy(), "v": state.v.copy()}


def train(
    arch: MLPArchitecture,
    params: ParameterVector,
    collocation: CollocationSet,
    flow: FlowParameters,
    config: TrainConfig,
    solution: ExactSolution = BELTRAMI,
    listeners: list[TrainingListener] | None = None,
) -> tuple[ParameterVector, TrainingHistory]:
    """Trains from `params` until r_total <= threshold or the epoch cap."""
    trainer = Trainer(arch, flow, config, solution)
    trainer.listeners.extend(listeners or [])
    return trainer.train(params, collocation)


def transfer_learn(
    checkpoint: "Checkpoint",
    collocation: CollocationSet,
    flow: FlowParameters,
    config: TrainConfig | None = None,
    arch: MLPArchitecture | None = None,
    epochs: int | None = None,
    solution: ExactSolution = BELTRAMI,
    listeners: list[TrainingListener] | None = None,
) -> tuple[ParameterVector, TrainingHistory]:
    """Warm start: trains from checkpointed parameters on a new collocation set / flow.

    Uses L-BFGS unless `config` says otherwise. `arch` is the target architecture and has to
    match the checkpoint's.
    """
    target = arch or checkpoint.architecture
    if target != checkpoint.architecture:
        raise CheckpointError(
            f"transfer_learn(): checkpoint architecture {checkpoint.architecture} does not match target {target}."
        )
    config = config or TrainConfig(optimizer="lbfgs", seed=checkpoint.seed)
    trainer = Trainer(target, flow, config, solution)
    trainer.listeners.extend(listeners or [])
    return trainer.train(checkpoint.parameters, collocation, epochs=epochs)
