import numpy as np
import pytest

from thermopinn.autodiff import LossSpec, ResidualProblem
from thermopinn.checkpoint import Checkpoint
from thermopinn.exceptions import CheckpointError
from thermopinn.listener import TrainingListener
from thermopinn.net import init_parameters
from thermopinn.sampling import split_validation
from thermopinn.shared_types import TrainStatus
from thermopinn.training import Trainer, train, transfer_learn
from thermopinn.types import MLPArchitecture, ParameterVector, TrainConfig


@pytest.fixture
def setup(small_arch, ladder, flow):
    return small_arch, init_parameters(small_arch, 0), ladder[1], flow


@pytest.mark.parametrize("optimizer", ["adam", "lbfgs"])
def test_trivial_threshold_converges_at_first_epoch(setup, optimizer):
    arch, params, collocation, flow = setup
    out, history = train(arch, params, collocation, flow, TrainConfig(optimizer=optimizer, threshold=1e10))
    assert history.status is TrainStatus.CONVERGED
    assert history.epochs_used == 1
    assert len(history.records) == 1
    assert out == params


@pytest.mark.parametrize("optimizer", ["adam", "lbfgs"])
def test_zero_threshold_hits_epoch_cap(setup, optimizer):
    arch, params, collocation, flow = setup
    _, history = train(arch, params, collocation, flow, TrainConfig(optimizer=optimizer, threshold=0.0, max_epochs=10))
    assert history.status is TrainStatus.MAX_EPOCHS_REACHED
    assert history.epochs_used == len(history.records)
    if optimizer == "adam":
        assert history.epochs_used == 10
    assert history.epochs_used <= 10


@pytest.mark.parametrize("optimizer", ["adam", "lbfgs"])
def test_training_is_deterministic(setup, optimizer):
    arch, params, collocation, flow = setup
    cfg = TrainConfig(optimizer=optimizer, threshold=0.0, max_epochs=15)
    p1, h1 = train(arch, params, collocation, flow, cfg)
    p2, h2 = train(arch, params, collocation, flow, cfg)
    assert p1 == p2
    assert h1.records == h2.records
    assert h1.status is h2.status


def test_loss_decreases_and_sums_hold(setup):
    arch, params, collocation, flow = setup
    _, history = train(arch, params, collocation, flow, TrainConfig(threshold=0.0, max_epochs=200, learning_rate=1e-2))
    assert history.records[-1].r_total < history.records[0].r_total
    for record in history.records:
        b = record.breakdown
        assert b.r_domain == b.r_u + b.r_v + b.r_div + b.r_theta
        assert b.r_boundary == b.r_u_b + b.r_v_b + b.r_theta_b
        assert b.r_augm == b.r_p + b.r_div_x + b.r_div_y
        assert b.r_total == b.r_domain + b.r_boundary + b.r_augm
        assert record.validation_total is not None and record.validation_total >= 0


def test_bare_training_has_no_augmentation(setup):
    arch, params, collocation, flow = setup
    _, history = train(arch, params, collocation, flow, TrainConfig(threshold=0.0, max_epochs=5, augmented=False))
    assert all(v is None for v in history.series("r_augm"))
    for record in history.records:
        b = record.breakdown
        assert b.r_total == b.r_domain + b.r_boundary


def test_no_validation_split(setup):
    arch, params, collocation, flow = setup
    _, history = train(arch, params, collocation, flow, TrainConfig(threshold=0.0, max_epochs=3, validation_fraction=0.0))
    assert history.series("validation_total") == [None, None, None]


def test_converged_params_meet_threshold(setup):
    arch, params, collocation, flow = setup
    cfg = TrainConfig(threshold=0.0, max_epochs=1)
    _, first = train(arch, params, collocation, flow, cfg)
    threshold = first.final_total * 0.95
    out, history = train(arch, params, collocation, flow, cfg.with_(threshold=threshold, max_epochs=500, learning_rate=1e-2))
    assert history.status is TrainStatus.CONVERGED
    assert history.final_total <= threshold
    train_set, _ = split_validation(collocation, cfg.validation_fraction, cfg.seed)
    again = ResidualProblem(arch, train_set, flow, LossSpec()).breakdown(out)
    assert again.r_total == pytest.approx(history.final_total, rel=1e-12)


def test_divergence_guard(setup):
    arch, params, collocation, flow = setup
    out, history = train(arch, params, collocation, flow, TrainConfig(threshold=0.0, divergence_limit=1e-9))
    assert history.status is TrainStatus.DIVERGED
    assert history.epochs_used == 1
    assert out == params


def test_non_finite_loss_diverges(small_arch, ladder, flow):
    huge = ParameterVector(np.full(small_arch.parameter_count, 1e200))
    _, history = train(small_arch, huge, ladder[0], flow, TrainConfig(threshold=0.0, max_epochs=5))
    assert history.status is TrainStatus.DIVERGED


def test_lbfgs_divergence_counts_the_diverged_epoch(setup, monkeypatch):
    import thermopinn.training as training
    from thermopinn.optim import LbfgsResult
    from thermopinn.shared_types import LineSearchStatus

    def blows_up_on_second_step(fun, x0, options, callback=None):
        f, g = fun(x0)
        callback(1, x0, f)
        bad = np.full_like(x0, np.nan)
        callback(2, bad, np.nan)
        return LbfgsResult(bad, np.nan, g, 2, LineSearchStatus.STOPPED_BY_CALLBACK)

    monkeypatch.setattr(training, "lbfgs_minimize", blows_up_on_second_step)
    arch, params, collocation, flow = setup
    out, history = train(arch, params, collocation, flow, TrainConfig(optimizer="lbfgs", threshold=0.0, max_epochs=10))
    assert history.status is TrainStatus.DIVERGED
    assert [r.epoch for r in history.records] == [1, 2]
    assert history.epochs_used == 3
    assert out == params


@pytest.mark.parametrize("before", [False, True])
def test_training_restores_determinism_setting(setup, before):
    import torch

    arch, params, collocation, flow = setup
    previous = torch.are_deterministic_algorithms_enabled()
    torch.use_deterministic_algorithms(before)
    try:
        train(arch, params, collocation, flow, TrainConfig(threshold=0.0, max_epochs=2))
        assert torch.are_deterministic_algorithms_enabled() is before
    finally:
        torch.use_deterministic_algorithms(previous)


def test_listeners(setup):
    arch, params, collocation, flow = setup
    trainer = Trainer(arch, flow, TrainConfig(threshold=0.0, max_epochs=4))
    epochs, finished = [], []

    @trainer.listener("epoch")
    def on_epoch(record):
        epochs.append(record.epoch)

    trainer.listeners.append(TrainingListener(finished.append, "finished"))
    _, history = trainer.train(params, collocation)
    assert epochs == [1, 2, 3, 4]
    assert finished == [history]
    assert trainer.optimizer_state["t"] == 3
    with pytest.raises(ValueError):
        trainer.listener("batch")(print)


def test_transfer_zero_epochs_keeps_params(setup):
    arch, params, collocation, flow = setup
    ckpt = Checkpoint(arch, params, seed=0)
    out, history = transfer_learn(ckpt, collocation, flow, epochs=0)
    assert out == params
    assert [r.epoch for r in history.records] == [0]
    assert history.epochs_used == 0


def test_transfer_defaults_to_lbfgs(setup, monkeypatch):
    import thermopinn.training as training

    arch, params, collocation, flow = setup
    calls = []
    real = training.lbfgs_minimize
    monkeypatch.setattr(training, "lbfgs_minimize", lambda *a, **k: calls.append(a) or real(*a, **k))
    _, history = transfer_learn(Checkpoint(arch, params), collocation, flow, epochs=3)
    assert len(calls) == 1
    assert history.epochs_used <= 3


def test_transfer_architecture_mismatch(flow, ladder):
    small = MLPArchitecture.parse("2-64-4")
    ckpt = Checkpoint(small, init_parameters(small, 0))
    with pytest.raises(CheckpointError):
        transfer_learn(ckpt, ladder[0], flow, arch=MLPArchitecture.parse("2-128-4"))


def test_config_validation():
    from thermopinn.exceptions import ConfigurationError

    with pytest.raises(ConfigurationError):
        TrainConfig(max_epochs=0)
    with pytest.raises(ConfigurationError):
        TrainConfig(validation_fraction=1.0)
    with pytest.raises(ConfigurationError):
        TrainConfig(threshold=-1.0)
