import json

import numpy as np
import pytest

from thermopinn.checkpoint import FORMAT_VERSION, Checkpoint, load_checkpoint, save_checkpoint
from thermopinn.exceptions import CheckpointError, CheckpointVersionError
from thermopinn.net import init_parameters
from thermopinn.shared_types import TrainStatus
from thermopinn.types import MLPArchitecture, ParameterVector


@pytest.fixture
def ckpt():
    arch = MLPArchitecture.parse("2-8-8-4")
    params = init_parameters(arch, 7)
    state = {"kind": "adam", "t": 3, "m": np.linspace(-1, 1, len(params)) / 3, "v": np.full(len(params), 0.1)}
    return Checkpoint(arch, params, seed=7, config={"preset": "desk"}, status=TrainStatus.CONVERGED, epochs_used=12, optimizer_state=state)


def test_save_load_save_is_byte_identical(ckpt, tmp_path):
    first = save_checkpoint(ckpt, tmp_path / "a.json")
    loaded = load_checkpoint(first)
    second = save_checkpoint(loaded, tmp_path / "b.json")
    assert first.read_bytes() == second.read_bytes()
    assert np.array_equal(loaded.parameters.values, ckpt.parameters.values)
    assert loaded.architecture == ckpt.architecture
    assert loaded.status is TrainStatus.CONVERGED
    assert loaded.epochs_used == 12
    assert np.array_equal(loaded.optimizer_state["m"], ckpt.optimizer_state["m"])


def test_awkward_floats_survive(tmp_path):
    arch = MLPArchitecture.parse("2-1-4")
    values = np.array([0.1, -0.0, 5e-324, 1.7976931348623157e308, 1 / 3, -2.5, 1e-17, 3.0, 0.2, 2**-40, 9.9])
    ckpt = Checkpoint(arch, ParameterVector(values))
    loaded = load_checkpoint(save_checkpoint(ckpt, tmp_path / "c.json"))
    assert loaded.parameters.values.tobytes() == values.tobytes()


def test_truncated_file(ckpt, tmp_path):
    path = save_checkpoint(ckpt, tmp_path / "c.json")
    path.write_bytes(path.read_bytes()[:-40])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "nope.json")


def test_wrong_version(ckpt):
    data = ckpt.to_dict()
    data["format_version"] = FORMAT_VERSION + 1
    with pytest.raises(CheckpointVersionError) as info:
        Checkpoint.loads(json.dumps(data))
    assert info.value.found == FORMAT_VERSION + 1


def test_missing_key(ckpt):
    data = ckpt.to_dict()
    del data["parameters"]
    with pytest.raises(CheckpointError):
        Checkpoint.from_dict(data)


def test_parameter_count_mismatch(ckpt):
    data = ckpt.to_dict()
    data["parameters"] = data["parameters"][:-1]
    with pytest.raises(CheckpointError):
        Checkpoint.from_dict(data)
    with pytest.raises(CheckpointError):
        Checkpoint(MLPArchitecture.parse("2-16-4"), ckpt.parameters)


def test_malformed_parameters(ckpt):
    data = ckpt.to_dict()
    data["parameters"][0] = "not a float"
    with pytest.raises(CheckpointError):
        Checkpoint.from_dict(data)
