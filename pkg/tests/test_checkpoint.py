"""
Checkpoint format tests.
"""

import numpy as np
import pytest

from network.adam import AdamState, adam_update
from network.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from network.qnetwork import NetworkParams


@pytest.fixture
def trained_state():
    rng = np.random.default_rng(0)
    params = NetworkParams.initialize(rng)
    params['value.b'][0] = 0.25
    adam = AdamState.zeros_like(params)
    grads = {name: rng.normal(size=p.shape).astype(np.float32) for name, p in params.items()}
    adam_update(params, grads, adam, lr=1e-3)
    return params, adam


class TestRoundTrip:
    def test_parameters_and_adam_are_bit_identical(self, tmp_path, trained_state):
        params, adam = trained_state
        path = save_checkpoint(str(tmp_path / "ckpt.bin"), params, adam, {'step': 1234, 'level': 2})
        loaded, loaded_adam, metadata = load_checkpoint(str(path))

        assert list(loaded) == list(params)
        assert loaded.identical_to(params)
        assert loaded_adam.t == adam.t
        for name in params:
            assert np.array_equal(loaded_adam.m[name], adam.m[name])
            assert np.array_equal(loaded_adam.v[name], adam.v[name])
        assert metadata == {'step': 1234, 'level': 2}

    def test_without_adam(self, tmp_path, trained_state):
        params, _ = trained_state
        path = save_checkpoint(str(tmp_path / "sub" / "policy.bin"), params)
        loaded, adam, metadata = load_checkpoint(str(path))
        assert adam is None
        assert metadata['step'] == 0
        assert loaded.identical_to(params)

    def test_loaded_params_drive_the_same_forward(self, tmp_path, trained_state):
        from network.qnetwork import forward

        params, _ = trained_state
        path = save_checkpoint(str(tmp_path / "ckpt.bin"), params)
        loaded, _, _ = load_checkpoint(str(path))
        rng = np.random.default_rng(3)
        maps = rng.random((2, 3, 60, 60)).astype(np.float32)
        vec = rng.uniform(-1, 1, (2, 4)).astype(np.float32)
        assert np.array_equal(forward(params, maps, vec), forward(loaded, maps, vec))


class TestCorruption:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(str(tmp_path / "nope.bin"))

    def test_bad_magic(self, tmp_path, trained_state):
        path = save_checkpoint(str(tmp_path / "ckpt.bin"), trained_state[0])
        data = bytearray(path.read_bytes())
        data[:4] = b'XXXX'
        path.write_bytes(bytes(data))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(str(path))

    @pytest.mark.parametrize("keep", [10, 200, -10])
    def test_truncated(self, tmp_path, trained_state, keep):
        path = save_checkpoint(str(tmp_path / "ckpt.bin"), *trained_state)
        path.write_bytes(path.read_bytes()[:keep])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(str(path))

    def test_trailing_bytes(self, tmp_path, trained_state):
        path = save_checkpoint(str(tmp_path / "ckpt.bin"), trained_state[0])
        path.write_bytes(path.read_bytes() + b'\x00' * 8)
        with pytest.raises(CheckpointError, match="trailing"):
            load_checkpoint(str(path))

    def test_wrong_action_count_names_the_layer(self, tmp_path):
        params = NetworkParams.initialize(np.random.default_rng(0), num_actions=27)
        path = save_checkpoint(str(tmp_path / "ckpt.bin"), params)
        with pytest.raises(CheckpointError, match="advantage.w"):
            load_checkpoint(str(path))

    def test_checkpoint_error_is_value_error(self):
        assert issubclass(CheckpointError, ValueError)
