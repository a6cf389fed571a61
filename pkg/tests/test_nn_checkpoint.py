import numpy as np
import pytest

from moil.errors import ArtifactError
from moil.nn import (
    BatchNorm1d,
    Conv1d,
    Linear,
    ReLU,
    Sequential,
    load_checkpoint,
    load_model_state,
    model_state,
    params_hash,
    save_checkpoint,
)


def small_model(seed=0):
    rng = np.random.default_rng(seed)
    return Sequential(Conv1d(2, 4, 3, rng), BatchNorm1d(4), ReLU(), Linear(4, 3, rng))


def test_checkpoint_round_trip(tmp_path):
    model = small_model()
    model.forward(np.random.default_rng(1).normal(size=(4, 6, 2)))  # populate BN
    path = tmp_path / "m.ckpt"
    meta = {"seed": 0, "motif_set_hash": "abc", "topology": "conv-bn-relu-linear"}
    save_checkpoint(path, model_state(model), meta)
    arrays, back_meta = load_checkpoint(path)
    assert back_meta == meta

    other = small_model(seed=9)
    load_model_state(other, arrays)
    for (_, a), (_, b) in zip(model.param_items(), other.param_items()):
        np.testing.assert_array_equal(a.value, b.value)
    x = np.random.default_rng(2).normal(size=(2, 5, 2))
    model.eval()
    other.eval()
    np.testing.assert_array_equal(model.forward(x), other.forward(x))


def test_checkpoint_bytes_deterministic(tmp_path):
    model = small_model()
    model.forward(np.random.default_rng(1).normal(size=(4, 6, 2)))
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(p1, model_state(model), {"seed": 3})
    save_checkpoint(p2, model_state(model), {"seed": 3})
    assert p1.read_bytes() == p2.read_bytes()


def test_load_rejects_shape_mismatch(tmp_path):
    model = small_model()
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, model_state(model), {})
    arrays, _ = load_checkpoint(path)
    rng = np.random.default_rng(0)
    wrong = Sequential(Conv1d(2, 5, 3, rng), BatchNorm1d(5), ReLU(), Linear(5, 3, rng))
    with pytest.raises(ArtifactError):
        load_model_state(wrong, arrays)


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(ArtifactError):
        load_checkpoint(path)


def test_params_hash_tracks_changes():
    model = small_model()
    h0 = params_hash(model)
    assert h0 == params_hash(model)
    model.layers[0].weight.value[0, 0, 0] += 1e-9
    assert params_hash(model) != h0


def test_params_hash_covers_running_stats():
    model = small_model()
    h0 = params_hash(model)
    model.forward(np.random.default_rng(0).normal(size=(2, 6, 2)))
    assert params_hash(model) != h0  # BN running stats changed
