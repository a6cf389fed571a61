import numpy as np
import pytest

from moil.errors import TrainingError
from moil.nn import (
    BatchNorm1d,
    BiLSTM,
    Conv1d,
    Linear,
    ReLU,
    Sequential,
    Sigmoid,
    grad_check,
    max_relative_error,
    numeric_gradient,
)

GRAD_TOL = 1e-4
EPS = 1e-4


def rng_of(seed):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# Conv1d
# ---------------------------------------------------------------------------


def test_conv_identity_kernel_passes_input_through():
    rng = rng_of(0)
    conv = Conv1d(2, 2, 5, rng)
    conv.weight.value[:] = 0.0
    conv.weight.value[2, 0, 0] = 1.0  # center tap
    conv.weight.value[2, 1, 1] = 1.0
    conv.bias.value[:] = 0.0
    x = rng.normal(size=(3, 9, 2))
    np.testing.assert_allclose(conv.forward(x), x, atol=1e-15)


def test_conv_all_ones_kernel_hand_convolution():
    # zero-padded [1,2,3] with an all-ones width-3 kernel -> [3,6,5]
    rng = rng_of(0)
    conv = Conv1d(1, 1, 3, rng)
    conv.weight.value[:] = 1.0
    conv.bias.value[:] = 0.0
    x = np.array([[[1.0], [2.0], [3.0]]])
    np.testing.assert_array_equal(conv.forward(x)[0, :, 0], [3.0, 6.0, 5.0])


def test_conv_rejects_even_kernel():
    with pytest.raises(TrainingError):
        Conv1d(1, 1, 4, rng_of(0))


def test_conv_rejects_channel_mismatch():
    conv = Conv1d(3, 4, 3, rng_of(0))
    with pytest.raises(TrainingError):
        conv.forward(np.zeros((1, 5, 2)))


def test_conv_preserves_time_length():
    conv = Conv1d(3, 8, 5, rng_of(1))
    assert conv.forward(np.zeros((2, 17, 3))).shape == (2, 17, 8)


@pytest.mark.parametrize("seed", range(5))
def test_conv_gradient_check(seed):
    rng = rng_of(seed)
    conv = Conv1d(2, 3, 3, rng)
    x = rng.normal(size=(2, 8, 2))
    assert grad_check(conv, x, eps=EPS, rng=rng) <= GRAD_TOL


# ---------------------------------------------------------------------------
# BatchNorm1d
# ---------------------------------------------------------------------------


def test_batchnorm_train_mode_centers_channels():
    bn = BatchNorm1d(3)
    x = rng_of(0).normal(loc=5.0, scale=2.0, size=(4, 10, 3))
    out = bn.forward(x)
    assert np.abs(out.mean(axis=(0, 1))).max() < 1e-6


def test_batchnorm_scale_shift():
    bn = BatchNorm1d(2)
    bn.gamma.value[:] = 2.0
    bn.beta.value[:] = 3.0
    x = rng_of(1).normal(size=(8, 25, 2))
    out = bn.forward(x)
    np.testing.assert_allclose(out.mean(axis=(0, 1)), 3.0, atol=1e-9)
    np.testing.assert_allclose(out.std(axis=(0, 1)), 2.0, atol=1e-3)


def test_batchnorm_unit_variance_on_large_batch():
    bn = BatchNorm1d(4)
    x = rng_of(2).normal(size=(16, 30, 4)) * 3.0 + 1.0
    out = bn.forward(x)
    np.testing.assert_allclose(out.var(axis=(0, 1)), 1.0, atol=1e-3)


def test_batchnorm_eval_before_train_raises():
    bn = BatchNorm1d(2)
    bn.eval()
    with pytest.raises(TrainingError, match="running statistics"):
        bn.forward(np.zeros((1, 4, 2)))


def test_batchnorm_eval_uses_running_stats():
    bn = BatchNorm1d(1)
    x = rng_of(3).normal(loc=2.0, size=(8, 20, 1))
    bn.forward(x)
    bn.eval()
    probe = np.full((1, 1, 1), 2.0)
    out = bn.forward(probe)
    expected = (2.0 - bn.running_mean) / np.sqrt(bn.running_var + bn.eps)
    np.testing.assert_allclose(out[0, 0], expected)


@pytest.mark.parametrize("seed", range(5))
def test_batchnorm_gradient_check_train_mode(seed):
    rng = rng_of(seed)
    bn = BatchNorm1d(3)
    x = rng.normal(size=(4, 6, 3))
    assert grad_check(bn, x, eps=EPS, rng=rng) <= GRAD_TOL


def test_batchnorm_gradient_check_eval_mode():
    rng = rng_of(0)
    bn = BatchNorm1d(2)
    bn.forward(rng.normal(size=(4, 6, 2)))
    bn.eval()
    x = rng.normal(size=(2, 5, 2))
    assert grad_check(bn, x, eps=EPS, rng=rng) <= GRAD_TOL


# ---------------------------------------------------------------------------
# Linear / activations
# ---------------------------------------------------------------------------


def test_linear_identity():
    lin = Linear(3, 3, rng_of(0))
    lin.weight.value[:] = np.eye(3)
    lin.bias.value[:] = 0.0
    x = rng_of(1).normal(size=(2, 4, 3))
    np.testing.assert_array_equal(lin.forward(x), x)


def test_relu_values():
    out = ReLU().forward(np.array([[-1.0, 0.0, 2.0]]))
    np.testing.assert_array_equal(out, [[0.0, 0.0, 2.0]])


def test_sigmoid_center():
    assert Sigmoid().forward(np.array([0.0]))[0] == 0.5


@pytest.mark.parametrize("seed", range(5))
def test_linear_gradient_check(seed):
    rng = rng_of(seed)
    lin = Linear(4, 3, rng)
    x = rng.normal(size=(2, 5, 4))
    assert grad_check(lin, x, eps=EPS, rng=rng) <= GRAD_TOL


@pytest.mark.parametrize("seed", range(3))
def test_sigmoid_gradient_check(seed):
    rng = rng_of(seed)
    x = rng.normal(size=(2, 4, 3))
    assert grad_check(Sigmoid(), x, eps=EPS, rng=rng) <= GRAD_TOL


def test_relu_gradient_check_away_from_kink():
    rng = rng_of(0)
    x = rng.normal(size=(2, 4, 3))
    x[np.abs(x) < 0.1] += 0.2  # keep clear of the subgradient point
    assert grad_check(ReLU(), x, eps=EPS, rng=rng) <= GRAD_TOL


# ---------------------------------------------------------------------------
# BiLSTM
# ---------------------------------------------------------------------------


def test_bilstm_zero_weights_zero_output():
    lstm = BiLSTM(2, 3, rng_of(0))
    for p in lstm.parameters():
        p.value[:] = 0.0
    out = lstm.forward(rng_of(1).normal(size=(2, 6, 2)))
    np.testing.assert_array_equal(out, np.zeros((2, 6, 6)))


def test_bilstm_output_shape():
    lstm = BiLSTM(4, 5, rng_of(0))
    assert lstm.forward(np.zeros((3, 7, 4))).shape == (3, 7, 10)


def test_bilstm_reversal_swaps_direction_halves():
    # with identical weights in both directions, reversing the input swaps
    # the two output halves, each time-reversed
    rng = rng_of(2)
    lstm = BiLSTM(2, 3, rng)
    for name in ("wx", "wh", "bias"):
        getattr(lstm.bwd, name).value[:] = getattr(lstm.fwd, name).value
    x = rng.normal(size=(2, 5, 2))
    out = lstm.forward(x)
    out_rev = lstm.forward(x[:, ::-1])
    np.testing.assert_allclose(out_rev[:, :, :3], out[:, ::-1, 3:], atol=1e-12)
    np.testing.assert_allclose(out_rev[:, :, 3:], out[:, ::-1, :3], atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_bilstm_gradient_check(seed):
    rng = rng_of(seed)
    lstm = BiLSTM(2, 3, rng)
    x = rng.normal(size=(1, 5, 2))
    assert grad_check(lstm, x, eps=EPS, rng=rng) <= GRAD_TOL


# ---------------------------------------------------------------------------
# Sequential + grad_check harness itself
# ---------------------------------------------------------------------------


def test_sequential_composes_and_backprops():
    rng = rng_of(0)
    net = Sequential(Conv1d(2, 4, 3, rng), ReLU(), Linear(4, 3, rng))
    x = rng.normal(size=(2, 6, 2))
    assert net.forward(x).shape == (2, 6, 3)
    assert grad_check(net, x, eps=EPS, rng=rng) <= GRAD_TOL


def test_grad_check_identity_op_is_exact():
    class Identity(ReLU):
        def forward(self, x):
            self._mask = np.ones_like(x, dtype=bool)
            return x

    rng = rng_of(0)
    assert grad_check(Identity(), rng.normal(size=(2, 3, 2)), rng=rng) < 1e-9


def test_grad_check_detects_corrupted_gradient():
    class BrokenLinear(Linear):
        def backward(self, grad_out):
            grad_in = super().backward(grad_out)
            return grad_in * 1.5  # deliberately wrong scale

    rng = rng_of(0)
    broken = BrokenLinear(3, 2, rng)
    assert grad_check(broken, rng.normal(size=(2, 4, 3)), rng=rng) > 0.1


def test_numeric_gradient_quadratic():
    x = np.array([1.0, -2.0, 3.0])
    num = numeric_gradient(lambda: float((x**2).sum()), x)
    assert max_relative_error(2 * x, num) < 1e-8
