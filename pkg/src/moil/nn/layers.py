"""Layers with forward passes and exact analytic backward passes.

Conventions:
- activations are [B, L, C] float64 (batch, time, channels); Linear also
  accepts any [..., C];
- every layer caches what its backward pass needs during forward;
- backward receives the gradient w.r.t. the layer output and returns the
  gradient w.r.t. the layer input, accumulating parameter gradients in place.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import TrainingError


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Parameter:
    """A trainable tensor with an accumulated gradient of the same shape."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)


class Layer:
    def __init__(self) -> None:
        self.training = True

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def param_items(self) -> list[tuple[str, Parameter]]:
        return []

    def buffer_items(self) -> list[tuple[str, np.ndarray]]:
        return []

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        raise KeyError(f"{type(self).__name__} has no buffer {name!r}")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.param_items()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad.fill(0.0)

    def train(self) -> None:
        self.training = True

    def eval(self) -> None:
        self.training = False

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)


class Sequential(Layer):
    def __init__(self, *layers: Layer):
        super().__init__()
        self.layers = list(layers)

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def param_items(self) -> list[tuple[str, Parameter]]:
        items = []
        for i, layer in enumerate(self.layers):
            items.extend((f"{i}.{name}", p) for name, p in layer.param_items())
        return items

    def buffer_items(self) -> list[tuple[str, np.ndarray]]:
        items = []
        for i, layer in enumerate(self.layers):
            items.extend((f"{i}.{name}", b) for name, b in layer.buffer_items())
        return items

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        idx, _, rest = name.partition(".")
        self.layers[int(idx)].set_buffer(rest, value)

    def train(self) -> None:
        self.training = True
        for layer in self.layers:
            layer.train()

    def eval(self) -> None:
        self.training = False
        for layer in self.layers:
            layer.eval()


def _correlate_same(x: np.ndarray, weight: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Same-padded cross-correlation along time.

    x:      [B, L, C_in]
    weight: [k, C_in, C_out], k odd
    Returns (output [B, L, C_out], im2col matrix [B*L, k*C_in]).
    """
    B, L, _ = x.shape
    k = weight.shape[0]
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
    # [B, L, C_in, k] -> [B, L, k, C_in]
    cols = sliding_window_view(xp, k, axis=1).transpose(0, 1, 3, 2)
    cols = cols.reshape(B * L, k * x.shape[2])
    out = cols @ weight.reshape(-1, weight.shape[2])
    return out.reshape(B, L, weight.shape[2]), cols


class Conv1d(Layer):
    """1D convolution over time, stride 1, zero same-padding, odd kernel."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: np.random.Generator):
        super().__init__()
        if kernel_size % 2 != 1:
            raise TrainingError("conv kernel size must be odd (same padding)")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        limit = 1.0 / np.sqrt(in_channels * kernel_size)
        self.weight = Parameter(
            rng.uniform(-limit, limit, (kernel_size, in_channels, out_channels))
        )
        self.bias = Parameter(np.zeros(out_channels))
        self._cols: np.ndarray | None = None
        self._in_shape: tuple | None = None

    def param_items(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[2] != self.in_channels:
            raise TrainingError(
                f"conv expected {self.in_channels} input channels, got {x.shape[2]}"
            )
        out, cols = _correlate_same(x, self.weight.value)
        self._cols = cols
        self._in_shape = x.shape
        return out + self.bias.value

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        B, L, _ = self._in_shape
        gf = grad_out.reshape(B * L, self.out_channels)
        self.weight.grad += (self._cols.T @ gf).reshape(self.weight.value.shape)
        self.bias.grad += gf.sum(axis=0)
        # gradient w.r.t. input: correlate grad_out with the time-flipped,
        # channel-swapped kernel
        w_flip = self.weight.value[::-1].transpose(0, 2, 1)
        grad_in, _ = _correlate_same(grad_out, w_flip)
        return grad_in


class BatchNorm1d(Layer):
    """Per-channel batch normalization with statistics over (batch x time)."""

    def __init__(self, num_channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.num_channels = num_channels
        self.momentum = momentum
        self.eps = eps
        self.gamma = Parameter(np.ones(num_channels))
        self.beta = Parameter(np.zeros(num_channels))
        self.running_mean = np.zeros(num_channels)
        self.running_var = np.ones(num_channels)
        self.num_batches = np.zeros(1, dtype=np.int64)
        self._cache = None

    def param_items(self):
        return [("gamma", self.gamma), ("beta", self.beta)]

    def buffer_items(self):
        return [
            ("running_mean", self.running_mean),
            ("running_var", self.running_var),
            ("num_batches", self.num_batches),
        ]

    def set_buffer(self, name, value):
        if name == "running_mean":
            self.running_mean = np.asarray(value, dtype=np.float64)
        elif name == "running_var":
            self.running_var = np.asarray(value, dtype=np.float64)
        elif name == "num_batches":
            self.num_batches = np.asarray(value, dtype=np.int64)
        else:
            raise KeyError(f"BatchNorm1d has no buffer {name!r}")

    def forward(self, x: np.ndarray) -> np.ndarray:
        if self.training:
            mean = x.mean(axis=(0, 1))
            var = x.var(axis=(0, 1))
            if self.num_batches[0] == 0:
                self.running_mean = mean.copy()
                self.running_var = var.copy()
            else:
                m = self.momentum
                self.running_mean = (1 - m) * self.running_mean + m * mean
                self.running_var = (1 - m) * self.running_var + m * var
            self.num_batches[0] += 1
        else:
            if self.num_batches[0] == 0:
                raise TrainingError(
                    "batch norm used in eval mode before any training step; "
                    "no running statistics available"
                )
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = (x - mean) * inv_std
        self._cache = (x_hat, inv_std, x.shape[0] * x.shape[1])
        return self.gamma.value * x_hat + self.beta.value

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        x_hat, inv_std, m = self._cache
        self.gamma.grad += (grad_out * x_hat).sum(axis=(0, 1))
        self.beta.grad += grad_out.sum(axis=(0, 1))
        g_hat = grad_out * self.gamma.value
        if not self.training:
            return g_hat * inv_std
        return (
            inv_std
            / m
            * (
                m * g_hat
                - g_hat.sum(axis=(0, 1))
                - x_hat * (g_hat * x_hat).sum(axis=(0, 1))
            )
        )


class Linear(Layer):
    """Affine map over the last axis."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        limit = 1.0 / np.sqrt(in_features)
        self.weight = Parameter(rng.uniform(-limit, limit, (in_features, out_features)))
        self.bias = Parameter(np.zeros(out_features))
        self._x = None

    def param_items(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.in_features:
            raise TrainingError(
                f"linear expected {self.in_features} features, got {x.shape[-1]}"
            )
        self._x = x
        return x @ self.weight.value + self.bias.value

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        xf = self._x.reshape(-1, self.in_features)
        gf = grad_out.reshape(-1, self.out_features)
        self.weight.grad += xf.T @ gf
        self.bias.grad += gf.sum(axis=0)
        return grad_out @ self.weight.value.T


class ReLU(Layer):
    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0  # subgradient at 0 is 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return np.where(self._mask, grad_out, 0.0)


class Sigmoid(Layer):
    def __init__(self):
        super().__init__()
        self._y = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._y = sigmoid(x)
        return self._y

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return grad_out * self._y * (1.0 - self._y)


class _LSTMDirection:
    """One direction of a bidirectional LSTM; gate order (i, f, g, o)."""

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator):
        H = hidden_size
        limit = 1.0 / np.sqrt(H)
        self.wx = Parameter(rng.uniform(-limit, limit, (input_size, 4 * H)))
        self.wh = Parameter(rng.uniform(-limit, limit, (H, 4 * H)))
        bias = np.zeros(4 * H)
        bias[H : 2 * H] = 1.0  # forget-gate bias
        self.bias = Parameter(bias)
        self.hidden_size = H
        self.input_size = input_size
        self._cache = None

    def forward(self, xs: np.ndarray) -> np.ndarray:
        """xs: [B, L, C] in this direction's processing order -> [B, L, H]."""
        B, L, _ = xs.shape
        H = self.hidden_size
        # hoist the input projections out of the recurrence
        xp = (xs @ self.wx.value + self.bias.value).transpose(1, 0, 2)  # [L, B, 4H]
        gates_i = np.empty((L, B, H))
        gates_f = np.empty((L, B, H))
        gates_g = np.empty((L, B, H))
        gates_o = np.empty((L, B, H))
        c_prev = np.empty((L, B, H))
        h_prev = np.empty((L, B, H))
        tanh_c = np.empty((L, B, H))
        hs = np.empty((L, B, H))
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        wh = self.wh.value
        for t in range(L):
            z = xp[t] + h @ wh
            i = sigmoid(z[:, :H])
            f = sigmoid(z[:, H : 2 * H])
            g = np.tanh(z[:, 2 * H : 3 * H])
            o = sigmoid(z[:, 3 * H :])
            h_prev[t] = h
            c_prev[t] = c
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            gates_i[t], gates_f[t], gates_g[t], gates_o[t] = i, f, g, o
            tanh_c[t] = tc
            hs[t] = h
        self._cache = (xs, gates_i, gates_f, gates_g, gates_o, c_prev, h_prev, tanh_c)
        return hs.transpose(1, 0, 2)

    def backward(self, grad_hs: np.ndarray) -> np.ndarray:
        """grad_hs: [B, L, H] in processing order -> grad w.r.t. xs [B, L, C]."""
        xs, gi, gf_, gg, go, c_prev, h_prev, tanh_c = self._cache
        B, L, _ = xs.shape
        H = self.hidden_size
        g_ext = grad_hs.transpose(1, 0, 2)  # [L, B, H]
        dz_all = np.empty((L, B, 4 * H))
        wh_t = self.wh.value.T
        dh_rec = np.zeros((B, H))
        dc_rec = np.zeros((B, H))
        for t in range(L - 1, -1, -1):
            dh = g_ext[t] + dh_rec
            do = dh * tanh_c[t]
            dc = dc_rec + dh * go[t] * (1.0 - tanh_c[t] ** 2)
            di = dc * gg[t]
            dg = dc * gi[t]
            df = dc * c_prev[t]
            dc_rec = dc * gf_[t]
            dz = dz_all[t]
            dz[:, :H] = di * gi[t] * (1.0 - gi[t])
            dz[:, H : 2 * H] = df * gf_[t] * (1.0 - gf_[t])
            dz[:, 2 * H : 3 * H] = dg * (1.0 - gg[t] ** 2)
            dz[:, 3 * H :] = do * go[t] * (1.0 - go[t])
            dh_rec = dz @ wh_t
        dz_flat = dz_all.reshape(L * B, 4 * H)
        self.wx.grad += xs.transpose(1, 0, 2).reshape(L * B, -1).T @ dz_flat
        self.wh.grad += h_prev.reshape(L * B, H).T @ dz_flat
        self.bias.grad += dz_flat.sum(axis=0)
        dxs = dz_all @ self.wx.value.T  # [L, B, C]
        return dxs.transpose(1, 0, 2)


class BiLSTM(Layer):
    """Bidirectional LSTM; outputs forward and backward halves concatenated."""

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator):
        super().__init__()
        self.hidden_size = hidden_size
        self.fwd = _LSTMDirection(input_size, hidden_size, rng)
        self.bwd = _LSTMDirection(input_size, hidden_size, rng)

    def param_items(self):
        return [
            ("fwd.wx", self.fwd.wx),
            ("fwd.wh", self.fwd.wh),
            ("fwd.bias", self.fwd.bias),
            ("bwd.wx", self.bwd.wx),
            ("bwd.wh", self.bwd.wh),
            ("bwd.bias", self.bwd.bias),
        ]

    def forward(self, x: np.ndarray) -> np.ndarray:
        out_f = self.fwd.forward(x)
        out_b = self.bwd.forward(x[:, ::-1])[:, ::-1]
        return np.concatenate([out_f, out_b], axis=2)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        H = self.hidden_size
        dx_f = self.fwd.backward(np.ascontiguousarray(grad_out[:, :, :H]))
        dx_b = self.bwd.backward(np.ascontiguousarray(grad_out[:, ::-1, H:]))
        return dx_f + dx_b[:, ::-1]
