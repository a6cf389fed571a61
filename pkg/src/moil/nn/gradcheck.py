"""Gradient verification via central finite differences.

Used by the test suite to validate every layer's analytic backward pass.
Relative error compares per coordinate against max(|analytic|, |numeric|),
floored (default 1e-3) so near-zero gradients are judged on an absolute
scale instead of blowing up the ratio.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .layers import Layer


def numeric_gradient(
    loss_fn: Callable[[], float], array: np.ndarray, eps: float = 1e-4
) -> np.ndarray:
    """Central-difference gradient of a scalar function w.r.t. ``array``.

    The array is perturbed in place one coordinate at a time and restored.
    """
    grad = np.zeros_like(array)
    it = np.nditer(array, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = array[idx]
        array[idx] = orig + eps
        hi = loss_fn()
        array[idx] = orig - eps
        lo = loss_fn()
        array[idx] = orig
        grad[idx] = (hi - lo) / (2.0 * eps)
        it.iternext()
    return grad


def max_relative_error(
    analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-3
) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def grad_check(
    layer: Layer, x: np.ndarray, eps: float = 1e-4, rng: np.random.Generator | None = None
) -> float:
    """Max relative error between analytic and numeric gradients of a layer.

    A fixed random projection turns the layer output into a scalar loss so
    the check is sensitive to every output coordinate.  Checks the gradient
    w.r.t. the input and w.r.t. every parameter.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    probe = rng.standard_normal(layer.forward(x).shape)

    def loss_fn() -> float:
        return float((layer.forward(x) * probe).sum())

    layer.zero_grad()
    layer.forward(x)
    grad_in = layer.backward(probe)
    worst = max_relative_error(grad_in, numeric_gradient(loss_fn, x, eps))
    for _, p in layer.param_items():
        worst = max(
            worst, max_relative_error(p.grad, numeric_gradient(loss_fn, p.value, eps))
        )
    return worst
