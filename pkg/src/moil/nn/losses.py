"""Training losses; each returns (scalar loss, gradient w.r.t. predictions)."""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over channels and time, averaged over the batch.

    Equivalent to the plain mean of squared elementwise differences on
    [B, l, N] inputs.
    """
    if pred.shape != target.shape:
        raise TrainingError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = (2.0 / diff.size) * diff
    return loss, grad


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """Encode an integer label array [...,] as one-hot [..., num_classes]."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise TrainingError(
            f"label outside 0..{num_classes - 1}: "
            f"[{labels.min()}, {labels.max()}]"
        )
    out = np.zeros(labels.shape + (num_classes,), dtype=np.float64)
    np.put_along_axis(out, labels[..., np.newaxis], 1.0, axis=-1)
    return out


def cross_entropy(logits: np.ndarray, labels_onehot: np.ndarray) -> tuple[float, np.ndarray]:
    """Softmax cross-entropy summed over time steps, averaged over the batch.

    logits, labels_onehot: [B, l, C].  The softmax is stabilized via
    max-subtraction.
    """
    if logits.shape != labels_onehot.shape:
        raise TrainingError(f"shape mismatch: {logits.shape} vs {labels_onehot.shape}")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    log_p = shifted - log_z
    per_step = -(labels_onehot * log_p).sum(axis=-1)  # [B, l]
    batch = logits.shape[0]
    loss = float(per_step.sum(axis=-1).mean(axis=0))
    grad = (np.exp(log_p) - labels_onehot) / batch
    return loss, grad
