"""Minimal dense numeric stack: layers, losses, Adam, gradient checking.

Everything runs on float64 numpy arrays shaped [batch, time, channels] and
computes exact analytic gradients, verified against central finite
differences in the test suite.
"""

from .layers import (
    BatchNorm1d,
    BiLSTM,
    Conv1d,
    Layer,
    Linear,
    Parameter,
    ReLU,
    Sequential,
    Sigmoid,
)
from .losses import cross_entropy, mse_loss, one_hot
from .optim import Adam
from .gradcheck import grad_check, max_relative_error, numeric_gradient
from .checkpoint import (
    load_checkpoint,
    load_model_state,
    model_state,
    params_hash,
    save_checkpoint,
)

__all__ = [
    "Adam",
    "BatchNorm1d",
    "BiLSTM",
    "Conv1d",
    "Layer",
    "Linear",
    "Parameter",
    "ReLU",
    "Sequential",
    "Sigmoid",
    "cross_entropy",
    "grad_check",
    "load_checkpoint",
    "load_model_state",
    "max_relative_error",
    "model_state",
    "mse_loss",
    "numeric_gradient",
    "one_hot",
    "params_hash",
    "save_checkpoint",
]
