from .layers import ConvLSTMCell, Dense, LSTMCell, Module, convlstm_step, lstm_step
from .optim import Adam, AdamState, adam_step
from .tensor import Tensor, conv2d, mse_loss, set_finite_checks

__all__ = [
    "Adam",
    "AdamState",
    "ConvLSTMCell",
    "Dense",
    "LSTMCell",
    "Module",
    "Tensor",
    "adam_step",
    "conv2d",
    "convlstm_step",
    "lstm_step",
    "mse_loss",
    "set_finite_checks",
]
