"""Parameterised building blocks: dense layers, LSTM and ConvLSTM cells.

Gate parameters are stored one tensor per gate and per source (W_xi, W_hi,
...). For speed a cell concatenates them into a single fused kernel once per
unrolled sequence, so every step costs one matmul/convolution.
"""
from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from .tensor import Tensor, add, concat, conv2d, matmul, mul, sigmoid, split, tanh

GATES = ("i", "f", "c", "o")


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Module:
    """Anything with named parameter tensors and child modules."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._children: dict[str, Module] = {}

    def add_param(self, name, value) -> Tensor:
        t = Tensor(value, requires_grad=True, name=name)
        self._params[name] = t
        return t

    def add_child(self, name, module):
        self._children[name] = module
        return module

    def named_parameters(self, prefix=""):
        out = {}
        for name, t in self._params.items():
            out[prefix + name] = t
        for cname, child in self._children.items():
            out.update(child.named_parameters(f"{prefix}{cname}."))
        return out

    def parameters(self):
        return list(self.named_parameters().values())

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.named_parameters().items()}

    def load_state_dict(self, state):
        params = self.named_parameters()
        if set(params) != set(state):
            missing = set(params) ^ set(state)
            raise ShapeMismatch(f"state dict keys disagree with model: {sorted(missing)}")
        for k, t in params.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != t.shape:
                raise ShapeMismatch(f"parameter {k}: expected {t.shape}, got {arr.shape}")
            t.data = arr.copy()


class Dense(Module):
    def __init__(self, in_features, out_features, rng, zero=False):
        super().__init__()
        w = np.zeros((in_features, out_features)) if zero else glorot_uniform(
            rng, (in_features, out_features), in_features, out_features
        )
        self.W = self.add_param("W", w)
        self.b = self.add_param("b", np.zeros(out_features))

    def __call__(self, x):
        return add(matmul(x, self.W), self.b)


class LSTMCell(Module):
    """Dense LSTM cell; ``peephole=True`` adds the elementwise cell-state terms."""

    def __init__(self, input_size, hidden_size, rng, peephole=False, forget_bias=1.0):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.peephole = peephole
        for g in GATES:
            self.add_param(f"W_x{g}", glorot_uniform(rng, (input_size, hidden_size), input_size, hidden_size))
            self.add_param(f"W_h{g}", glorot_uniform(rng, (hidden_size, hidden_size), hidden_size, hidden_size))
        if peephole:
            for g in ("i", "f", "o"):
                self.add_param(f"W_c{g}", np.zeros(hidden_size))
        for g in GATES:
            self.add_param(f"b_{g}", np.full(hidden_size, forget_bias if g == "f" else 0.0))

    def fused(self):
        p = self._params
        kernel = concat(
            [concat([p[f"W_x{g}"] for g in GATES], axis=1), concat([p[f"W_h{g}"] for g in GATES], axis=1)],
            axis=0,
        )
        bias = concat([p[f"b_{g}"] for g in GATES], axis=0)
        return kernel, bias

    def zero_state(self, batch):
        z = np.zeros((batch, self.hidden_size))
        return Tensor(z), Tensor(z)

    def step(self, x, h, c, fused=None):
        if x.shape[-1] != self.input_size or h.shape[-1] != self.hidden_size:
            raise ShapeMismatch(
                f"LSTM step expects input {self.input_size} / hidden {self.hidden_size}, "
                f"got {x.shape} / {h.shape}"
            )
        kernel, bias = fused or self.fused()
        z = add(matmul(concat([x, h], axis=-1), kernel), bias)
        return _gate_update(z, c, self._params if self.peephole else None)


class ConvLSTMCell(Module):
    """Convolutional LSTM cell with Hadamard peephole connections.

    States are (batch, H, W, out_channels); inputs (batch, H, W, in_channels).
    """

    def __init__(self, in_channels, out_channels, kernel, spatial, rng, forget_bias=1.0, peephole=True):
        super().__init__()
        kh, kw = kernel
        if kh % 2 == 0 or kw % 2 == 0:
            raise ShapeMismatch("ConvLSTM kernel dimensions must be odd")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = (kh, kw)
        self.spatial = tuple(spatial)
        self.peephole = peephole
        fan_out = kh * kw * out_channels
        for g in GATES:
            self.add_param(
                f"W_x{g}",
                glorot_uniform(rng, (kh, kw, in_channels, out_channels), kh * kw * in_channels, fan_out),
            )
            self.add_param(
                f"W_h{g}",
                glorot_uniform(rng, (kh, kw, out_channels, out_channels), kh * kw * out_channels, fan_out),
            )
        if peephole:
            for g in ("i", "f", "o"):
                self.add_param(f"W_c{g}", np.zeros((*self.spatial, out_channels)))
        for g in GATES:
            self.add_param(f"b_{g}", np.full(out_channels, forget_bias if g == "f" else 0.0))

    @property
    def state_shape(self):
        return (*self.spatial, self.out_channels)

    def fused(self):
        p = self._params
        kernel = concat(
            [concat([p[f"W_x{g}"] for g in GATES], axis=3), concat([p[f"W_h{g}"] for g in GATES], axis=3)],
            axis=2,
        )
        bias = concat([p[f"b_{g}"] for g in GATES], axis=0)
        return kernel, bias

    def zero_state(self, batch):
        z = np.zeros((batch, *self.state_shape))
        return Tensor(z), Tensor(z)

    def step(self, x, h, c, fused=None):
        if tuple(x.shape[-3:-1]) != self.spatial or x.shape[-1] != self.in_channels:
            raise ShapeMismatch(
                f"ConvLSTM input must be (..., {self.spatial[0]}, {self.spatial[1]}, {self.in_channels}), got {x.shape}"
            )
        if tuple(h.shape[-3:]) != self.state_shape or tuple(c.shape[-3:]) != self.state_shape:
            raise ShapeMismatch(f"ConvLSTM state must be (..., {self.state_shape}), got {h.shape} / {c.shape}")
        kernel, bias = fused or self.fused()
        z = add(conv2d(concat([x, h], axis=-1), kernel), bias)
        return _gate_update(z, c, self._params if self.peephole else None)


def _gate_update(z, c_prev, peep):
    zi, zf, zc, zo = split(z, 4, axis=-1)
    if peep is not None:
        zi = add(zi, mul(peep["W_ci"], c_prev))
        zf = add(zf, mul(peep["W_cf"], c_prev))
    i = sigmoid(zi)
    f = sigmoid(zf)
    c = add(mul(f, c_prev), mul(i, tanh(zc)))
    if peep is not None:
        zo = add(zo, mul(peep["W_co"], c))
    o = sigmoid(zo)
    return mul(o, tanh(c)), c


def convlstm_step(cell: ConvLSTMCell, x, h_prev, c_prev):
    return cell.step(x, h_prev, c_prev)


def lstm_step(cell: LSTMCell, x, h_prev, c_prev):
    return cell.step(x, h_prev, c_prev)
