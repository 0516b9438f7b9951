"""Define-by-run reverse-mode autodiff over float64 numpy arrays.

Every differentiable operation returns a new ``Tensor`` that remembers its
parents and a closure mapping the output gradient to parent gradients.
``Tensor.backward`` walks the recorded graph in reverse topological order.
Leaf tensors with ``requires_grad`` accumulate into ``.grad`` across calls;
intermediate gradients live only for the duration of one backward pass.
"""
from __future__ import annotations

import numpy as np

from ..errors import NonFiniteError, NotScalar, ShapeMismatch

_CHECK_FINITE = True


def set_finite_checks(enabled: bool) -> None:
    """Toggle the per-operation NaN/Inf guard (on by default)."""
    global _CHECK_FINITE
    _CHECK_FINITE = bool(enabled)


def _guard(arr, op, phase):
    # a single reduction is cheaper than isfinite(); confirm before raising
    if _CHECK_FINITE and not np.isfinite(np.add.reduce(arr, axis=None)):
        if not np.isfinite(arr).all():
            raise NonFiniteError(op, phase)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=None, *, _op="leaf", _parents=(), _backward=None):
        arr = np.asarray(data, dtype=np.float64)
        if _op == "leaf":
            arr = np.array(arr, dtype=np.float64, copy=True)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.op = _op
        self._parents = _parents
        self._backward = _backward
        self.name = name

    # -- basic properties ----------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        tag = f" '{self.name}'" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    # -- operator sugar --------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("division by a Tensor is not supported")
        return mul(self, 1.0 / other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None):
        return tsum(self, axis)

    def mean(self, axis=None):
        return tmean(self, axis)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    # -- reverse pass ----------------------------------------------------------
    def backward(self, params=None):
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``.grad``.

        ``params``, if given, are leaves that get a zero gradient when the
        loss does not depend on them.
        """
        if self.data.size != 1:
            raise NotScalar(f"backward needs a scalar loss, got shape {self.shape}")
        order = _topological(self)
        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                if node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                _guard(pg, node.op, "backward")
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
        if params is not None:
            for p in params:
                if p.grad is None:
                    p.grad = np.zeros_like(p.data)


def _topological(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, op, parents, backward):
    _guard(data, op, "forward")
    track = any(p.requires_grad for p in parents)
    if not track:
        return Tensor(data, _op=op)
    return Tensor(data, True, _op=op, _parents=tuple(parents), _backward=backward)


def unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# -- elementwise arithmetic ------------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape

    def back(g):
        return unbroadcast(g, sa), unbroadcast(g, sb)

    return _make(a.data + b.data, "add", (a, b), back)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape

    def back(g):
        return unbroadcast(g, sa), unbroadcast(-g, sb)

    return _make(a.data - b.data, "sub", (a, b), back)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data

    need_a, need_b = a.requires_grad, b.requires_grad

    def back(g):
        ga = unbroadcast(g * bd, ad.shape) if need_a else None
        gb = unbroadcast(g * ad, bd.shape) if need_b else None
        return ga, gb

    return _make(ad * bd, "mul", (a, b), back)


def square(a):
    a = as_tensor(a)
    ad = a.data

    def back(g):
        return (2.0 * g * ad,)

    return _make(ad * ad, "square", (a,), back)


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.data)

    def back(g):
        return (g * out,)

    return _make(out, "exp", (a,), back)


def sigmoid(a):
    a = as_tensor(a)
    out = 0.5 * (1.0 + np.tanh(0.5 * a.data))

    def back(g):
        return (g * out * (1.0 - out),)

    return _make(out, "sigmoid", (a,), back)


def tanh(a):
    a = as_tensor(a)
    out = np.tanh(a.data)

    def back(g):
        return (g * (1.0 - out * out),)

    return _make(out, "tanh", (a,), back)


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0

    def back(g):
        return (g * mask,)

    return _make(a.data * mask, "relu", (a,), back)


# -- linear algebra / reductions -------------------------------------------------

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim < 1 or bd.ndim < 2 or ad.shape[-1] != bd.shape[-2]:
        raise ShapeMismatch(f"matmul shapes {ad.shape} and {bd.shape} are incompatible")

    need_a, need_b = a.requires_grad, b.requires_grad

    def back(g):
        ga = gb = None
        if need_a:
            ga = unbroadcast(g @ np.swapaxes(bd, -1, -2), ad.shape)
        if need_b:
            gb = np.swapaxes(ad, -1, -2) @ g if ad.ndim > 1 else np.outer(ad, g)
            gb = unbroadcast(gb, bd.shape)
        return ga, gb

    return _make(ad @ bd, "matmul", (a, b), back)


def tsum(a, axis=None):
    a = as_tensor(a)
    shape = a.shape

    def back(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        g2 = np.expand_dims(g, axis)
        return (np.broadcast_to(g2, shape).copy(),)

    return _make(np.asarray(a.data.sum(axis=axis)), "sum", (a,), back)


def tmean(a, axis=None):
    a = as_tensor(a)
    n = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return mul(tsum(a, axis), 1.0 / n)


def reshape(a, shape):
    a = as_tensor(a)
    old = a.shape

    def back(g):
        return (g.reshape(old),)

    return _make(a.data.reshape(shape), "reshape", (a,), back)


def transpose(a, axes=None):
    a = as_tensor(a)
    inv = None if axes is None else np.argsort(axes)

    def back(g):
        return (np.transpose(g, inv),)

    return _make(np.transpose(a.data, axes), "transpose", (a,), back)


def getitem(a, idx):
    a = as_tensor(a)
    shape = a.shape

    items = idx if isinstance(idx, tuple) else (idx,)
    basic = all(isinstance(i, (slice, int, type(None), type(Ellipsis))) for i in items)

    def back(g):
        full = np.zeros(shape)
        if basic:
            full[idx] = g
        else:
            np.add.at(full, idx, g)
        return (full,)

    return _make(np.array(a.data[idx]), "getitem", (a,), back)


def split(a, sections: int, axis: int = -1):
    """Split into equal chunks along ``axis`` (one graph node per chunk)."""
    a = as_tensor(a)
    ax = axis % a.ndim
    width = a.shape[ax] // sections
    if width * sections != a.shape[ax]:
        raise ShapeMismatch(f"cannot split axis of size {a.shape[ax]} into {sections}")
    out = []
    for k in range(sections):
        sl = [slice(None)] * a.ndim
        sl[ax] = slice(k * width, (k + 1) * width)
        out.append(getitem(a, tuple(sl)))
    return out


def concat(tensors, axis=0):
    ts = [as_tensor(t) for t in tensors]
    ax = axis % ts[0].ndim
    sizes = [t.shape[ax] for t in ts]
    bounds = np.cumsum([0, *sizes])

    def back(g):
        out = []
        for k in range(len(ts)):
            sl = [slice(None)] * g.ndim
            sl[ax] = slice(bounds[k], bounds[k + 1])
            out.append(g[tuple(sl)])
        return tuple(out)

    try:
        data = np.concatenate([t.data for t in ts], axis=ax)
    except ValueError as exc:
        raise ShapeMismatch(str(exc)) from None
    return _make(data, "concat", tuple(ts), back)


# -- convolution ------------------------------------------------------------------

def conv2d(x, kernel):
    """Same-padded 2-D cross-correlation (no kernel flip), channels last.

    ``x`` is (..., H, W, Cin) and ``kernel`` is (kh, kw, Cin, Cout) with odd kh, kw.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    xd, kd = x.data, kernel.data
    if kd.ndim != 4:
        raise ShapeMismatch(f"kernel must be (kh, kw, Cin, Cout), got {kd.shape}")
    kh, kw, cin, cout = kd.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeMismatch("conv2d kernel dimensions must be odd for same padding")
    if xd.ndim < 3 or xd.shape[-1] != cin:
        raise ShapeMismatch(f"input channels {xd.shape[-1:]} do not match kernel Cin={cin}")
    lead = xd.shape[:-3]
    h, w = xd.shape[-3], xd.shape[-2]
    ph, pw = kh // 2, kw // 2
    offsets = [(u, v) for u in range(kh) for v in range(kw)]
    # patches[..., y, x, j, :] = input[..., y + u - ph, x + v - pw, :] for offset j = (u, v), zero outside
    patches = np.zeros((*lead, h, w, kh * kw, cin))
    for j, (u, v) in enumerate(offsets):
        dy, dx = u - ph, v - pw
        ys, yd = slice(max(0, dy), h + min(0, dy)), slice(max(0, -dy), h - max(0, dy))
        xs, xd_ = slice(max(0, dx), w + min(0, dx)), slice(max(0, -dx), w - max(0, dx))
        patches[..., yd, xd_, j, :] = xd[..., ys, xs, :]
    rows = patches.reshape(-1, kh * kw * cin)
    kflat = kd.reshape(kh * kw * cin, cout)
    out = (rows @ kflat).reshape(*lead, h, w, cout)
    need_x = x.requires_grad

    def back(g):
        g2 = g.reshape(-1, cout)
        gk = (rows.T @ g2).reshape(kd.shape)
        if not need_x:
            return None, gk
        gp = (g2 @ kflat.T).reshape(*lead, h, w, kh * kw, cin)
        gx = np.zeros(xd.shape)
        for j, (u, v) in enumerate(offsets):
            dy, dx = u - ph, v - pw
            ys, yd = slice(max(0, dy), h + min(0, dy)), slice(max(0, -dy), h - max(0, dy))
            xs, xd_ = slice(max(0, dx), w + min(0, dx)), slice(max(0, -dx), w - max(0, dx))
            gx[..., ys, xs, :] += gp[..., yd, xd_, j, :]
        return gx, gk

    return _make(out, "conv2d", (x, kernel), back)


# -- losses / regularisation --------------------------------------------------------

def mse_loss(pred, target):
    diff = sub(pred, as_tensor(target))
    return tmean(square(diff))


def dropout(x, rate: float, rng: np.random.Generator | None, training: bool):
    """Inverted dropout; identity when not training or rate == 0."""
    x = as_tensor(x)
    if not training or rate <= 0.0:
        return x
    keep = rng.random(x.shape) >= rate
    return mul(x, keep / (1.0 - rate))


def stack(tensors, axis=0):
    ts = [as_tensor(t) for t in tensors]
    ax = axis % (ts[0].ndim + 1)

    def back(g):
        return tuple(np.take(g, k, axis=ax) for k in range(len(ts)))

    try:
        data = np.stack([t.data for t in ts], axis=ax)
    except ValueError as exc:
        raise ShapeMismatch(str(exc)) from None
    return _make(data, "stack", tuple(ts), back)
