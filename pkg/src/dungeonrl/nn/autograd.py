"""Minimal reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps an ndarray and remembers how it was produced; calling
``backward()`` on a scalar walks the recorded graph in reverse
topological order and accumulates gradients into every tensor that
``requires_grad``. Only the operations this project's network needs
are provided (dense, 3x3 same-padding convolution, embedding lookup,
LSTM gate arithmetic, log-softmax, and the PPO clip/min pieces).

Training runs in float32; gradient checking builds the same graphs in
float64 — every op preserves the dtype of its inputs.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np


_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording (rollout collection, evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_prev", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._prev = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data)

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={'set' if self.grad is not None else 'none'})"

    # operator sugar; scalars and ndarrays are wrapped as constants
    def __add__(self, other):
        return add(self, _as_tensor(other, self.dtype))

    def __radd__(self, other):
        return add(_as_tensor(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other, self.dtype))

    def __rmul__(self, other):
        return mul(_as_tensor(other, self.dtype), self)

    def __neg__(self):
        return mul(self, _as_tensor(-1.0, self.dtype))

    def __sub__(self, other):
        return add(self, -_as_tensor(other, self.dtype))

    def __rsub__(self, other):
        return add(_as_tensor(other, self.dtype), -self)

    def backward(self):
        """Accumulate d(self)/d(leaf) for every reachable tensor that
        requires grad. self must be a scalar."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar loss")
        order = _toposort(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
            if node is not self and node._backward is not None:
                # interior grads are only needed transiently
                node.grad = None


def _toposort(root):
    order, visited = [], set()
    stack = [(root, iter(root._prev))]
    visited.add(id(root))
    while stack:
        node, children = stack[-1]
        advanced = False
        for child in children:
            if id(child) not in visited:
                visited.add(id(child))
                stack.append((child, iter(child._prev)))
                advanced = True
                break
        if not advanced:
            order.append(node)
            stack.pop()
    return order


def _as_tensor(value, dtype=None):
    if isinstance(value, Tensor):
        return value
    arr = np.asarray(value, dtype=dtype)
    return Tensor(arr)


def _needs_graph(*tensors):
    return _grad_enabled and any(t.requires_grad for t in tensors)


def _make(data, parents, backward_fn):
    out = Tensor(data)
    if _needs_graph(*parents):
        out.requires_grad = True
        out._prev = tuple(parents)
        out._backward = backward_fn
    return out


def _accumulate(tensor, grad):
    if not tensor.requires_grad:
        return
    if tensor.grad is None:
        # copy: the same grad array may be routed to several parents
        tensor.grad = np.array(grad, copy=True)
    else:
        tensor.grad += grad


def _unbroadcast(grad, shape):
    """Sum grad down to `shape` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise / shape ops


def add(a, b):
    def backward(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g, b.data.shape))
    return _make(a.data + b.data, (a, b), backward)


def mul(a, b):
    def backward(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.data.shape))
    return _make(a.data * b.data, (a, b), backward)


def square(a):
    def backward(g):
        _accumulate(a, g * (2.0 * a.data))
    return _make(a.data * a.data, (a,), backward)


def exp(a):
    out_data = np.exp(a.data)

    def backward(g):
        _accumulate(a, g * out_data)
    return _make(out_data, (a,), backward)


def log(a):
    def backward(g):
        _accumulate(a, g / a.data)
    return _make(np.log(a.data), (a,), backward)


def relu(a):
    mask = a.data > 0

    def backward(g):
        _accumulate(a, g * mask)
    return _make(a.data * mask, (a,), backward)


def sigmoid(a):
    x = a.data
    out_data = np.empty_like(x)
    pos = x >= 0
    out_data[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out_data[~pos] = ex / (1.0 + ex)

    def backward(g):
        _accumulate(a, g * out_data * (1.0 - out_data))
    return _make(out_data, (a,), backward)


def tanh(a):
    out_data = np.tanh(a.data)

    def backward(g):
        _accumulate(a, g * (1.0 - out_data * out_data))
    return _make(out_data, (a,), backward)


def minimum(a, b):
    take_a = a.data <= b.data

    def backward(g):
        _accumulate(a, g * take_a)
        _accumulate(b, g * ~take_a)
    return _make(np.where(take_a, a.data, b.data), (a, b), backward)


def clip(a, lo, hi):
    inside = (a.data > lo) & (a.data < hi)

    def backward(g):
        _accumulate(a, g * inside)
    return _make(np.clip(a.data, lo, hi), (a,), backward)


def reshape(a, shape):
    def backward(g):
        _accumulate(a, g.reshape(a.data.shape))
    return _make(a.data.reshape(shape), (a,), backward)


def concat(tensors, axis=-1):
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accumulate(t, piece)
    return _make(np.concatenate([t.data for t in tensors], axis=axis),
                 tuple(tensors), backward)


def sum_all(a):
    def backward(g):
        _accumulate(a, np.broadcast_to(g, a.data.shape).astype(a.data.dtype))
    return _make(a.data.sum(), (a,), backward)


def sum_axis(a, axis):
    def backward(g):
        _accumulate(a, np.broadcast_to(np.expand_dims(g, axis), a.data.shape)
                    .astype(a.data.dtype))
    return _make(a.data.sum(axis=axis), (a,), backward)


def mean_all(a):
    n = a.data.size

    def backward(g):
        _accumulate(a, np.broadcast_to(g / n, a.data.shape).astype(a.data.dtype))
    return _make(a.data.mean(), (a,), backward)


# ---------------------------------------------------------------------------
# linear algebra / network ops


def matmul(a, b):
    def backward(g):
        if a.requires_grad:
            _accumulate(a, g @ b.data.T)
        if b.requires_grad:
            _accumulate(b, a.data.T @ g)
    return _make(a.data @ b.data, (a, b), backward)


def embedding(table, indices):
    """Row lookup: table (V, C) gathered with integer array indices of
    any shape, producing indices.shape + (C,)."""
    idx = np.asarray(indices)
    out_data = table.data[idx]

    def backward(g):
        if table.requires_grad:
            grad = np.zeros_like(table.data)
            np.add.at(grad, idx.ravel(), g.reshape(-1, table.data.shape[1]))
            _accumulate(table, grad)
    return _make(out_data, (table,), backward)


def conv3x3_same(x, kernel):
    """2D convolution, 3x3 kernel, stride 1, zero 'same' padding.

    x (B, H, W, Cin), kernel (3, 3, Cin, Cout) -> (B, H, W, Cout).
    Implemented as one im2col copy plus a single matmul each way.
    """
    b, h, w, cin = x.data.shape
    cout = kernel.data.shape[3]
    padded = np.zeros((b, h + 2, w + 2, cin), dtype=x.data.dtype)
    padded[:, 1:-1, 1:-1, :] = x.data
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(1, 2))
    # windows (B, H, W, Cin, 3, 3); flattening keeps (Cin, ky, kx) order
    patches = windows.reshape(b * h * w, cin * 9)
    kflat = kernel.data.transpose(2, 0, 1, 3).reshape(cin * 9, cout)
    out_data = (patches @ kflat).reshape(b, h, w, cout)

    def backward(g):
        g_flat = g.reshape(b * h * w, cout)
        if kernel.requires_grad:
            dk = (patches.T @ g_flat).reshape(cin, 3, 3, cout)
            _accumulate(kernel, np.ascontiguousarray(dk.transpose(1, 2, 0, 3)))
        if x.requires_grad:
            dpatches = (g_flat @ kflat.T).reshape(b, h, w, cin, 3, 3)
            dpad = np.zeros_like(padded)
            for ky in range(3):
                for kx in range(3):
                    dpad[:, ky:ky + h, kx:kx + w, :] += dpatches[:, :, :, :, ky, kx]
            _accumulate(x, dpad[:, 1:-1, 1:-1, :])
    return _make(out_data, (x, kernel), backward)


def log_softmax(a):
    """Row-wise log softmax over the last axis of a 2D tensor."""
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    out_data = shifted - log_z
    softmax = np.exp(out_data)

    def backward(g):
        _accumulate(a, g - softmax * g.sum(axis=1, keepdims=True))
    return _make(out_data, (a,), backward)


def slice_cols(a, start, stop):
    """Column slice of a 2D tensor: a[:, start:stop]."""
    def backward(g):
        grad = np.zeros_like(a.data)
        grad[:, start:stop] = g
        _accumulate(a, grad)
    return _make(a.data[:, start:stop], (a,), backward)


def gather_rows(a, indices):
    """Pick a[i, indices[i]] for each row -> (B,)."""
    idx = np.asarray(indices)
    rows = np.arange(a.data.shape[0])

    def backward(g):
        grad = np.zeros_like(a.data)
        grad[rows, idx] = g
        _accumulate(a, grad)
    return _make(a.data[rows, idx], (a,), backward)
