"""Reverse-mode automatic differentiation over numpy arrays.

Everything is float64. The graph is dynamic: each operation returns a new
Tensor holding a closure that knows how to push gradients into its parents.
Hot sequence kernels (LSTM, CRF forward) register themselves as single fused
nodes via ``from_op``.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, DimensionError, DomainError, TrainingError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_backward", "_prev", "name")

    def __init__(self, data, requires_grad=False, _prev=(), name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self._backward = None
        self._prev = tuple(_prev)
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def item(self):
        return float(self.data)


def as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


def from_op(data, parents, backward_fn) -> Tensor:
    """Create a graph node with a custom backward closure.

    ``backward_fn(out_grad)`` must return one gradient array (or None) per
    parent, in order.
    """
    out = Tensor(data, _prev=parents)

    def _backward():
        grads = backward_fn(out.grad)
        for p, g in zip(parents, grads):
            if g is not None:
                _accumulate(p, g)

    out._backward = _backward
    return out


def _accumulate(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum gradient over axes that numpy broadcasting expanded."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise ops


def _check_broadcast(a: Tensor, b: Tensor, opname: str):
    try:
        np.broadcast_shapes(a.data.shape, b.data.shape)
    except ValueError:
        raise DimensionError(
            f"{opname}: incompatible shapes {a.data.shape} and {b.data.shape}"
        ) from None


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")
    return from_op(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")
    return from_op(
        a.data * b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        ),
    )


def neg(a) -> Tensor:
    a = as_tensor(a)
    return from_op(-a.data, (a,), lambda g: (-g,))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = np.empty_like(a.data)
    pos = a.data >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a.data[pos]))
    ex = np.exp(a.data[~pos])
    out[~pos] = ex / (1.0 + ex)
    return from_op(out, (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return from_op(out, (a,), lambda g: (g * (1.0 - out * out),))


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return from_op(a.data * mask, (a,), lambda g: (g * mask,))


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return from_op(out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = as_tensor(a)
    return from_op(np.log(a.data), (a,), lambda g: (g / a.data,))


# ---------------------------------------------------------------------------
# shape / reduction ops


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(
            f"matmul: cannot multiply {a.data.shape} by {b.data.shape}"
        )
    return from_op(
        a.data @ b.data,
        (a, b),
        lambda g: (g @ b.data.T, a.data.T @ g),
    )


def transpose(a) -> Tensor:
    a = as_tensor(a)
    return from_op(a.data.T, (a,), lambda g: (g.T,))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    return from_op(
        a.data.reshape(shape), (a,), lambda g: (g.reshape(a.data.shape),)
    )


def getitem(a, idx) -> Tensor:
    a = as_tensor(a)

    def _backward(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    return from_op(a.data[idx], (a,), _backward)


def concat(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def _backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return from_op(
        np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), _backward
    )


def tsum(a, axis=None) -> Tensor:
    a = as_tensor(a)

    def _backward(g):
        if axis is None:
            return (np.full_like(a.data, g),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy(),)

    return from_op(a.data.sum(axis=axis), (a,), _backward)


def tmax(a, axis) -> Tensor:
    """Max along an axis; gradient flows to the (first) argmax only."""
    a = as_tensor(a)
    idx = np.argmax(a.data, axis=axis)

    def _backward(g):
        out = np.zeros_like(a.data)
        grid = np.indices(idx.shape)
        full = list(grid)
        full.insert(axis if axis >= 0 else a.data.ndim + axis, idx)
        out[tuple(full)] = g
        return (out,)

    return from_op(a.data.max(axis=axis), (a,), _backward)


def log_sum_exp(a, axis=None) -> Tensor:
    """Stable log(sum(exp(x))) along an axis (or over everything)."""
    a = as_tensor(a)
    if a.data.size == 0 or (axis is not None and a.data.shape[axis] == 0):
        raise DomainError("log_sum_exp over an empty axis")
    m = a.data.max(axis=axis, keepdims=True)
    shifted = np.exp(a.data - m)
    total = shifted.sum(axis=axis, keepdims=True)
    out = (m + np.log(total)).squeeze() if axis is None else np.squeeze(
        m + np.log(total), axis=axis
    )
    soft = shifted / total

    def _backward(g):
        if axis is None:
            return (soft * g,)
        return (soft * np.expand_dims(g, axis),)

    return from_op(out, (a,), _backward)


# ---------------------------------------------------------------------------
# backward pass and optimizer


def topo_order(root: Tensor):
    order, visited, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for child in node._prev:
            if id(child) not in visited:
                stack.append((child, False))
    return order


def backward(loss: Tensor, params=()):
    """Populate ``grad`` on every tensor reachable from ``loss``.

    Parameters listed in ``params`` that do not appear in the graph get a
    zero gradient, so optimizers can treat the set uniformly.
    """
    if loss.data.ndim != 0:
        raise ContractError(f"backward expects a scalar loss, got shape {loss.data.shape}")
    order = topo_order(loss)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward()
    for p in params:
        if p.grad is None:
            p.grad = np.zeros_like(p.data)


def zero_grads(params):
    for p in params:
        p.grad = None


def global_grad_norm(params) -> float:
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    return float(np.sqrt(total))


def sgd_step(params, lr: float, clip: float = 5.0):
    """In-place SGD update with global-norm gradient clipping.

    ``params`` is an iterable of Tensors (``name`` used in diagnostics).
    Gradients are consumed (reset to None).
    """
    params = list(params)
    for p in params:
        if p.grad is not None and not np.all(np.isfinite(p.grad)):
            raise TrainingError(f"non-finite gradient in parameter {p.name!r}")
    norm = global_grad_norm(params)
    scale = 1.0 if norm <= clip or norm == 0.0 else clip / norm
    for p in params:
        if p.grad is not None:
            p.data -= lr * scale * p.grad
        p.grad = None
    return params


def glorot_uniform(shape, rng: np.random.Generator) -> np.ndarray:
    """uniform(-r, r) with r = sqrt(6 / (fan_in + fan_out))."""
    if len(shape) == 1:
        fan_in = fan_out = shape[0]
    else:
        fan_out, fan_in = shape[0], shape[1]
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape)


def parameter(shape, rng: np.random.Generator, name=None) -> Tensor:
    return Tensor(glorot_uniform(shape, rng), requires_grad=True, name=name)
