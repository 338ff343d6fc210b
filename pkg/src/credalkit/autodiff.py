"""Minimal reverse-mode automatic differentiation over float64 arrays.

Just enough machinery to train small MLPs with the three distillation
losses: a ``Tensor`` wrapping an ndarray, a handful of primitive ops
each with an exact backward rule, and topological-order backprop from a
scalar loss.  Gradients accumulate by summation, so a value used twice
gets both contributions.
"""

from __future__ import annotations

import numpy as np
from scipy.special import digamma, expit, gammaln

__all__ = [
    "Tensor",
    "matmul",
    "add",
    "sub",
    "mul",
    "scale",
    "neg",
    "relu",
    "tanh",
    "sigmoid",
    "exp",
    "lgamma",
    "log_softmax",
    "cols",
    "total",
    "row_sum",
    "square",
]


class Tensor:
    """A float64 array plus an optional gradient of the same shape."""

    __slots__ = ("values", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, values, requires_grad: bool = False, _parents=(), _backward=None):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.values.shape

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Populate ``grad`` on every reachable tensor requiring it.

        The seed node must be scalar (shape () or size 1).
        """
        if self.values.size != 1:
            raise ValueError(f"backward() needs a scalar loss, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
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
                if parent.requires_grad:
                    stack.append((parent, False))
        self._accumulate(np.ones_like(self.values))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum gradient over axes that were broadcast in the forward op."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _binary(a, b, forward, back_a, back_b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(forward(a.values, b.values), _parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(back_a(g, a.values, b.values), a.values.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(back_b(g, a.values, b.values), b.values.shape))

    out._backward = backward
    return out


def add(a, b) -> Tensor:
    return _binary(a, b, lambda x, y: x + y, lambda g, x, y: g, lambda g, x, y: g)


def sub(a, b) -> Tensor:
    return _binary(a, b, lambda x, y: x - y, lambda g, x, y: g, lambda g, x, y: -g)


def mul(a, b) -> Tensor:
    return _binary(a, b, lambda x, y: x * y, lambda g, x, y: g * y, lambda g, x, y: g * x)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.values @ b.values, _parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a._accumulate(g @ b.values.T)
        if b.requires_grad:
            b._accumulate(a.values.T @ g)

    out._backward = backward
    return out


def _unary(a, forward, back) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(forward(a.values), _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a._accumulate(back(g, a.values, out.values))

    out._backward = backward
    return out


def neg(a) -> Tensor:
    return _unary(a, lambda x: -x, lambda g, x, y: -g)


def scale(a, factor: float) -> Tensor:
    factor = float(factor)
    return _unary(a, lambda x: x * factor, lambda g, x, y: g * factor)


def relu(a) -> Tensor:
    return _unary(a, lambda x: np.maximum(x, 0.0), lambda g, x, y: g * (x > 0.0))


def tanh(a) -> Tensor:
    return _unary(a, np.tanh, lambda g, x, y: g * (1.0 - y * y))


def sigmoid(a) -> Tensor:
    return _unary(a, expit, lambda g, x, y: g * y * (1.0 - y))


def exp(a) -> Tensor:
    return _unary(a, np.exp, lambda g, x, y: g * y)


def lgamma(a) -> Tensor:
    return _unary(a, gammaln, lambda g, x, y: g * digamma(x))


def square(a) -> Tensor:
    return _unary(a, np.square, lambda g, x, y: g * 2.0 * x)


def log_softmax(a) -> Tensor:
    """Row-wise log softmax (last axis), numerically stable."""
    a = _as_tensor(a)
    shifted = a.values - a.values.max(axis=-1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = Tensor(shifted - log_norm, _parents=(a,))

    def backward(g):
        if a.requires_grad:
            soft = np.exp(out.values)
            a._accumulate(g - soft * g.sum(axis=-1, keepdims=True))

    out._backward = backward
    return out


def cols(a, start: int, stop: int) -> Tensor:
    """Column slice [start, stop) of a 2-D tensor."""
    a = _as_tensor(a)
    out = Tensor(a.values[:, start:stop], _parents=(a,))

    def backward(g):
        if a.requires_grad:
            full = np.zeros_like(a.values)
            full[:, start:stop] = g
            a._accumulate(full)

    out._backward = backward
    return out


def row_sum(a) -> Tensor:
    """Sum over the last axis, keeping the row dimension."""
    a = _as_tensor(a)
    out = Tensor(a.values.sum(axis=-1, keepdims=True), _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a._accumulate(np.broadcast_to(g, a.values.shape).copy())

    out._backward = backward
    return out


def total(a) -> Tensor:
    """Sum of all entries (scalar tensor)."""
    a = _as_tensor(a)
    out = Tensor(a.values.sum(), _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a._accumulate(np.full_like(a.values, float(g)))

    out._backward = backward
    return out
