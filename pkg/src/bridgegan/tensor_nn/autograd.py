"""A small reverse-mode autodiff tape over numpy arrays.

Every op records its parents and a backward rule written in terms of other
``Tensor`` ops, so gradients can themselves be differentiated
(``grad(..., create_graph=True)``), which the gradient penalty needs.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


@contextlib.contextmanager
def enable_grad():
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = True
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


class ShapeMismatch(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=float)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable | None = None
        self.name = name

    # -- basics -----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        tag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{tag})"

    def __len__(self) -> int:
        return len(self.data)

    # -- operators ----------------------------------------------------------
    def __add__(self, o):
        return add(self, o)

    __radd__ = __add__

    def __sub__(self, o):
        return sub(self, o)

    def __rsub__(self, o):
        return sub(o, self)

    def __mul__(self, o):
        return mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return div(self, o)

    def __rtruediv__(self, o):
        return div(o, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, o):
        return matmul(self, o)

    def __rmatmul__(self, o):
        return matmul(o, self)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def swapaxes(self, a, b):
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return transpose(self, tuple(axes))

    def backward(self, grad_output=None) -> None:
        """Accumulate d(self)/d(leaf) into ``leaf.grad`` for every leaf."""
        leaves = _leaves(self)
        grads = grad([self], leaves, [grad_output] if grad_output is not None else None)
        for leaf, g in zip(leaves, grads):
            leaf.grad = g.data if leaf.grad is None else leaf.grad + g.data


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data, name: str | None = None) -> Tensor:
    return Tensor(np.array(data, dtype=float), requires_grad=True, name=name)


def _record(data: np.ndarray, parents: Sequence[Tensor], backward: Callable) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def custom_op(data: np.ndarray, parents: Sequence[Tensor],
              backward_np: Callable[[np.ndarray], Sequence[np.ndarray | None]]) -> Tensor:
    """Op whose backward is plain numpy; its gradient is not itself differentiable."""
    def backward(g: Tensor):
        return tuple(None if r is None else Tensor(r) for r in backward_np(g.data))
    return _record(np.asarray(data, dtype=float), parents, backward)


# --------------------------------------------------------------------------
# shape helpers


def _unbroadcast_np(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (n, s) in enumerate(zip(g.shape, shape)) if s == 1 and n != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def sum_to(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    if a.shape == tuple(shape):
        return a
    return _record(_unbroadcast_np(a.data, tuple(shape)), [a],
                   lambda g: (broadcast_to(g, a.shape),))


def broadcast_to(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    if a.shape == tuple(shape):
        return a
    return _record(np.broadcast_to(a.data, shape).copy(), [a],
                   lambda g: (sum_to(g, a.shape),))


# --------------------------------------------------------------------------
# elementwise


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _record(a.data + b.data, [a, b],
                   lambda g: (sum_to(g, a.shape), sum_to(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _record(a.data - b.data, [a, b],
                   lambda g: (sum_to(g, a.shape), sum_to(neg(g), b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _record(a.data * b.data, [a, b],
                   lambda g: (sum_to(mul(g, b), a.shape), sum_to(mul(g, a), b.shape)))


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        ga = sum_to(div(g, b), a.shape)
        gb = sum_to(neg(div(mul(g, a), mul(b, b))), b.shape)
        return ga, gb

    return _record(a.data / b.data, [a, b], backward)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _record(-a.data, [a], lambda g: (neg(g),))


def power(a, p: float) -> Tensor:
    a = as_tensor(a)
    if p == 2:
        return mul(a, a)
    return _record(a.data ** p, [a], lambda g: (mul(g, mul(power(a, p - 1), p)),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = _record(np.tanh(a.data), [a], lambda g: (mul(g, sub(1.0, mul(out, out))),))
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    data = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    out = _record(data, [a], lambda g: (mul(g, mul(out, sub(1.0, out))),))
    return out


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = _record(np.exp(a.data), [a], lambda g: (mul(g, out),))
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    return _record(np.log(a.data), [a], lambda g: (div(g, a),))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    out = _record(np.sqrt(a.data), [a], lambda g: (div(g, mul(out, 2.0)),))
    return out


# --------------------------------------------------------------------------
# reductions and shape ops


def _norm_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(axis, a.ndim)
    data = a.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            shape = list(a.shape)
            for ax in axes:
                shape[ax] = 1
            g = reshape(g, tuple(shape))
        return (broadcast_to(g, a.shape),)

    return _record(data, [a], backward)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    return mul(tsum(a, axis, keepdims), 1.0 / count)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    return _record(a.data.reshape(shape), [a], lambda g: (reshape(g, a.shape),))


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(range(a.ndim))[::-1]
    inv = tuple(np.argsort(axes))
    return _record(a.data.transpose(axes), [a], lambda g: (transpose(g, inv),))


def getitem(a, idx) -> Tensor:
    a = as_tensor(a)
    return _record(a.data[idx], [a], lambda g: (scatter(g, idx, a.shape),))


def scatter(g, idx, shape) -> Tensor:
    """Adjoint of ``getitem``: place ``g`` at ``idx`` inside zeros of ``shape``."""
    g = as_tensor(g)
    out = np.zeros(shape)
    np.add.at(out, idx, g.data)
    return _record(out, [g], lambda gg: (getitem(gg, idx),))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeMismatch("matmul needs operands with at least 2 dims")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch(f"matmul shapes {a.shape} @ {b.shape}")

    def backward(g):
        ga = sum_to(matmul(g, b.swapaxes(-1, -2)), a.shape)
        gb = sum_to(matmul(a.swapaxes(-1, -2), g), b.shape)
        return ga, gb

    return _record(a.data @ b.data, [a, b], backward)


def concatenate(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    ax = axis % tensors[0].ndim
    sizes = np.cumsum([0] + [t.shape[ax] for t in tensors])

    def backward(g):
        out = []
        for k in range(len(tensors)):
            idx = [slice(None)] * g.ndim
            idx[ax] = slice(int(sizes[k]), int(sizes[k + 1]))
            out.append(getitem(g, tuple(idx)))
        return tuple(out)

    return _record(np.concatenate([t.data for t in tensors], axis=ax), tensors, backward)


def softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shift = Tensor(x.data.max(axis=axis, keepdims=True))
    e = exp(sub(x, shift))
    return div(e, tsum(e, axis=axis, keepdims=True))


# --------------------------------------------------------------------------
# gradient computation


def _topo(roots: Iterable[Tensor]) -> list[Tensor]:
    order, seen = [], set()
    stack = [(r, False) for r in roots if r.requires_grad]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def _leaves(root: Tensor) -> list[Tensor]:
    return [t for t in _topo([root]) if not t._parents]


def grad(outputs: Sequence[Tensor], inputs: Sequence[Tensor],
         grad_outputs: Sequence | None = None, create_graph: bool = False) -> list[Tensor]:
    """Gradients of ``sum(outputs * grad_outputs)`` w.r.t. ``inputs``.

    Inputs that do not influence the outputs get zero tensors.  With
    ``create_graph`` the returned tensors carry their own tape.
    """
    outputs = [as_tensor(o) for o in outputs]
    if grad_outputs is None:
        grad_outputs = [None] * len(outputs)
    ctx = enable_grad() if create_graph else no_grad()
    with ctx:
        acc: dict[int, Tensor] = {}
        for o, go in zip(outputs, grad_outputs):
            if not o.requires_grad:
                continue
            g = Tensor(np.ones_like(o.data)) if go is None else as_tensor(go)
            acc[id(o)] = add(acc[id(o)], g) if id(o) in acc else g
        for node in reversed(_topo(outputs)):
            g = acc.get(id(node))
            if g is None or node._backward is None:
                continue
            parent_grads = node._backward(g)
            for p, pg in zip(node._parents, parent_grads):
                if pg is None or not p.requires_grad:
                    continue
                acc[id(p)] = add(acc[id(p)], pg) if id(p) in acc else pg
        return [acc.get(id(x), Tensor(np.zeros_like(x.data))) for x in inputs]
