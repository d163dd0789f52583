"""Dense f64 tensors with reverse-mode automatic differentiation.

Define-by-run: every operation links the produced tensor back to its
inputs together with a local backward rule, so the graph of parent
pointers doubles as the tape. ``Tensor.backward()`` walks the graph in
reverse topological order and accumulates gradients into ``.grad``.

The tape is rebuilt on every forward pass; there is no graph caching.
All storage is row-major numpy float64.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes violate an operation's contract."""


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """N-dimensional f64 value participating in the autodiff graph.

    Leaf tensors (parameters, inputs) are created directly; non-leaf
    tensors come out of the ops below and carry a backward closure.
    """

    __slots__ = ("data", "grad", "name", "_parents", "_backward")

    def __init__(self, data, parents=(), backward=None, name=None):
        self.data = _as_array(data)
        self.grad = None
        self.name = name
        self._parents = tuple(parents)
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"

    # -- graph traversal ---------------------------------------------------

    def _topo_order(self):
        order, visited = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self) -> dict:
        """Accumulate d(self)/d(ancestor) into every ancestor's ``.grad``.

        Requires a scalar root. Returns a map from tensor id to gradient
        array for convenience.
        """
        if self.data.size != 1:
            raise ShapeError(
                f"backward root must be scalar, got shape {self.shape}"
            )
        order = self._topo_order()
        for node in order:
            node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is None:
                continue
            grads = node._backward(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is not None:
                    parent.grad += g
        return {id(node): node.grad for node in order}

    # -- operator sugar ----------------------------------------------------

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __neg__(self):
        return neg(self)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def sum(self):
        return tensor_sum(self)


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(data) -> Tensor:
    return Tensor(data)


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape))


def ones(shape) -> Tensor:
    return Tensor(np.ones(shape))


# -- elementwise ops -------------------------------------------------------


def _check_broadcast(a: Tensor, b: Tensor, op: str):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(
            f"{op}: shapes {a.shape} and {b.shape} are not compatible"
        ) from None


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor(a.data + b.data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast(a, b, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor(a.data - b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product."""
    _check_broadcast(a, b, "mul")

    def backward(g):
        return (
            _unbroadcast(g * b.data, a.shape),
            _unbroadcast(g * a.data, b.shape),
        )

    return Tensor(a.data * b.data, (a, b), backward)


hadamard = mul


def neg(a: Tensor) -> Tensor:
    return Tensor(-a.data, (a,), lambda g: (-g,))


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # stable on both tails: never exponentiates a large positive value
    out = np.where(
        x >= 0,
        1.0 / (1.0 + np.exp(-np.abs(x))),
        np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))),
    )

    def backward(g):
        return (g * out * (1.0 - out),)

    return Tensor(out, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def backward(g):
        return (g * (1.0 - out * out),)

    return Tensor(out, (a,), backward)


# -- linear algebra --------------------------------------------------------


def matvec(w: Tensor, v: Tensor) -> Tensor:
    """Matrix-vector product. dW = g outer v, dv = W^T g."""
    if w.ndim != 2 or v.ndim != 1:
        raise ShapeError(f"matvec: need rank-2 x rank-1, got {w.shape} x {v.shape}")
    if w.shape[1] != v.shape[0]:
        raise ShapeError(f"matvec: inner dims differ, {w.shape} x {v.shape}")

    def backward(g):
        return np.outer(g, v.data), w.data.T @ g

    return Tensor(w.data @ v.data, (w, v), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D matrix product."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul: need rank-2 x rank-2, got {a.shape} x {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dims differ, {a.shape} x {b.shape}")

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return Tensor(a.data @ b.data, (a, b), backward)


def bmm(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product over matching leading batch dimension."""
    if a.ndim != 3 or b.ndim != 3:
        raise ShapeError(f"bmm: need rank-3 x rank-3, got {a.shape} x {b.shape}")
    if a.shape[0] != b.shape[0] or a.shape[2] != b.shape[1]:
        raise ShapeError(f"bmm: shapes incompatible, {a.shape} x {b.shape}")

    def backward(g):
        return (
            g @ b.data.transpose(0, 2, 1),
            a.data.transpose(0, 2, 1) @ g,
        )

    return Tensor(a.data @ b.data, (a, b), backward)


# -- structural ops --------------------------------------------------------


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)

    def backward(g):
        return (g.reshape(a.shape),)

    return Tensor(a.data.reshape(shape), (a,), backward)


def transpose(a: Tensor, axes=None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = np.argsort(axes)

    def backward(g):
        return (g.transpose(inverse),)

    return Tensor(a.data.transpose(axes), (a,), backward)


def concat(tensors, axis=0) -> Tensor:
    tensors = [_lift(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat: empty input list")
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, offsets, axis=axis))

    return Tensor(
        np.concatenate([t.data for t in tensors], axis=axis), tensors, backward
    )


def stack(tensors, axis=0) -> Tensor:
    tensors = [_lift(t) for t in tensors]

    def backward(g):
        moved = np.moveaxis(g, axis, 0)
        return tuple(moved[i] for i in range(len(tensors)))

    return Tensor(np.stack([t.data for t in tensors], axis=axis), tensors, backward)


def tensor_sum(a: Tensor) -> Tensor:
    """Sum of all entries, producing a scalar."""

    def backward(g):
        return (np.full(a.shape, float(g)),)

    return Tensor(a.data.sum(), (a,), backward)
