"""
A reverse-mode tape over dense float64 numpy arrays.

Every operation records its parents and a ``_backward`` closure that pushes the
output gradient to them; ``Tensor.backward()`` walks the graph in reverse
topological order. Broadcasting is supported everywhere: gradients are summed
back to each operand's shape.
"""
from __future__ import annotations

import contextvars
from contextlib import contextmanager
from typing import Callable, Iterable, Sequence

import numpy as np

_grad_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar("ctxlab_grad_enabled", default=True)


@contextmanager
def no_grad():
    """Disable graph recording inside the block (per thread / context)."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _normalize_axes(axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _is_basic_index(index) -> bool:
    """Slices, ints and Ellipsis only: such an index never repeats an element."""
    parts = index if isinstance(index, tuple) else (index,)
    return all(isinstance(p, (int, np.integer, slice)) or p is Ellipsis or p is None for p in parts)


class Tensor:
    """A node of the tape: value, accumulated gradient and backward closure."""

    __array_ufunc__ = None
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._prev: tuple[Tensor, ...] = ()
        self._backward: Callable[[], None] | None = None
        self._op = ""

    def __repr__(self):
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{label}, requires_grad={self.requires_grad})"

    # ------------------------------------------------------------------ plumbing

    @staticmethod
    def _result(data, parents: Sequence["Tensor"], op: str, backward: Callable[[np.ndarray], None]) -> "Tensor":
        out = Tensor(data)
        if is_grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._prev = tuple(parents)
            out._op = op
            out._backward = lambda: backward(out.grad)
        return out

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        grad = _unbroadcast(np.asarray(grad, dtype=np.float64), self.data.shape)
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad = self.grad + grad

    def backward(self, grad=None) -> None:
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._prev:
                if id(parent) not in visited:
                    stack.append((parent, False))

        seed = np.ones_like(self.data) if grad is None else np.broadcast_to(np.asarray(grad, dtype=np.float64), self.data.shape)
        self.grad = seed.copy() if self.grad is None else self.grad + seed
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward()

    def zero_grad(self) -> None:
        self.grad = None

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __len__(self):
        return len(self.data)

    # -------------------------------------------------------------- arithmetic

    def __add__(self, other) -> "Tensor":
        other = as_tensor(other)

        def backward(g):
            self._accumulate(g)
            other._accumulate(g)

        return Tensor._result(self.data + other.data, (self, other), "+", backward)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return Tensor._result(-self.data, (self,), "neg", lambda g: self._accumulate(-g))

    def __sub__(self, other) -> "Tensor":
        other = as_tensor(other)

        def backward(g):
            self._accumulate(g)
            other._accumulate(-g)

        return Tensor._result(self.data - other.data, (self, other), "-", backward)

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other) - self

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other)

        def backward(g):
            self._accumulate(g * other.data)
            other._accumulate(g * self.data)

        return Tensor._result(self.data * other.data, (self, other), "*", backward)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = as_tensor(other)

        def backward(g):
            self._accumulate(g / other.data)
            other._accumulate(-g * self.data / (other.data ** 2))

        return Tensor._result(self.data / other.data, (self, other), "/", backward)

    def __rtruediv__(self, other) -> "Tensor":
        return as_tensor(other) / self

    def __pow__(self, exponent: float) -> "Tensor":
        if isinstance(exponent, Tensor):
            raise TypeError("only constant exponents are supported")

        def backward(g):
            self._accumulate(g * exponent * self.data ** (exponent - 1))

        return Tensor._result(self.data ** exponent, (self,), f"**{exponent}", backward)

    def __matmul__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self.data, other.data
        if b.ndim < 2 or a.ndim < 1:
            raise ValueError("matmul expects a (.., n) or (n,) left operand and a (.., n, m) right operand")

        def backward(g):
            if a.ndim == 1:
                self._accumulate(g @ np.swapaxes(b, -1, -2))
                other._accumulate(np.outer(a, g) if b.ndim == 2 else a[:, None] * g[..., None, :])
            else:
                self._accumulate(g @ np.swapaxes(b, -1, -2))
                other._accumulate(np.swapaxes(a, -1, -2) @ g)

        return Tensor._result(a @ b, (self, other), "@", backward)

    def __rmatmul__(self, other) -> "Tensor":
        return as_tensor(other) @ self

    # ------------------------------------------------------------ elementwise

    def exp(self) -> "Tensor":
        value = np.exp(self.data)
        return Tensor._result(value, (self,), "exp", lambda g: self._accumulate(g * value))

    def log(self) -> "Tensor":
        return Tensor._result(np.log(self.data), (self,), "log", lambda g: self._accumulate(g / self.data))

    def sin(self) -> "Tensor":
        return Tensor._result(np.sin(self.data), (self,), "sin", lambda g: self._accumulate(g * np.cos(self.data)))

    def cos(self) -> "Tensor":
        return Tensor._result(np.cos(self.data), (self,), "cos", lambda g: self._accumulate(-g * np.sin(self.data)))

    def silu(self) -> "Tensor":
        s = _sigmoid(self.data)

        def backward(g):
            self._accumulate(g * s * (1.0 + self.data * (1.0 - s)))

        return Tensor._result(self.data * s, (self,), "silu", backward)

    def softplus(self) -> "Tensor":
        """log(1 + e^x), evaluated without overflow."""
        value = np.logaddexp(0.0, self.data)
        return Tensor._result(value, (self,), "softplus", lambda g: self._accumulate(g * _sigmoid(self.data)))

    # -------------------------------------------------------------- reductions

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        axes = _normalize_axes(axis, self.data.ndim)

        def backward(g):
            if not keepdims:
                g = np.expand_dims(g, axes)
            self._accumulate(np.broadcast_to(g, self.data.shape))

        return Tensor._result(self.data.sum(axis=axes, keepdims=keepdims), (self,), "sum", backward)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        axes = _normalize_axes(axis, self.data.ndim)
        count = int(np.prod([self.data.shape[a] for a in axes])) if axes else 1
        return self.sum(axis=axes, keepdims=keepdims) * (1.0 / count)

    def log_softmax(self, axis: int = -1) -> "Tensor":
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
        value = shifted - lse
        probs = np.exp(value)

        def backward(g):
            self._accumulate(g - probs * g.sum(axis=axis, keepdims=True))

        return Tensor._result(value, (self,), "log_softmax", backward)

    def softmax(self, axis: int = -1) -> "Tensor":
        shifted = np.exp(self.data - self.data.max(axis=axis, keepdims=True))
        probs = shifted / shifted.sum(axis=axis, keepdims=True)

        def backward(g):
            self._accumulate(probs * (g - (g * probs).sum(axis=axis, keepdims=True)))

        return Tensor._result(probs, (self,), "softmax", backward)

    def logsumexp(self, axis: int = -1) -> "Tensor":
        peak = self.data.max(axis=axis, keepdims=True)
        lse = np.log(np.exp(self.data - peak).sum(axis=axis, keepdims=True)) + peak
        probs = np.exp(self.data - lse)

        def backward(g):
            self._accumulate(np.expand_dims(g, axis) * probs)

        return Tensor._result(np.squeeze(lse, axis=axis), (self,), "logsumexp", backward)

    # ------------------------------------------------------------------ shape

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.data.shape
        return Tensor._result(self.data.reshape(shape), (self,), "reshape",
                              lambda g: self._accumulate(g.reshape(original)))

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.data.ndim)))
        inverse = tuple(np.argsort(axes))
        return Tensor._result(np.transpose(self.data, axes), (self,), "transpose",
                              lambda g: self._accumulate(np.transpose(g, inverse)))

    @property
    def T(self) -> "Tensor":
        axes = list(range(self.data.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
        return self.transpose(tuple(axes))

    def __getitem__(self, index) -> "Tensor":
        if isinstance(index, Tensor):
            raise TypeError("index with numpy arrays, not tensors")

        basic = _is_basic_index(index)

        def backward(g):
            full = np.zeros_like(self.data)
            if basic:
                full[index] = g
            else:
                np.add.at(full, index, g)
            self._accumulate(full)

        return Tensor._result(self.data[index], (self,), "getitem", backward)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data, name: str | None = None) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True, name=name)


def stack(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    value = np.stack([t.data for t in tensors], axis=axis)

    def backward(g):
        for i, t in enumerate(tensors):
            t._accumulate(np.take(g, i, axis=axis))

    return Tensor._result(value, tensors, "stack", backward)


def concatenate(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    value = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([0] + [t.data.shape[axis] for t in tensors])

    def backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            t._accumulate(np.take(g, np.arange(lo, hi), axis=axis))

    return Tensor._result(value, tensors, "concat", backward)
