"""Small feed-forward nets with exact reverse-mode gradients and Adam.

Every learned component in the package (reward ensembles, skill
features, successor critics, the trajectory-return estimator) trains
through this module. Each net keeps its parameters in one flat float64
vector so gradient checks, cloning, and optimizer state stay trivial.

``forward`` is plain numpy for hot inference paths. ``apply`` builds the
same computation on a gradient tape (``Box`` nodes) so losses composed
from the supported primitives differentiate exactly, not by finite
differences.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class DimensionMismatch(ValueError):
    """Input width does not match what the net expects."""


class UnsupportedPrimitive(ValueError):
    """Asked for an activation or head outside the differentiable set."""


def stable_sigmoid(x: np.ndarray | float) -> np.ndarray:
    """Numerically stable logistic function, safe for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def stable_log_sigmoid(x: np.ndarray | float) -> np.ndarray:
    """log(sigmoid(x)) without overflow: min(x, 0) - log1p(exp(-|x|))."""
    x = np.asarray(x, dtype=np.float64)
    return np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient over axes that numpy broadcasting introduced."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Box:
    """Array node on a gradient tape.

    Supported primitives: + - * (elementwise, numpy broadcasting),
    matmul, relu, tanh, sigmoid, log-sigmoid, log-softmax, square,
    sum/mean, reshape, 1-D slice, per-row block selection, segment
    sums, and row normalization. Anything else raises
    UnsupportedPrimitive by construction (there is no generic op hook).
    """

    __slots__ = ("value", "grad", "_parents", "_backward")

    def __init__(self, value, parents=(), backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Box, ...] = parents
        self._backward = backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into .grad over the whole tape."""
        if self.value.size != 1:
            raise ValueError("backward() requires a scalar output")
        order: list[Box] = []
        seen: set[int] = set()
        stack: list[tuple[Box, bool]] = [(self, False)]
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
                stack.append((parent, False))
        for node in order:
            node.grad = np.zeros_like(node.value)
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other) -> "Box":
        other = as_box(other)
        out = Box(self.value + other.value, (self, other))

        def backward(g):
            self.grad += _unbroadcast(g, self.value.shape)
            other.grad += _unbroadcast(g, other.value.shape)

        out._backward = backward
        return out

    __radd__ = __add__

    def __neg__(self) -> "Box":
        out = Box(-self.value, (self,))

        def backward(g):
            self.grad += -g

        out._backward = backward
        return out

    def __sub__(self, other) -> "Box":
        return self + (-as_box(other))

    def __rsub__(self, other) -> "Box":
        return as_box(other) + (-self)

    def __mul__(self, other) -> "Box":
        other = as_box(other)
        out = Box(self.value * other.value, (self, other))

        def backward(g):
            self.grad += _unbroadcast(g * other.value, self.value.shape)
            other.grad += _unbroadcast(g * self.value, other.value.shape)

        out._backward = backward
        return out

    __rmul__ = __mul__

    def __matmul__(self, other) -> "Box":
        other = as_box(other)
        out = Box(self.value @ other.value, (self, other))

        def backward(g):
            self.grad += g @ other.value.T
            other.grad += self.value.T @ g

        out._backward = backward
        return out

    # -- elementwise nonlinearities ------------------------------------

    def relu(self) -> "Box":
        out = Box(np.maximum(self.value, 0.0), (self,))
        mask = self.value > 0

        def backward(g):
            self.grad += g * mask

        out._backward = backward
        return out

    def tanh(self) -> "Box":
        y = np.tanh(self.value)
        out = Box(y, (self,))

        def backward(g):
            self.grad += g * (1.0 - y * y)

        out._backward = backward
        return out

    def sigmoid(self) -> "Box":
        y = stable_sigmoid(self.value)
        out = Box(y, (self,))

        def backward(g):
            self.grad += g * y * (1.0 - y)

        out._backward = backward
        return out

    def log_sigmoid(self) -> "Box":
        y = stable_log_sigmoid(self.value)
        out = Box(y, (self,))
        s = stable_sigmoid(self.value)

        def backward(g):
            self.grad += g * (1.0 - s)

        out._backward = backward
        return out

    def log_softmax(self) -> "Box":
        """Row-wise log-softmax over the last axis."""
        x = self.value
        m = x.max(axis=-1, keepdims=True)
        z = x - m
        lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
        y = z - lse
        out = Box(y, (self,))
        p = np.exp(y)

        def backward(g):
            self.grad += g - p * g.sum(axis=-1, keepdims=True)

        out._backward = backward
        return out

    def square(self) -> "Box":
        out = Box(self.value * self.value, (self,))

        def backward(g):
            self.grad += g * 2.0 * self.value

        out._backward = backward
        return out

    # -- reductions and shaping ----------------------------------------

    def sum(self, axis=None) -> "Box":
        out = Box(self.value.sum(axis=axis), (self,))
        shape = self.value.shape

        def backward(g):
            if axis is None:
                self.grad += np.broadcast_to(g, shape)
            else:
                self.grad += np.broadcast_to(np.expand_dims(g, axis), shape)

        out._backward = backward
        return out

    def mean(self) -> "Box":
        n = self.value.size
        return self.sum() * (1.0 / n)

    def reshape(self, *shape) -> "Box":
        out = Box(self.value.reshape(*shape), (self,))
        orig = self.value.shape

        def backward(g):
            self.grad += g.reshape(orig)

        out._backward = backward
        return out

    def slice1d(self, start: int, stop: int) -> "Box":
        if self.value.ndim != 1:
            raise UnsupportedPrimitive("slice1d expects a flat vector")
        out = Box(self.value[start:stop], (self,))

        def backward(g):
            self.grad[start:stop] += g

        out._backward = backward
        return out


def as_box(x) -> Box:
    """Wrap a raw array or scalar as a constant leaf on the tape."""
    return x if isinstance(x, Box) else Box(x)


def select_blocks(x: Box, index: np.ndarray, n_blocks: int) -> Box:
    """Pick one contiguous block per row: (B, n_blocks*D), (B,) -> (B, D).

    Used to read Q(s, a, .) rows out of a successor net whose output
    stacks one D-wide block per action.
    """
    batch, width = x.value.shape
    if width % n_blocks != 0:
        raise DimensionMismatch(f"width {width} not divisible by {n_blocks}")
    d = width // n_blocks
    cube = x.value.reshape(batch, n_blocks, d)
    rows = np.arange(batch)
    out = Box(cube[rows, index], (x,))

    def backward(g):
        full = np.zeros_like(cube)
        full[rows, index] = g
        x.grad += full.reshape(batch, width)

    out._backward = backward
    return out


def segment_sums(x: Box, sizes: np.ndarray) -> Box:
    """Sum a flat vector over consecutive segments of the given sizes."""
    sizes = np.asarray(sizes, dtype=np.int64)
    if x.value.ndim != 1 or int(sizes.sum()) != x.value.size:
        raise DimensionMismatch("segment sizes must tile the vector")
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    out = Box(np.add.reduceat(x.value, offsets), (x,))

    def backward(g):
        x.grad += np.repeat(g, sizes)

    out._backward = backward
    return out


def unit_rows(x: Box) -> Box:
    """Normalize each row to unit Euclidean norm."""
    norms = np.linalg.norm(x.value, axis=-1, keepdims=True)
    norms = np.maximum(norms, 1e-12)
    y = x.value / norms
    out = Box(y, (x,))

    def backward(g):
        inner = (g * y).sum(axis=-1, keepdims=True)
        x.grad += (g - y * inner) / norms

    out._backward = backward
    return out


_HIDDEN = {"relu"}
_HEADS = {"identity", "tanh", "unit"}


class Mlp:
    """Fully connected net over a single flat parameter vector.

    ``layer_sizes`` lists widths input first, e.g. (4, 64, 64, 1).
    Hidden layers use relu; ``head`` shapes the final output:
    "identity", "tanh" (elementwise), or "unit" (row-normalized).
    """

    def __init__(
        self,
        layer_sizes: Sequence[int],
        head: str = "identity",
        hidden: str = "relu",
        seed: int = 0,
    ):
        if len(layer_sizes) < 2:
            raise ValueError("need at least an input and output width")
        if head not in _HEADS:
            raise UnsupportedPrimitive(f"unknown head {head!r}")
        if hidden not in _HIDDEN:
            raise UnsupportedPrimitive(f"unknown hidden activation {hidden!r}")
        self.layer_sizes = tuple(int(n) for n in layer_sizes)
        self.head = head
        self.seed = seed
        rng = np.random.default_rng(seed)
        chunks = []
        pairs = list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))
        for i, (n_in, n_out) in enumerate(pairs):
            # He scale for relu layers, smaller for the linear output
            scale = np.sqrt(2.0 / n_in) if i < len(pairs) - 1 else 1.0 / np.sqrt(n_in)
            chunks.append(rng.normal(0.0, scale, n_in * n_out))
            chunks.append(np.zeros(n_out))
        self.params = np.concatenate(chunks)

    @property
    def n_params(self) -> int:
        return sum((a + 1) * b for a, b in zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    def _check_input(self, x: np.ndarray) -> None:
        if x.shape[-1] != self.layer_sizes[0]:
            raise DimensionMismatch(
                f"expected input width {self.layer_sizes[0]}, got {x.shape[-1]}"
            )

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Plain numpy forward pass; accepts (in,) or (B, in)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        self._check_input(x)
        h = x
        offset = 0
        pairs = list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))
        for i, (n_in, n_out) in enumerate(pairs):
            w = self.params[offset:offset + n_in * n_out].reshape(n_in, n_out)
            offset += n_in * n_out
            b = self.params[offset:offset + n_out]
            offset += n_out
            h = h @ w + b
            if i < len(pairs) - 1:
                h = np.maximum(h, 0.0)
        if self.head == "tanh":
            h = np.tanh(h)
        elif self.head == "unit":
            norms = np.maximum(np.linalg.norm(h, axis=-1, keepdims=True), 1e-12)
            h = h / norms
        return h[0] if single else h

    def apply(self, params: Box, x) -> Box:
        """Tape forward pass with explicit parameters; x must be (B, in)."""
        xb = as_box(x)
        if xb.value.ndim != 2:
            raise DimensionMismatch("apply() expects a batched 2-D input")
        self._check_input(xb.value)
        h = xb
        offset = 0
        pairs = list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))
        for i, (n_in, n_out) in enumerate(pairs):
            w = params.slice1d(offset, offset + n_in * n_out).reshape(n_in, n_out)
            offset += n_in * n_out
            b = params.slice1d(offset, offset + n_out)
            offset += n_out
            h = h @ w + b
            if i < len(pairs) - 1:
                h = h.relu()
        if self.head == "tanh":
            h = h.tanh()
        elif self.head == "unit":
            h = unit_rows(h)
        return h

    def clone(self) -> "Mlp":
        other = Mlp(self.layer_sizes, head=self.head, seed=self.seed)
        other.params = self.params.copy()
        return other


def value_and_grad(net: Mlp, loss_fn: Callable[[Box], Box]) -> tuple[float, np.ndarray]:
    """Loss and exact d(loss)/d(params) for a scalar tape loss.

    ``loss_fn`` receives the net's parameters as a Box and must build
    the loss with net.apply and the tape primitives.
    """
    p = Box(net.params)
    loss = loss_fn(p)
    loss.backward()
    return float(loss.value), p.grad


def grad(net: Mlp, loss_fn: Callable[[Box], Box]) -> np.ndarray:
    return value_and_grad(net, loss_fn)[1]


class AdamState:
    """First/second moment accumulators for one flat parameter vector."""

    def __init__(
        self,
        n_params: int,
        lr: float = 5e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.step = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps


def adam_step(
    state: AdamState,
    params: np.ndarray,
    grad: np.ndarray,
    lr: float | None = None,
) -> np.ndarray:
    """One bias-corrected Adam update; returns the new parameter vector."""
    if params.shape != grad.shape or params.shape != state.m.shape:
        raise DimensionMismatch("params, grad, and state sizes disagree")
    state.step += 1
    lr = state.lr if lr is None else lr
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    return params - lr * m_hat / (np.sqrt(v_hat) + state.eps)
