"""Reverse-mode automatic differentiation over numpy float64 arrays.

A tiny tape: each :class:`Var` wraps an ndarray and remembers how to push a
cotangent back to its parents. Only the handful of operations the fixed
architectures here need are provided — dense affine maps, ReLU/softplus,
elementwise arithmetic with broadcasting, reductions, column slicing and
concatenation. No graph compilation, no fancy scheduling.

All values are float64. Gradients accumulate on ``Var.grad`` after
:func:`backward`; leaves created from raw arrays act as constants unless the
caller reads their ``grad``.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.special import expit


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Var:
    """Node in the autodiff graph: a value plus a vector-Jacobian closure."""

    __slots__ = ("value", "grad", "parents", "vjp")

    def __init__(
        self,
        value,
        parents: tuple["Var", ...] = (),
        vjp: Callable[[np.ndarray], tuple[np.ndarray, ...]] | None = None,
    ):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.parents = parents
        self.vjp = vjp

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    # -- elementwise arithmetic (numpy broadcasting rules) ------------------

    def __add__(self, other):
        other = lift(other)
        a, b = self, other
        out = Var(
            a.value + b.value,
            (a, b),
            lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)),
        )
        return out

    __radd__ = __add__

    def __sub__(self, other):
        other = lift(other)
        a, b = self, other
        return Var(
            a.value - b.value,
            (a, b),
            lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape)),
        )

    def __rsub__(self, other):
        return lift(other).__sub__(self)

    def __mul__(self, other):
        other = lift(other)
        a, b = self, other
        return Var(
            a.value * b.value,
            (a, b),
            lambda g: (
                _unbroadcast(g * b.value, a.value.shape),
                _unbroadcast(g * a.value, b.value.shape),
            ),
        )

    __rmul__ = __mul__

    def __neg__(self):
        return Var(-self.value, (self,), lambda g: (-g,))

    def __matmul__(self, other):
        other = lift(other)
        a, b = self, other
        return Var(
            a.value @ b.value,
            (a, b),
            lambda g: (g @ b.value.T, a.value.T @ g),
        )

    @property
    def T(self) -> "Var":
        return Var(self.value.T, (self,), lambda g: (g.T,))


def lift(x) -> Var:
    """Wrap arrays/scalars as constant leaves; pass Vars through."""
    return x if isinstance(x, Var) else Var(x)


def relu(x: Var) -> Var:
    x = lift(x)
    mask = x.value > 0  # subgradient at exactly 0 is 0
    return Var(np.where(mask, x.value, 0.0), (x,), lambda g: (g * mask,))


def softplus(x: Var) -> Var:
    x = lift(x)
    out = np.logaddexp(0.0, x.value)
    return Var(out, (x,), lambda g: (g * expit(x.value),))


def exp(x: Var) -> Var:
    x = lift(x)
    out = np.exp(x.value)
    return Var(out, (x,), lambda g: (g * out,))


def vsum(x: Var, axis=None, keepdims: bool = False) -> Var:
    x = lift(x)
    out = x.value.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, x.value.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, x.value.shape).copy(),)

    return Var(out, (x,), vjp)


def vmean(x: Var, axis=None, keepdims: bool = False) -> Var:
    x = lift(x)
    n = x.value.size if axis is None else x.value.shape[axis]
    return vsum(x, axis=axis, keepdims=keepdims) * (1.0 / n)


def reshape(x: Var, shape) -> Var:
    x = lift(x)
    old = x.value.shape
    return Var(x.value.reshape(shape), (x,), lambda g: (g.reshape(old),))


def cols(x: Var, start: int, stop: int) -> Var:
    """Column slice of a 2-D Var."""
    x = lift(x)

    def vjp(g):
        full = np.zeros_like(x.value)
        full[:, start:stop] = g
        return (full,)

    return Var(x.value[:, start:stop], (x,), vjp)


def concat_cols(parts: Sequence[Var]) -> Var:
    """Horizontally stack 2-D Vars with equal row counts."""
    parts = [lift(p) for p in parts]
    widths = [p.value.shape[1] for p in parts]
    edges = np.cumsum([0] + widths)

    def vjp(g):
        return tuple(g[:, edges[i] : edges[i + 1]] for i in range(len(parts)))

    return Var(np.concatenate([p.value for p in parts], axis=1), tuple(parts), vjp)


def backward(root: Var, cotangent=None) -> None:
    """Accumulate gradients of ``root . cotangent`` onto every node's grad.

    ``cotangent`` defaults to ones, i.e. plain gradients of a scalar root.
    Grads accumulate across calls only within one graph traversal; nodes
    start each call with whatever ``grad`` they already carry (normally
    None, since graphs here are rebuilt per step).
    """
    topo: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))

    if cotangent is None:
        cotangent = np.ones_like(root.value)
    root.grad = np.asarray(cotangent, dtype=np.float64).reshape(root.value.shape)

    for node in reversed(topo):
        if node.vjp is None or node.grad is None:
            continue
        for parent, contrib in zip(node.parents, node.vjp(node.grad)):
            if parent.grad is None:
                parent.grad = contrib
            else:
                parent.grad = parent.grad + contrib
