"""Tape-based reverse-mode differentiation over numpy arrays.

Operations accept either plain arrays or :class:`Node` objects. When no
argument is a node the operation simply returns an array, so the same model
code serves both training (recorded) and evaluation (unrecorded).
"""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..core import NumericError, ShapeError


class TapeStateError(RuntimeError):
    """The tape was used after its backward pass consumed it."""


class Node:
    __slots__ = ("value", "grad", "tape", "parents", "backward_fn", "name")

    def __init__(self, value, tape, parents=(), backward_fn=None, name=None):
        self.value = value
        self.grad = None
        self.tape = tape
        self.parents = parents
        self.backward_fn = backward_fn
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Node{label} shape={self.value.shape} dtype={self.value.dtype}>"


class GradTape:
    """Records operations in execution order for one backward pass."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.params: dict[str, Node] = {}
        self.consumed = False

    def _check(self):
        if self.consumed:
            raise TapeStateError("tape already consumed by backward(); record on a new tape")

    def param(self, name: str, value) -> Node:
        self._check()
        if name in self.params:
            raise ValueError(f"parameter {name!r} registered twice")
        node = Node(np.asarray(value), self, name=name)
        self.params[name] = node
        self.nodes.append(node)
        return node

    def input(self, value) -> Node:
        """Leaf whose gradient is wanted (e.g. the image batch for FGSM)."""
        self._check()
        node = Node(np.asarray(value), self)
        self.nodes.append(node)
        return node

    def record(self, value, parents, backward_fn) -> Node:
        self._check()
        node = Node(value, self, parents, backward_fn)
        self.nodes.append(node)
        return node


def _value(v):
    return v.value if isinstance(v, Node) else np.asarray(v)


def _tape_of(*args):
    for a in args:
        if isinstance(a, Node):
            return a.tape
    return None


def backward(tape: GradTape, loss: Node) -> dict[str, np.ndarray]:
    """Backpropagate from scalar ``loss``; return one gradient per registered parameter.

    Parameters the loss does not depend on get zero gradients. Input leaves
    created with :meth:`GradTape.input` receive their gradient in ``.grad``.
    """
    tape._check()
    if loss.tape is not tape:
        raise ValueError("loss was not recorded on this tape")
    if loss.value.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.value.shape}")
    tape.consumed = True

    loss.grad = np.ones_like(loss.value)
    for node in reversed(tape.nodes):
        if node.grad is None or node.backward_fn is None:
            continue
        for parent, g in zip(node.parents, node.backward_fn(node.grad)):
            if g is None or not isinstance(parent, Node):
                continue
            parent.grad = g if parent.grad is None else parent.grad + g
    return {
        name: (node.grad if node.grad is not None else np.zeros_like(node.value))
        for name, node in tape.params.items()
    }


def add(a, b):
    out = _value(a) + _value(b)
    tape = _tape_of(a, b)
    if tape is None:
        return out
    return tape.record(out, (a, b), lambda g: (g, g))


def scale(a, c: float):
    out = _value(a) * c
    tape = _tape_of(a)
    if tape is None:
        return out
    return tape.record(out, (a,), lambda g: (g * c,))


def sum_all(a):
    av = _value(a)
    out = np.asarray(av.sum(), dtype=av.dtype)
    tape = _tape_of(a)
    if tape is None:
        return out
    return tape.record(out, (a,), lambda g: (np.full_like(av, g),))


def relu(x):
    xv = _value(x)
    mask = xv > 0
    out = xv * mask
    tape = _tape_of(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (g * mask,))


def conv2d(x, w, b):
    """3x3 stride-1 convolution with zero padding 1. ``w`` is (F, C, 3, 3), ``b`` is (F,)."""
    xv, wv, bv = _value(x), _value(w), _value(b)
    n, c, h, wd = xv.shape
    f = wv.shape[0]
    if wv.shape[1:] != (c, 3, 3):
        raise ShapeError(f"kernel {wv.shape} does not match input channels {c}")
    cols = kernels.im2col(xv)
    wm = wv.reshape(f, -1)
    out = (np.matmul(wm, cols) + bv[None, :, None]).reshape(n, f, h, wd)
    tape = _tape_of(x, w, b)
    if tape is None:
        return out

    def grad_fn(g):
        gm = g.reshape(n, f, h * wd)
        dw = np.tensordot(gm, cols, axes=([0, 2], [0, 2])).reshape(wv.shape)
        db = gm.sum(axis=(0, 2))
        dx = None
        if isinstance(x, Node):
            dx = kernels.col2im(np.matmul(wm.T, gm), xv.shape)
        return dx, dw, db

    return tape.record(out, (x, w, b), grad_fn)


def maxpool2x2(x):
    xv = _value(x)
    if xv.shape[2] % 2 or xv.shape[3] % 2:
        raise ShapeError(f"2x2 pooling needs even spatial extents, got {xv.shape}")
    out, idx = kernels.maxpool2(xv)
    tape = _tape_of(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (kernels.maxpool2_backward(g, idx),))


def flatten(x):
    xv = _value(x)
    out = xv.reshape(xv.shape[0], -1)
    tape = _tape_of(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (g.reshape(xv.shape),))


def dense(x, w, b):
    """``x @ w + b`` with ``w`` of shape (in_features, out_features)."""
    xv, wv, bv = _value(x), _value(w), _value(b)
    if xv.shape[1] != wv.shape[0]:
        raise ShapeError(f"dense input has {xv.shape[1]} features, weight expects {wv.shape[0]}")
    out = xv @ wv + bv
    tape = _tape_of(x, w, b)
    if tape is None:
        return out
    return tape.record(out, (x, w, b), lambda g: (g @ wv.T, xv.T @ g, g.sum(axis=0)))


def log_softmax(z):
    z = np.asarray(z)
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def soft_cross_entropy(logits, targets):
    """Mean over the batch of ``-sum_k t_k log softmax(logits)_k`` for soft targets."""
    zv = _value(logits)
    t = np.asarray(targets, dtype=zv.dtype)
    if zv.shape != t.shape or zv.ndim != 2:
        raise ShapeError(f"logits {zv.shape} and targets {t.shape} must be equal (N, K)")
    if np.isnan(zv).any():
        raise NumericError("NaN in logits")
    n = zv.shape[0]
    logp = log_softmax(zv)
    out = np.asarray(-(t * logp).sum() / n, dtype=zv.dtype)
    tape = _tape_of(logits)
    if tape is None:
        return out

    def grad_fn(g):
        p = np.exp(logp)
        return ((p * t.sum(axis=1, keepdims=True) - t) * (g / n),)

    return tape.record(out, (logits,), grad_fn)
