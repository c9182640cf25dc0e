"""Reverse-mode autodiff tensor.

Every op result remembers its parents and a closure that maps the output
gradient to parent gradients. ``Tensor.backward`` walks that tape once and
then drops it, so a second backward on the same graph is an error.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager

import numpy as np

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad():
    """Disable graph recording in the current thread."""
    prev = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


class Tensor:
    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.array(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = ()
        self._backward = None
        self._freed = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self._backward is None

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    # -- arithmetic used in tests and losses; deliberately small ---------------

    def __add__(self, other):
        other = _as_tensor(other)
        _check_same_shape(self, other, "add")
        return _record(self.data + other.data, (self, other), lambda g: (g, g))

    def __sub__(self, other):
        other = _as_tensor(other)
        _check_same_shape(self, other, "sub")
        return _record(self.data - other.data, (self, other), lambda g: (g, -g))

    def __mul__(self, other):
        other = _as_tensor(other)
        _check_same_shape(self, other, "mul")
        a, b = self.data, other.data
        return _record(a * b, (self, other), lambda g: (g * b, g * a))

    def sum(self):
        shape = self.shape
        return _record(np.array(self.data.sum()), (self,), lambda g: (np.broadcast_to(g, shape).copy(),))

    def reshape(self, *shape):
        old = self.shape
        return _record(self.data.reshape(*shape), (self,), lambda g: (g.reshape(old),))

    # -- backward ---------------------------------------------------------------

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into ``.grad`` of every reachable leaf.

        ``grad`` is the upstream gradient; it may be omitted only for a
        single-element tensor.
        """
        if self._freed:
            raise RuntimeError("graph already consumed by a previous backward()")
        if self._backward is None and not self.requires_grad:
            raise RuntimeError("backward() called on a tensor with no recorded graph")
        if grad is None:
            if self.data.size != 1:
                raise RuntimeError("backward() on a non-scalar tensor needs an explicit grad")
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.shape:
            raise ValueError(f"grad shape {grad.shape} does not match tensor shape {self.shape}")

        order = _topo_order(self)
        grads = {id(self): grad}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg
            node._backward = None
            node._parents = ()
            node._freed = True


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_same_shape(a, b, op):
    if a.shape != b.shape:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _record(data, parents, backward_fn):
    """Wrap an op result, attaching the tape entry when any parent needs grad."""
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    out._parents = ()
    out._backward = None
    out._freed = False
    out.requires_grad = grad_enabled() and any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _topo_order(root):
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
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order
