"""Dense float64 tensors with tape-based reverse-mode differentiation.

Values are plain ``numpy.ndarray`` objects.  Every operation appends a
:class:`TapeNode` to a :class:`Tape`; :meth:`Tape.backward` walks the tape in
reverse id order and accumulates vector-Jacobian products.  Ops accept either
:class:`Node` handles or array-likes; raw arrays become constants on the tape
of the first Node operand (or on a fresh tape when there is none).

Broadcasting is limited to what the model needs: adding a bias row to a batch,
and scaling a batch by a column of per-row weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import ContractError, DimensionError, GradCheckError

# largest double below 1; keeps sigmoid strictly inside (0, 1)
_ONE_MINUS = np.nextafter(1.0, 0.0)


@dataclass
class TapeNode:
    op: str
    inputs: tuple[int, ...]
    vjp: Callable[[np.ndarray], tuple] | None = field(default=None, repr=False)
    name: str | None = None


class Node:
    """Handle to a value recorded on a tape."""

    __slots__ = ("tape", "id", "value")

    def __init__(self, tape: "Tape", id: int, value: np.ndarray):
        self.tape = tape
        self.id = id
        self.value = value

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def name(self) -> str | None:
        return self.tape.nodes[self.id].name

    def item(self) -> float:
        return float(self.value)

    def __repr__(self):
        return f"Node(id={self.id}, op={self.tape.nodes[self.id].op!r}, shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


class Tape:
    """Append-only record of operations; node ids increase in forward order."""

    def __init__(self):
        self.nodes: list[TapeNode] = []
        self._values: list[np.ndarray] = []
        self._watched: dict[str, Node] = {}

    def __len__(self):
        return len(self.nodes)

    def _record(self, op, value, inputs=(), vjp=None, name=None) -> Node:
        node_id = len(self.nodes)
        self.nodes.append(TapeNode(op, tuple([n.id for n in inputs]), vjp, name))
        self._values.append(value)
        return Node(self, node_id, value)

    def constant(self, value) -> Node:
        return self._record("const", np.asarray(value, dtype=np.float64))

    def leaf(self, value, name: str) -> Node:
        """Differentiable input; gradients are reported under ``name``."""
        if name in self._watched:
            raise ContractError(f"leaf {name!r} already on this tape")
        node = self._record("leaf", np.array(value, dtype=np.float64), name=name)
        self._watched[name] = node
        return node

    def watch(self, params: Mapping[str, np.ndarray]) -> dict[str, Node]:
        """Register a parameter dict as leaves (idempotent per name)."""
        out = {}
        for name, value in params.items():
            if isinstance(value, Node):
                out[name] = value
            elif name in self._watched:
                out[name] = self._watched[name]
            else:
                out[name] = self.leaf(value, name)
        return out

    def kink_distance(self) -> float:
        """Smallest |input| over all ReLU nodes (hinges included); inf if none.

        Central differences are only trustworthy when this exceeds the
        perturbation's effect on those inputs.
        """
        out = np.inf
        for node in self.nodes:
            if node.op == "relu":
                v = self._values[node.inputs[0]]
                if v.size:
                    out = min(out, float(np.abs(v).min()))
        return out

    def backward(self, loss: Node, wrt=None) -> dict[str, np.ndarray]:
        """Gradients of scalar ``loss`` w.r.t. named leaves.

        ``wrt`` restricts (or orders) the returned names; leaves the loss does
        not reach get zero gradients.
        """
        if loss.tape is not self:
            raise ContractError("loss node belongs to a different tape")
        if loss.value.size != 1 or loss.value.ndim != 0:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        grads: dict[int, np.ndarray] = {loss.id: np.ones((), dtype=np.float64)}
        for node_id in range(loss.id, -1, -1):
            g = grads.get(node_id)
            if g is None:
                continue
            entry = self.nodes[node_id]
            if entry.vjp is None:
                continue
            del grads[node_id]
            for parent, pg in zip(entry.inputs, entry.vjp(g)):
                if pg is None:
                    continue
                if parent in grads:
                    grads[parent] = grads[parent] + pg
                else:
                    grads[parent] = pg
        names = list(self._watched) if wrt is None else list(wrt)
        out = {}
        for name in names:
            leaf = self._watched.get(name)
            if leaf is None:
                raise ContractError(f"no leaf named {name!r} on this tape")
            g = grads.get(leaf.id)
            out[name] = np.zeros_like(leaf.value) if g is None else np.asarray(g, dtype=np.float64).reshape(leaf.shape)
        return out


def backward(loss: Node, wrt=None) -> dict[str, np.ndarray]:
    return loss.tape.backward(loss, wrt)


def _lift(*args):
    tape = None
    for a in args:
        if isinstance(a, Node):
            tape = a.tape
            break
    if tape is None:
        tape = Tape()
    out = []
    for a in args:
        if isinstance(a, Node):
            if a.tape is not tape:
                raise ContractError("operands live on different tapes")
            out.append(a)
        else:
            out.append(tape.constant(a))
    return tape, out


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _check_broadcast(op, a, b):
    if a.value.shape == b.value.shape:
        return
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# ---------------------------------------------------------------- elementwise

def add(a, b) -> Node:
    tape, (a, b) = _lift(a, b)
    _check_broadcast("add", a, b)
    sa, sb = a.shape, b.shape
    return tape._record(
        "add", a.value + b.value, (a, b),
        lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Node:
    tape, (a, b) = _lift(a, b)
    _check_broadcast("sub", a, b)
    sa, sb = a.shape, b.shape
    return tape._record(
        "sub", a.value - b.value, (a, b),
        lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Node:
    """Elementwise product with the limited broadcasting described above."""
    tape, (a, b) = _lift(a, b)
    _check_broadcast("mul", a, b)
    av, bv = a.value, b.value
    return tape._record(
        "mul", av * bv, (a, b),
        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def hadamard(a, b) -> Node:
    """Channel-wise product of two same-shape tensors."""
    tape, (a, b) = _lift(a, b)
    if a.shape != b.shape:
        raise DimensionError(f"hadamard: shapes {a.shape} and {b.shape} differ")
    return mul(a, b)


def scale(a, c: float) -> Node:
    tape, (a,) = _lift(a)
    c = float(c)
    return tape._record("scale", a.value * c, (a,), lambda g: (g * c,))


def square(a) -> Node:
    tape, (a,) = _lift(a)
    av = a.value
    return tape._record("square", av * av, (a,), lambda g: (2.0 * av * g,))


def sigmoid(a) -> Node:
    tape, (a,) = _lift(a)
    x = a.value
    with np.errstate(under="ignore"):  # e -> 0 is the intended limit
        e = np.exp(-np.abs(x))
    s = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    s = np.minimum(s, _ONE_MINUS)
    return tape._record("sigmoid", s, (a,), lambda g: (g * s * (1.0 - s),))


def relu(a) -> Node:
    tape, (a,) = _lift(a)
    mask = a.value > 0
    return tape._record("relu", np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


# ------------------------------------------------------------------- linear

def matmul(a, b) -> Node:
    tape, (a, b) = _lift(a, b)
    av, bv = a.value, b.value
    if av.ndim not in (1, 2) or bv.ndim not in (1, 2) or av.shape[-1] != bv.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {av.shape} by {bv.shape}")

    def vjp(g):
        if av.ndim == 1 and bv.ndim == 1:
            return g * bv, g * av
        if av.ndim == 1:
            return bv @ g, np.outer(av, g)
        if bv.ndim == 1:
            return np.outer(g, bv), av.T @ g
        return g @ bv.T, av.T @ g

    return tape._record("matmul", av @ bv, (a, b), vjp)


def transpose(a) -> Node:
    tape, (a,) = _lift(a)
    return tape._record("transpose", a.value.T, (a,), lambda g: (g.T,))


def linear(x, w, b) -> Node:
    """``x @ w.T + b`` for ``w`` stored as (out, in)."""
    return add(matmul(x, transpose(w)), b)


# ---------------------------------------------------------------- structure

def concat(a, b) -> Node:
    """Concatenate along the last axis."""
    tape, (a, b) = _lift(a, b)
    av, bv = a.value, b.value
    if av.ndim != bv.ndim or av.shape[:-1] != bv.shape[:-1]:
        raise DimensionError(f"concat: incompatible shapes {av.shape} and {bv.shape}")
    p = av.shape[-1]
    return tape._record(
        "concat", np.concatenate([av, bv], axis=-1), (a, b),
        lambda g: (g[..., :p], g[..., p:]))


def take_cols(a, start: int, stop: int) -> Node:
    """Slice ``a[..., start:stop]``."""
    tape, (a,) = _lift(a)
    shape = a.shape

    def vjp(g):
        full = np.zeros(shape)
        full[..., start:stop] = g
        return (full,)

    return tape._record("take_cols", a.value[..., start:stop], (a,), vjp)


def reshape(a, shape) -> Node:
    tape, (a,) = _lift(a)
    old = a.shape
    return tape._record("reshape", a.value.reshape(shape), (a,), lambda g: (np.reshape(g, old),))


def take_rows(a, index) -> Node:
    """Gather rows ``a[index]``; repeated indices accumulate gradient."""
    tape, (a,) = _lift(a)
    index = np.asarray(index, dtype=np.intp)
    shape = a.shape

    def vjp(g):
        full = np.zeros(shape)
        np.add.at(full, index, g)
        return (full,)

    return tape._record("take_rows", a.value[index], (a,), vjp)


def pick(a, index) -> Node:
    """Per-row selection ``a[i, index[i]]`` (or ``a[index]`` for a vector)."""
    tape, (a,) = _lift(a)
    av = a.value
    index = np.asarray(index, dtype=np.intp)
    if av.ndim == 1:
        return tape._record("pick", av[index], (a,), lambda g: (_scatter1(av.shape, index, g),))
    rows = np.arange(av.shape[0])
    if index.shape != rows.shape:
        raise DimensionError(f"pick: {index.shape[0] if index.ndim else 1} indices for {av.shape[0]} rows")

    def vjp(g):
        full = np.zeros(av.shape)
        full[rows, index] = g
        return (full,)

    return tape._record("pick", av[rows, index], (a,), vjp)


def _scatter1(shape, index, g):
    full = np.zeros(shape)
    np.add.at(full, index, g)
    return full


# --------------------------------------------------------------- reductions

def sum(a) -> Node:  # noqa: A001
    tape, (a,) = _lift(a)
    shape = a.shape
    return tape._record("sum", np.asarray(a.value.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def mean(a) -> Node:
    tape, (a,) = _lift(a)
    shape, n = a.shape, a.value.size
    if n == 0:
        raise ContractError("mean of an empty tensor")
    return tape._record("mean", np.asarray(a.value.sum() / n), (a,), lambda g: (np.broadcast_to(g / n, shape).copy(),))


def softmax(a) -> Node:
    """Max-subtracted softmax over the last axis."""
    tape, (a,) = _lift(a)
    z = a.value - a.value.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return tape._record("softmax", s, (a,), vjp)


def log_softmax(a) -> Node:
    """Log-sum-exp normalised logits over the last axis."""
    tape, (a,) = _lift(a)
    z = a.value - a.value.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    out = z - lse
    s = np.exp(out)

    def vjp(g):
        return (g - s * g.sum(axis=-1, keepdims=True),)

    return tape._record("log_softmax", out, (a,), vjp)


# ------------------------------------------------------------ verification

def numerical_gradient(loss_fn, params: Mapping[str, np.ndarray], h: float = 1e-5) -> dict[str, np.ndarray]:
    """Central differences of ``loss_fn(params).value`` per coordinate."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    base = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    out = {}
    for name, value in base.items():
        grad = np.zeros_like(value)
        flat = value.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = _scalar(loss_fn(base))
            flat[i] = orig - h
            fm = _scalar(loss_fn(base))
            flat[i] = orig
            if not (math.isfinite(fp) and math.isfinite(fm)):
                raise GradCheckError(f"non-finite loss when perturbing {name}[{i}]", name, i)
            grad.reshape(-1)[i] = (fp - fm) / (2.0 * h)
        out[name] = grad
    return out


def _scalar(result) -> float:
    return float(result.value) if isinstance(result, Node) else float(result)


def grad_check(loss_fn, params: Mapping[str, np.ndarray], h: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``loss_fn(params)`` must return a scalar Node built by watching ``params``
    on a tape (``tape.watch(params)``).  Per coordinate the error is
    ``|a - n| / max(1e-8, |a| + |n|)``.
    """
    loss = loss_fn(params)
    if not math.isfinite(_scalar(loss)):
        raise GradCheckError("non-finite loss at the unperturbed point")
    analytic = loss.tape.backward(loss, wrt=list(params))
    numeric = numerical_gradient(loss_fn, params, h)
    worst = 0.0
    for name in params:
        a, n = analytic[name], numeric[name]
        err = np.abs(a - n) / np.maximum(1e-8, np.abs(a) + np.abs(n))
        if err.size:
            worst = max(worst, float(err.max()))
    return worst
