"""Small dense-tensor engine with a reverse-mode tape.

Only what the graph network and the pointer predictor need: dense 2-D
algebra, row gathers, segment (scatter) reductions and a few
nonlinearities. Data lives in numpy arrays; gradients are accumulated on a
:class:`Tape` in recording order, so reverse iteration is a valid
topological order.
"""

from __future__ import annotations

import contextlib
import threading
from typing import Iterable, Optional, Sequence

import numpy as np

_state = threading.local()


def default_dtype():
    return getattr(_state, "dtype", np.float32)


@contextlib.contextmanager
def precision(dtype):
    """Switch the dtype used for new tensors (float64 for gradient checks)."""
    old = default_dtype()
    _state.dtype = np.dtype(dtype).type
    try:
        yield
    finally:
        _state.dtype = old


class ShapeMismatch(ValueError):
    def __init__(self, op: str, got, expected):
        self.op, self.got, self.expected = op, got, expected
        super().__init__(f"{op}: got shape {got}, expected {expected}")


class NotScalarLoss(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "parents", "backward_fn", "grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        if isinstance(data, np.ndarray) and data.dtype == default_dtype():
            self.data = data
        else:
            self.data = np.asarray(data, dtype=default_dtype())
        self.requires_grad = requires_grad
        self.parents: tuple = ()
        self.backward_fn = None
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.shape}{', grad' if self.requires_grad else ''})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Records differentiable ops while active (``with Tape() as tape``)."""

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self):
        self._prev = getattr(_state, "tape", None)
        _state.tape = self
        return self

    def __exit__(self, *exc):
        _state.tape = self._prev
        return False

    def backward(self, loss: Tensor, params: Optional[dict] = None) -> dict:
        """Accumulate d(loss)/d(x) into ``x.grad`` for every leaf reached.

        Returns a gradient per entry of ``params`` (zeros for unreachable
        ones) when ``params`` is given.
        """
        if loss.data.size != 1:
            raise NotScalarLoss(f"loss must be scalar, got shape {loss.shape}")
        grads = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            parent_grads = node.backward_fn(g)
            for p, pg in zip(node.parents, parent_grads):
                if pg is None or not p.requires_grad:
                    continue
                if p.backward_fn is None:  # leaf
                    p.grad = pg.copy() if p.grad is None else p.grad + pg
                else:
                    prev = grads.get(id(p))
                    grads[id(p)] = pg if prev is None else prev + pg
        if params is None:
            return {}
        return {k: (p.grad if p.grad is not None else np.zeros_like(p.data)) for k, p in params.items()}


def backward(loss: Tensor, params: Optional[dict] = None) -> dict:
    tape = getattr(_state, "tape", None)
    if tape is None or not tape.nodes:
        raise RuntimeError("backward needs a non-empty active tape")
    return tape.backward(loss, params)


def _record(out_data, parents: Sequence[Tensor], backward_fn) -> Tensor:
    out = Tensor(out_data)
    tape = getattr(_state, "tape", None)
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.parents = tuple(parents)
        out.backward_fn = backward_fn
        tape.nodes.append(out)
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def _check_broadcast(op, a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatch(op, b.shape, a.shape) from None


# --------------------------------------------------------------------------
# elementwise

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("add", a, b)
    sa, sb = a.shape, b.shape
    return _record(a.data + b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("sub", a, b)
    sa, sb = a.shape, b.shape
    return _record(a.data - b.data, (a, b), lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("mul", a, b)
    ad, bd = a.data, b.data
    return _record(ad * bd, (a, b),
                   lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def scale(a: Tensor, c: float) -> Tensor:
    return _record(a.data * c, (a,), lambda g: (g * c,))


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    pos = a.data > 0
    out = np.where(pos, a.data, a.data * slope)
    return _record(out, (a,), lambda g: (np.where(pos, g, g * slope),))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _record(out, (a,), lambda g: (g * out,))


_LOG_FLOOR = 1e-30


def log(a: Tensor) -> Tensor:
    """Natural log with inputs floored at a tiny positive value."""
    x = np.maximum(a.data, _LOG_FLOOR)
    return _record(np.log(x), (a,), lambda g: (np.where(a.data > _LOG_FLOOR, g / x, 0.0),))


# --------------------------------------------------------------------------
# linear algebra and shape

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch("matmul", b.shape, (a.shape[-1], "*"))
    ad, bd = a.data, b.data
    return _record(ad @ bd, (a, b), lambda g: (g @ bd.T, ad.T @ g))


def dot(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 1 or a.shape != b.shape:
        raise ShapeMismatch("dot", b.shape, a.shape)
    ad, bd = a.data, b.data
    return _record(np.dot(ad, bd), (a, b), lambda g: (g * bd, g * ad))


def rowdot(a, b) -> Tensor:
    """Row-wise inner products of two (n, d) matrices -> (n,)."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape or a.data.ndim != 2:
        raise ShapeMismatch("rowdot", b.shape, a.shape)
    ad, bd = a.data, b.data
    return _record(np.einsum("ij,ij->i", ad, bd), (a, b),
                   lambda g: (g[:, None] * bd, g[:, None] * ad))


def concat(ts: Sequence[Tensor], axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in ts]
    if not ts:
        raise ShapeMismatch("concat", (), "at least one tensor")
    nd = ts[0].data.ndim
    ax = axis % nd
    for t in ts[1:]:
        if t.data.ndim != nd or any(t.shape[i] != ts[0].shape[i] for i in range(nd) if i != ax):
            raise ShapeMismatch("concat", t.shape, ts[0].shape)
    sizes = [t.shape[ax] for t in ts]
    splits = np.cumsum(sizes)[:-1]
    return _record(np.concatenate([t.data for t in ts], axis=ax), ts,
                   lambda g: tuple(np.split(g, splits, axis=ax)))


def reshape(a: Tensor, shape) -> Tensor:
    old = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeMismatch("reshape", old, shape) from None
    return _record(out, (a,), lambda g: (g.reshape(old),))


def sum(a: Tensor, axis=None) -> Tensor:  # noqa: A001
    shape = a.shape
    out = a.data.sum(axis=axis)

    def bw(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)
    return _record(out, (a,), bw)


def mean(a: Tensor, axis=None) -> Tensor:
    n = a.data.size if axis is None else a.shape[axis]
    return scale(sum(a, axis), 1.0 / n)


# --------------------------------------------------------------------------
# indexing and segments

def gather(a: Tensor, idx) -> Tensor:
    """Rows ``a[idx]``; also the embedding lookup."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        raise ShapeMismatch("gather", (int(idx.max()),), (a.shape[0],))
    shape = a.shape

    def bw(g):
        out = np.zeros(shape, dtype=g.dtype)
        np.add.at(out, idx, g)
        return (out,)
    return _record(a.data[idx], (a,), bw)


embedding_lookup = gather


def segment_sum(a: Tensor, seg, num_segments: int) -> Tensor:
    """Sum the rows of ``a`` that share a segment id -> (num_segments, ...)."""
    seg = np.asarray(seg, dtype=np.int64)
    if seg.shape[0] != a.shape[0]:
        raise ShapeMismatch("segment_sum", seg.shape, (a.shape[0],))
    out = np.zeros((num_segments,) + a.shape[1:], dtype=a.data.dtype)
    np.add.at(out, seg, a.data)
    return _record(out, (a,), lambda g: (g[seg],))


def segment_counts(seg, num_segments: int) -> np.ndarray:
    return np.bincount(np.asarray(seg, dtype=np.int64), minlength=num_segments)


def segment_mean(a: Tensor, seg, num_segments: int) -> Tensor:
    counts = segment_counts(seg, num_segments).astype(a.data.dtype)
    inv = 1.0 / np.maximum(counts, 1.0)
    shape = (-1,) + (1,) * (a.data.ndim - 1)
    return mul(segment_sum(a, seg, num_segments), Tensor(inv.reshape(shape)))


def segment_softmax(scores: Tensor, seg, num_segments: int) -> Tensor:
    """Softmax of a 1-D score vector within each segment."""
    seg = np.asarray(seg, dtype=np.int64)
    s = scores.data
    if s.ndim != 1 or seg.shape != s.shape:
        raise ShapeMismatch("segment_softmax", seg.shape, s.shape)
    mx = np.full(num_segments, -np.inf, dtype=s.dtype)
    np.maximum.at(mx, seg, s)
    e = np.exp(s - mx[seg])
    z = np.zeros(num_segments, dtype=s.dtype)
    np.add.at(z, seg, e)
    p = e / z[seg]

    def bw(g):
        gp = g * p
        tot = np.zeros(num_segments, dtype=g.dtype)
        np.add.at(tot, seg, gp)
        return (gp - p * tot[seg],)
    return _record(p, (scores,), bw)


def softmax(a: Tensor) -> Tensor:
    """Softmax along the last axis."""
    x = a.data
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    p = e / e.sum(axis=-1, keepdims=True)

    def bw(g):
        return (p * (g - (g * p).sum(axis=-1, keepdims=True)),)
    return _record(p, (a,), bw)


def log_softmax(a: Tensor) -> Tensor:
    x = a.data
    m = x.max(axis=-1, keepdims=True)
    lse = m + np.log(np.exp(x - m).sum(axis=-1, keepdims=True))
    out = x - lse
    p = np.exp(out)
    return _record(out, (a,), lambda g: (g - p * g.sum(axis=-1, keepdims=True),))


def cross_entropy(logits: Tensor, targets) -> Tensor:
    """Mean negative log-likelihood of ``targets`` under row-wise softmax."""
    if logits.data.ndim == 1:
        logits = reshape(logits, (1, -1))
    targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    n, c = logits.shape
    if targets.shape != (n,) or (targets.size and (targets.min() < 0 or targets.max() >= c)):
        raise ShapeMismatch("cross_entropy", targets.shape, (n,))
    lp = log_softmax(logits)
    flat = reshape(lp, (-1,))
    picked = gather_flat(flat, np.arange(n) * c + targets)
    return scale(sum(picked), -1.0 / n)


def gather_flat(a: Tensor, idx) -> Tensor:
    idx = np.asarray(idx, dtype=np.int64)
    size = a.shape[0]

    def bw(g):
        out = np.zeros(size, dtype=g.dtype)
        np.add.at(out, idx, g)
        return (out,)
    return _record(a.data[idx], (a,), bw)


# --------------------------------------------------------------------------
# Optimizer

class AdamState:
    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.step = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t: dict[str, int] = {}


def adam_step(params: dict, grads: dict, state: AdamState, lr: float,
              weight_decay: float = 0.0, decoupled: bool = False) -> None:
    """Update ``params`` in place from ``grads``.

    Only parameters present in ``grads`` move. Coupled weight decay adds
    ``weight_decay * param`` to the gradient; decoupled decay shrinks the
    parameter by ``lr * weight_decay * param`` outside the moment estimates.
    """
    state.step += 1
    b1, b2, eps = state.beta1, state.beta2, state.eps
    for name in sorted(grads):
        p = params[name]
        g = np.asarray(grads[name])
        if g.shape != p.data.shape:
            raise ShapeMismatch("adam_step", g.shape, p.data.shape)
        if weight_decay and not decoupled:
            g = g + weight_decay * p.data
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
            state.t[name] = 0
        v = state.v[name]
        state.t[name] += 1
        t = state.t[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        update = lr * m_hat / (np.sqrt(v_hat) + eps)
        if weight_decay and decoupled:
            update = update + lr * weight_decay * p.data
        p.data = (p.data - update).astype(p.data.dtype, copy=False)
