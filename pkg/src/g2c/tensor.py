"""Dense float64 tensors with tape-ordered reverse-mode autodiff.

Every op that touches a tensor with ``requires_grad`` records its parents and
a backward closure, stamped with a monotonically increasing sequence number.
Recording order is a valid topological order, so :func:`backward` simply
visits reachable nodes in descending sequence order.
"""

import contextlib
import itertools
import math

import numpy as np
from scipy.special import erf

__all__ = [
    "DimensionError",
    "Tensor",
    "as_tensor",
    "backward",
    "cross_entropy",
    "cross_entropy_logits",
    "dropout",
    "einsum",
    "embedding",
    "finite_diff_check",
    "gelu",
    "layer_norm",
    "matmul",
    "no_grad",
    "softmax_lastdim",
]

_sequence = itertools.count()
_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _grad_enabled
    previous, _grad_enabled = _grad_enabled, False
    try:
        yield
    finally:
        _grad_enabled = previous


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


class Tensor:
    """A float64 array plus optional gradient bookkeeping."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_seq")

    def __init__(self, data, requires_grad=False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None
        self._seq = next(_sequence)

    @classmethod
    def _result(cls, data, parents, backward_fn):
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out._seq = next(_sequence)
        out.requires_grad = _grad_enabled and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = parents
            out._backward = backward_fn
        else:
            out._parents = ()
            out._backward = None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        if self.data.size != 1:
            raise DimensionError(f"item() needs a single element, got shape {self.data.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("division is only defined by a scalar")
        return mul(self, 1.0 / float(other))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def exp(self):
        return texp(self)

    def log(self):
        return tlog(self)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = a.data + b.data
    except ValueError as exc:
        raise DimensionError(f"cannot add shapes {a.shape} and {b.shape}") from exc

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._result(data, (a, b), backward_fn)


def neg(a):
    return Tensor._result(-a.data, (a,), lambda g: (-g,))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = a.data * b.data
    except ValueError as exc:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}") from exc

    def backward_fn(g):
        return (
            _unbroadcast(g * b.data, a.shape) if a.requires_grad else None,
            _unbroadcast(g * a.data, b.shape) if b.requires_grad else None,
        )

    return Tensor._result(data, (a, b), backward_fn)


def matmul(a, b):
    """Matrix product with numpy batch broadcasting over leading axes."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError("matmul operands must have at least two dimensions")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} x {b.shape}")
    data = np.matmul(a.data, b.data)

    def backward_fn(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return ga, gb

    return Tensor._result(data, (a, b), backward_fn)


def einsum(subscripts, *operands):
    """Differentiable ``np.einsum`` for explicit-output subscripts without ellipses.

    Each index of an operand must occur either in the output or in another
    operand; repeated indices within one operand are not supported.
    """
    operands = tuple(as_tensor(op) for op in operands)
    inputs, output = subscripts.replace(" ", "").split("->")
    in_subs = inputs.split(",")
    if len(in_subs) != len(operands):
        raise DimensionError("einsum subscripts do not match operand count")
    for subs, op in zip(in_subs, operands):
        if len(subs) != op.ndim or len(set(subs)) != len(subs):
            raise DimensionError(f"bad einsum subscripts {subs!r} for shape {op.shape}")
    data = np.einsum(subscripts, *(op.data for op in operands), optimize=True)

    def backward_fn(g):
        grads = []
        for k, op in enumerate(operands):
            if not op.requires_grad:
                grads.append(None)
                continue
            others = [in_subs[m] for m in range(len(operands)) if m != k]
            arrays = [operands[m].data for m in range(len(operands)) if m != k]
            available = set(output).union(*others) if others else set(output)
            kept = "".join(c for c in in_subs[k] if c in available)
            expr = ",".join([output] + others) + "->" + kept
            gk = np.einsum(expr, g, *arrays, optimize=True)
            if kept != in_subs[k]:
                shape = [op.shape[i] if c in available else 1 for i, c in enumerate(in_subs[k])]
                gk = np.broadcast_to(gk.reshape(shape), op.shape).copy()
            grads.append(gk)
        return tuple(grads)

    return Tensor._result(data, operands, backward_fn)


def tsum(a, axis=None, keepdims=False):
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor._result(np.asarray(data, dtype=np.float64), (a,), backward_fn)


def tmean(a, axis=None, keepdims=False):
    count = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / float(count))


def reshape(a, shape):
    data = a.data.reshape(shape)
    return Tensor._result(data, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes=None):
    data = np.transpose(a.data, axes)
    inverse = None if axes is None else np.argsort(axes)
    return Tensor._result(data, (a,), lambda g: (np.transpose(g, inverse),))


def getitem(a, index):
    data = a.data[index]

    def backward_fn(g):
        out = np.zeros_like(a.data)
        np.add.at(out, index, g)
        return (out,)

    return Tensor._result(np.array(data, dtype=np.float64), (a,), backward_fn)


def embedding(weight, ids):
    """Row lookup ``weight[ids]`` for an integer id array of any shape."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= weight.shape[0]):
        raise IndexError(f"id out of range for table with {weight.shape[0]} rows")
    data = weight.data[ids]

    def backward_fn(g):
        out = np.zeros_like(weight.data)
        np.add.at(out, ids.reshape(-1), g.reshape(-1, weight.shape[-1]))
        return (out,)

    return Tensor._result(data, (weight,), backward_fn)


def texp(a):
    data = np.exp(a.data)
    return Tensor._result(data, (a,), lambda g: (g * data,))


def tlog(a):
    return Tensor._result(np.log(a.data), (a,), lambda g: (g / a.data,))


def gelu(a):
    """Exact (erf-based) GELU."""
    x = a.data
    cdf = 0.5 * (1.0 + erf(x / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return Tensor._result(x * cdf, (a,), lambda g: (g * (cdf + x * pdf),))


def softmax_lastdim(x, mask=None):
    """Max-stabilised softmax over the last axis.

    ``mask`` broadcasts against ``x``; False entries get probability exactly 0.
    """
    x = as_tensor(x)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise DimensionError("softmax needs a non-empty last dimension")
    z = x.data
    if mask is not None:
        z = np.where(mask, z, -np.inf)
    shift = z.max(axis=-1, keepdims=True)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    e = np.exp(z - shift)
    p = e / e.sum(axis=-1, keepdims=True)

    def backward_fn(g):
        return (p * (g - (g * p).sum(axis=-1, keepdims=True)),)

    return Tensor._result(p, (x,), backward_fn)


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalise the last axis to zero mean / unit variance, then scale and shift."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    n = x.shape[-1]
    if gamma.shape != (n,) or beta.shape != (n,):
        raise DimensionError(f"gamma/beta must have shape ({n},)")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    data = xhat * gamma.data + beta.data

    def backward_fn(g):
        gx = ggamma = gbeta = None
        if x.requires_grad:
            gh = g * gamma.data
            gx = inv * (gh - gh.mean(axis=-1, keepdims=True)
                        - xhat * (gh * xhat).mean(axis=-1, keepdims=True))
        if gamma.requires_grad:
            ggamma = (g * xhat).reshape(-1, n).sum(axis=0)
        if beta.requires_grad:
            gbeta = g.reshape(-1, n).sum(axis=0)
        return gx, ggamma, gbeta

    return Tensor._result(data, (x, gamma, beta), backward_fn)


def dropout(x, p, rng, training=True):
    if not training or p <= 0.0:
        return x
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    return mul(x, Tensor(keep))


def cross_entropy(logits, targets, weights=None):
    """Weighted sum of ``-log softmax(logits)[target]`` over all leading positions.

    ``logits`` has shape ``(..., K)``; ``targets`` and ``weights`` have the
    leading shape. Positions with weight 0 contribute nothing (use this for
    padding).
    """
    logits = as_tensor(logits)
    k = logits.shape[-1]
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != logits.shape[:-1]:
        raise DimensionError(f"targets shape {targets.shape} vs logits {logits.shape}")
    w = np.ones(targets.shape) if weights is None else np.asarray(weights, dtype=np.float64)
    active = w != 0
    if np.any(active & ((targets < 0) | (targets >= k))):
        raise IndexError(f"target class out of range [0, {k})")
    safe = np.where(active, targets, 0)
    z = logits.data
    shift = z.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z - shift).sum(axis=-1, keepdims=True)) + shift
    logp = z - lse
    picked = np.take_along_axis(logp, safe[..., None], axis=-1)[..., 0]
    data = np.asarray(-(w * picked).sum())

    def backward_fn(g):
        grad = np.exp(logp)
        np.put_along_axis(grad, safe[..., None],
                          np.take_along_axis(grad, safe[..., None], axis=-1) - 1.0, axis=-1)
        return (g * w[..., None] * grad,)

    return Tensor._result(data, (logits,), backward_fn)


def cross_entropy_logits(logits, target):
    """Cross-entropy of a single logit vector against a class index."""
    logits = as_tensor(logits)
    if logits.ndim != 1:
        raise DimensionError("expected a 1-D logit vector")
    if not 0 <= int(target) < logits.shape[0]:
        raise IndexError(f"target {target} out of range [0, {logits.shape[0]})")
    return cross_entropy(logits, np.asarray(int(target)))


def backward(loss):
    """Populate ``.grad`` on every requires-grad tensor reachable from ``loss``.

    Gradients accumulate into existing ``.grad`` buffers; call ``zero_grad``
    on parameters between steps.
    """
    if loss.size != 1:
        raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    nodes, stack, seen = [], [loss], {id(loss)}
    while stack:
        node = stack.pop()
        nodes.append(node)
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                seen.add(id(parent))
                stack.append(parent)
    nodes.sort(key=lambda t: t._seq, reverse=True)
    pending = {id(loss): np.ones_like(loss.data)}
    for node in nodes:
        g = pending.pop(id(node), None)
        if g is None:
            continue
        node.grad = g if node.grad is None else node.grad + g
        if node._backward is None:
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = pg if key not in pending else pending[key] + pg


def finite_diff_check(f, params, h=1e-5):
    """Largest elementwise relative error between backward() and central differences.

    ``f`` is a zero-argument callable returning a scalar Tensor built from
    ``params``. The error per element is
    ``|a - n| / max(1e-12, |a| + |n|)``.
    """
    for p in params:
        p.zero_grad()
    loss = f()
    backward(loss)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    worst = 0.0
    for p, ga in zip(params, analytic):
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(f().data)
            flat[i] = orig - h
            fm = float(f().data)
            flat[i] = orig
            if not (math.isfinite(fp) and math.isfinite(fm)):
                raise FloatingPointError(f"non-finite objective near element {i}")
            numeric = (fp - fm) / (2.0 * h)
            a = ga.reshape(-1)[i]
            err = abs(a - numeric) / max(1e-12, abs(a) + abs(numeric))
            worst = max(worst, err)
    for p in params:
        p.zero_grad()
    return worst
