"""Dense float64 tensors with reverse-mode automatic differentiation.

Every array is float64 and row-major.  Operations record a backward
closure on the output tensor; calling ``backward(loss)`` on a scalar
walks the graph in reverse topological order and accumulates gradients
into every tensor that has ``requires_grad`` set.  Gradients accumulate
across calls until explicitly zeroed, so multi-loss sums work without
extra bookkeeping.
"""

import numpy as np


class ShapeError(ValueError):
    """Operand shapes violate an operation's contract."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values."""


class Tensor:
    """A dense n-dimensional float64 array plus an autodiff graph handle."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _result(data, parents, backward_fn):
    """Wrap an op result, attaching the graph node only when needed."""
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _accumulate(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad += g


def _suffix_ok(a_shape, b_shape):
    k = len(b_shape)
    return k <= len(a_shape) and (k == 0 or a_shape[len(a_shape) - k:] == b_shape)


def _sum_to_suffix(g, b_shape):
    """Reduce a gradient of a broadcast result back to the suffix shape."""
    lead = g.ndim - len(b_shape)
    if lead == 0:
        return g
    return g.sum(axis=tuple(range(lead)))


def matmul(a, b):
    """Matrix product of a (m,k) and b (k,n)."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out_data = a.data @ b.data

    def bwd(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return _result(out_data, (a, b), bwd)


def add(a, b):
    """Elementwise sum; b may be a suffix-shaped tensor broadcast over a's leading axes."""
    if not _suffix_ok(a.shape, b.shape):
        raise ShapeError(f"add: shape {b.shape} is not a suffix of {a.shape}")
    out_data = a.data + b.data

    def bwd(g):
        _accumulate(a, g)
        _accumulate(b, _sum_to_suffix(g, b.shape))

    return _result(out_data, (a, b), bwd)


def mul(a, b):
    """Elementwise product with the same suffix-broadcast rule as add."""
    if not _suffix_ok(a.shape, b.shape):
        raise ShapeError(f"mul: shape {b.shape} is not a suffix of {a.shape}")
    out_data = a.data * b.data

    def bwd(g):
        _accumulate(a, g * b.data)
        _accumulate(b, _sum_to_suffix(g * a.data, b.shape))

    return _result(out_data, (a, b), bwd)


def scale(x, c):
    """Multiply by a python scalar."""
    c = float(c)
    out_data = x.data * c

    def bwd(g):
        _accumulate(x, g * c)

    return _result(out_data, (x,), bwd)


def relu(x):
    out_data = np.maximum(x.data, 0.0)

    def bwd(g):
        _accumulate(x, g * (x.data > 0.0))

    return _result(out_data, (x,), bwd)


def transpose(x):
    if x.ndim != 2:
        raise ShapeError(f"transpose: expected 2-d tensor, got shape {x.shape}")

    def bwd(g):
        _accumulate(x, g.T)

    return _result(x.data.T.copy(), (x,), bwd)


def reshape(x, shape):
    orig = x.shape

    def bwd(g):
        _accumulate(x, g.reshape(orig))

    return _result(x.data.reshape(shape).copy(), (x,), bwd)


def concat_last(a, b):
    """Concatenate along the last axis; all leading dimensions must match."""
    if a.ndim != b.ndim or a.ndim < 1 or a.shape[:-1] != b.shape[:-1]:
        raise ShapeError(f"concat_last: leading dims differ, {a.shape} vs {b.shape}")
    p = a.shape[-1]
    out_data = np.concatenate([a.data, b.data], axis=-1)

    def bwd(g):
        _accumulate(a, g[..., :p])
        _accumulate(b, g[..., p:])

    return _result(out_data, (a, b), bwd)


def slice_last(x, start, stop):
    """Take columns [start, stop) of the last axis."""
    if not (0 <= start <= stop <= x.shape[-1]):
        raise ShapeError(f"slice_last: [{start}, {stop}) out of range for {x.shape}")

    def bwd(g):
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[..., start:stop] = g
            _accumulate(x, full)

    return _result(x.data[..., start:stop].copy(), (x,), bwd)


def slice_rows(x, start, stop):
    """Take rows [start, stop) of the first axis."""
    if not (0 <= start <= stop <= x.shape[0]):
        raise ShapeError(f"slice_rows: [{start}, {stop}) out of range for {x.shape}")

    def bwd(g):
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[start:stop] = g
            _accumulate(x, full)

    return _result(x.data[start:stop].copy(), (x,), bwd)


def softmax_rows(x, mask=None):
    """Row-wise softmax over the last axis, stabilized by max-subtraction.

    ``mask`` is an optional boolean array of x's shape; True marks a
    position as masked out.  Masked entries are exactly 0 in the output
    and a fully masked row is an error.
    """
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != x.shape:
            raise ShapeError(f"softmax mask shape {mask.shape} != input {x.shape}")
        if np.any(mask.all(axis=-1)):
            raise ValueError("softmax_rows: a row is fully masked, no valid candidate")
        shifted = np.where(mask, -np.inf, x.data)
    else:
        shifted = x.data
    m = shifted.max(axis=-1, keepdims=True)
    e = np.exp(shifted - m)
    y = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        inner = (g * y).sum(axis=-1, keepdims=True)
        _accumulate(x, y * (g - inner))

    return _result(y, (x,), bwd)


def layer_norm(x, gain, bias, epsilon=1e-5):
    """Standardize each last-axis vector, then apply an elementwise affine map."""
    d = x.shape[-1]
    if d < 2:
        raise ShapeError(f"layer_norm: last dimension must be >= 2, got {d}")
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError(
            f"layer_norm: gain {gain.shape} / bias {bias.shape} do not match width {d}")
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + epsilon)
    xhat = (x.data - mu) * inv
    out_data = xhat * gain.data + bias.data

    def bwd(g):
        lead = tuple(range(g.ndim - 1))
        _accumulate(gain, (g * xhat).sum(axis=lead))
        _accumulate(bias, g.sum(axis=lead))
        if x.requires_grad:
            dxhat = g * gain.data
            term = dxhat - dxhat.mean(axis=-1, keepdims=True) \
                - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
            _accumulate(x, term * inv)

    return _result(out_data, (x, gain, bias), bwd)


def embedding_lookup(table, ids):
    """Gather rows of a (V,d) tensor; backward scatter-adds into the used rows."""
    if table.ndim != 2:
        raise ShapeError(f"embedding_lookup: table must be 2-d, got {table.shape}")
    idx = np.asarray(ids, dtype=np.intp)
    if idx.ndim != 1:
        raise ShapeError("embedding_lookup: ids must be a flat sequence")
    v = table.shape[0]
    bad = (idx < 0) | (idx >= v)
    if bad.any():
        which = int(idx[bad][0])
        raise IndexError(f"embedding_lookup: id {which} out of range for table of {v} rows")
    out_data = table.data[idx].copy()

    def bwd(g):
        if table.requires_grad:
            full = np.zeros_like(table.data)
            np.add.at(full, idx, g)
            _accumulate(table, full)

    return _result(out_data, (table,), bwd)


def cross_entropy(logits, gold):
    """Mean negative log-likelihood of gold indices under row softmax.

    logits is (n,k); gold is a length-n sequence of class indices.
    """
    if logits.ndim != 2:
        raise ShapeError(f"cross_entropy: logits must be 2-d, got {logits.shape}")
    n, k = logits.shape
    idx = np.asarray(gold, dtype=np.intp)
    if idx.shape != (n,):
        raise ShapeError(f"cross_entropy: gold length {idx.shape} != rows {n}")
    bad = (idx < 0) | (idx >= k)
    if bad.any():
        raise IndexError(f"cross_entropy: gold index {int(idx[bad][0])} out of range [0, {k})")
    m = logits.data.max(axis=-1, keepdims=True)
    e = np.exp(logits.data - m)
    z = e.sum(axis=-1, keepdims=True)
    log_probs = logits.data - m - np.log(z)
    out_data = -log_probs[np.arange(n), idx].mean()

    def bwd(g):
        if logits.requires_grad:
            soft = e / z
            soft[np.arange(n), idx] -= 1.0
            _accumulate(logits, (float(g) / n) * soft)

    return _result(out_data, (logits,), bwd)


def sum_all(x):
    """Sum of all entries, as a scalar tensor."""

    def bwd(g):
        _accumulate(x, np.full(x.shape, float(g)))

    return _result(x.data.sum(), (x,), bwd)


def dropout(x, p, rng):
    """Inverted dropout with an explicit generator, for reproducible training."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout: p must be in [0, 1), got {p}")
    if p == 0.0:
        return x
    keep = (rng.random(x.shape) >= p) / (1.0 - p)

    def bwd(g):
        _accumulate(x, g * keep)

    return _result(x.data * keep, (x,), bwd)


def pairwise_bilinear(dep, head, u):
    """Per-row bilinear forms: out[i, l] = dep[i] @ u[l] @ head[i].

    dep and head are (n,d), u is (L,d,d); the result is (n,L).  Used for
    label scoring where each dependent row is paired with its chosen head row.
    """
    if dep.ndim != 2 or head.ndim != 2 or dep.shape != head.shape:
        raise ShapeError(f"pairwise_bilinear: dep {dep.shape} and head {head.shape} must match")
    d = dep.shape[1]
    if u.ndim != 3 or u.shape[1] != d or u.shape[2] != d:
        raise ShapeError(f"pairwise_bilinear: u {u.shape} incompatible with width {d}")
    out_data = np.einsum("id,ldk,ik->il", dep.data, u.data, head.data)

    def bwd(g):
        if dep.requires_grad:
            _accumulate(dep, np.einsum("il,ldk,ik->id", g, u.data, head.data))
        if u.requires_grad:
            _accumulate(u, np.einsum("il,id,ik->ldk", g, dep.data, head.data))
        if head.requires_grad:
            _accumulate(head, np.einsum("il,ldk,id->ik", g, u.data, dep.data))

    return _result(out_data, (dep, head, u), bwd)


def backward(loss):
    """Accumulate d(loss)/d(t) into every reachable tensor with requires_grad."""
    if loss.ndim != 0:
        raise ValueError(f"backward: loss must be scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    # Iterative post-order topological sort; recursion would be fragile on
    # long chains built by big batches.
    topo = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)
