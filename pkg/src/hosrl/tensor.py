"""Minimal reverse-mode automatic differentiation over numpy arrays.

Operations are recorded on a :class:`Graph` tape while one is active
(``with Graph() as g:``).  Outside a graph nothing is recorded, which is
the inference path.  ``g.backward(loss)`` walks the tape in exact reverse
append order and accumulates gradients into leaf tensors.
"""

from __future__ import annotations

import contextlib
import itertools
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

DEFAULT_DTYPE = np.float32

_ids = itertools.count()
_local = threading.local()
_FAULTS: set[str] = set()


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class GradientError(RuntimeError):
    """Contract violation in differentiation or gradient checking."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "uid", "name", "graph")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None, dtype=None):
        if dtype is None:
            arr = np.asarray(data)
            dtype = arr.dtype if arr.dtype.kind == "f" else DEFAULT_DTYPE
        self.data = np.array(data, dtype=dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.uid = next(_ids)
        self.name = name
        self.graph: Graph | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self.graph is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, params: Iterable["Tensor"] | None = None) -> None:
        backward(self, params)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


@dataclass
class _Record:
    out: Tensor
    inputs: tuple[Tensor, ...]
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]


@dataclass
class Graph:
    """Operation tape; topological order is append order."""

    records: list[_Record] = field(default_factory=list)

    def __enter__(self) -> "Graph":
        _stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        _stack().pop()

    def __len__(self) -> int:
        return len(self.records)

    def backward(self, loss: Tensor, params: Iterable[Tensor] | None = None) -> None:
        if loss.data.size != 1 or loss.ndim > 1:
            raise GradientError(f"backward needs a scalar loss, got shape {loss.shape}")
        seed = np.ones_like(loss.data)
        if loss.is_leaf:
            if loss.requires_grad:
                _accumulate(loss, seed)
        else:
            if loss.graph is not self:
                raise GradientError("loss was not recorded on this graph")
            grads: dict[int, np.ndarray] = {loss.uid: seed}
            for rec in reversed(self.records):
                g = grads.pop(rec.out.uid, None)
                if g is None:
                    continue
                for inp, gi in zip(rec.inputs, rec.backward(g)):
                    if gi is None or not inp.requires_grad:
                        continue
                    if inp.is_leaf:
                        _accumulate(inp, gi)
                    elif inp.uid in grads:
                        grads[inp.uid] = grads[inp.uid] + gi
                    else:
                        grads[inp.uid] = gi
        if params is not None:
            for p in params:
                if p.grad is None:
                    p.grad = np.zeros_like(p.data)


def _stack() -> list:
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def current_graph() -> Graph | None:
    stack = _stack()
    return stack[-1] if stack else None


@contextlib.contextmanager
def no_grad():
    """Suspend recording, e.g. for finite-difference evaluations."""
    _stack().append(None)
    try:
        yield
    finally:
        _stack().pop()


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    g = np.asarray(g, dtype=t.data.dtype).reshape(t.shape)
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad = t.grad + g


def backward(loss: Tensor, params: Iterable[Tensor] | None = None) -> None:
    """Populate ``.grad`` of every leaf reachable from ``loss``.

    Leaves listed in ``params`` that the loss does not reach get zeros.
    Gradients accumulate across calls; clear them with ``zero_grad``.
    """
    if loss.graph is None:
        Graph().backward(loss, params)
    else:
        loss.graph.backward(loss, params)


def make_op(data: np.ndarray, inputs: Sequence[Tensor], backward_fn) -> Tensor:
    """Wrap ``data`` as the output of an operation on ``inputs``.

    ``backward_fn`` maps the output gradient to one gradient (or None) per
    input.  Recording only happens inside an active graph.
    """
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.uid = next(_ids)
    out.name = None
    out.graph = None
    out.requires_grad = False
    g = current_graph()
    if g is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.graph = g
        g.records.append(_Record(out, tuple(inputs), backward_fn))
    return out


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


@contextlib.contextmanager
def inject_fault(kind: str):
    """Deliberately corrupt one backward rule (negative control for grad checks)."""
    _FAULTS.add(kind)
    try:
        yield
    finally:
        _FAULTS.discard(kind)


# ---------------------------------------------------------------- operations


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    A, B = a.data, b.data
    return make_op(A @ B, (a, b), lambda g: (g @ B.T, A.T @ g))


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return make_op(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("sub", a, b)
    return make_op(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("mul", a, b)
    A, B = a.data, b.data
    return make_op(A * B, (a, b), lambda g: (g * B, g * A))


def scale(x: Tensor, c: float) -> Tensor:
    return make_op(x.data * x.data.dtype.type(c), (x,), lambda g: (g * c,))


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """Add a vector to every row (the only broadcast this engine allows)."""
    if b.ndim != 1 or x.shape[-1] != b.shape[0]:
        raise DimensionError(f"add_bias: bias {b.shape} does not fit rows of {x.shape}")

    def bwd(g):
        return g, g.reshape(-1, b.shape[0]).sum(axis=0)

    return make_op(x.data + b.data, (x, b), bwd)


def row_scale(x: Tensor, weights) -> Tensor:
    """Multiply row i of ``x`` by the constant ``weights[i]`` (masking)."""
    w = np.asarray(weights, dtype=x.data.dtype)
    if w.shape != (x.shape[0],):
        raise DimensionError(f"row_scale: weights {w.shape} do not match rows of {x.shape}")
    w = w.reshape((-1,) + (1,) * (x.ndim - 1))
    return make_op(x.data * w, (x,), lambda g: (g * w,))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def bwd(g):
        d = 1.0 - y * y
        if "tanh" in _FAULTS:
            d = d * 1.5
        return (g * d,)

    return make_op(y, (x,), bwd)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return make_op(np.where(mask, x.data, 0).astype(x.data.dtype), (x,), lambda g: (g * mask,))


def sigmoid(x: Tensor) -> Tensor:
    y = np.empty_like(x.data)
    pos = x.data >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x.data[pos]))
    ez = np.exp(x.data[~pos])
    y[~pos] = ez / (1.0 + ez)
    return make_op(y, (x,), lambda g: (g * y * (1.0 - y),))


_ACTIVATIONS = {"tanh": tanh, "relu": relu, "sigmoid": sigmoid}


def activation(x: Tensor, kind: str) -> Tensor:
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None
    return fn(x)


def softmax(x: Tensor, mask=None) -> Tensor:
    """Softmax over the last axis.  ``mask`` (bool, same shape) drops entries."""
    if x.ndim == 0 or x.shape[-1] == 0:
        raise DimensionError(f"softmax: empty input of shape {x.shape}")
    z = x.data
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        z = np.where(mask, z, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return make_op(y, (x,), bwd)


def log_softmax(x: Tensor) -> Tensor:
    if x.ndim == 0 or x.shape[-1] == 0:
        raise DimensionError(f"log_softmax: empty input of shape {x.shape}")
    z = x.data - x.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    y = z - lse
    p = np.exp(y)

    def bwd(g):
        return (g - p * g.sum(axis=-1, keepdims=True),)

    return make_op(y, (x,), bwd)


def cross_entropy(logits: Tensor, targets, weights=None) -> Tensor:
    """Summed (optionally weighted) negative log-likelihood of ``targets``.

    ``logits`` is [K, C]; returns a scalar.  K = 0 gives zero.
    """
    if logits.ndim != 2:
        raise DimensionError(f"cross_entropy: logits must be 2-d, got {logits.shape}")
    t = np.asarray(targets, dtype=np.int64)
    if t.shape != (logits.shape[0],):
        raise DimensionError(f"cross_entropy: {t.shape} targets for {logits.shape} logits")
    dt = logits.data.dtype
    w = np.ones(len(t), dtype=dt) if weights is None else np.asarray(weights, dtype=dt)
    rows = np.arange(len(t))
    z = logits.data - logits.data.max(axis=-1, keepdims=True) if len(t) else logits.data
    lse = np.log(np.exp(z).sum(axis=-1))
    logp = z[rows, t] - lse
    loss = np.array(-(w * logp).sum(), dtype=dt)

    def bwd(g):
        p = np.exp(z - lse[:, None])
        p[rows, t] -= 1.0
        return (g * w[:, None] * p,)

    return make_op(loss, (logits,), bwd)


def concat(xs: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not xs:
        raise DimensionError("concat: nothing to concatenate")
    ref = xs[0].shape
    ax = axis % len(ref) if ref else 0
    for x in xs[1:]:
        if x.ndim != len(ref) or any(
            d1 != d2 for i, (d1, d2) in enumerate(zip(ref, x.shape)) if i != ax
        ):
            raise DimensionError(f"concat: {ref} and {x.shape} disagree off axis {axis}")
    sizes = [x.shape[ax] for x in xs]
    cuts = np.cumsum(sizes)[:-1]
    data = np.concatenate([x.data for x in xs], axis=ax)
    return make_op(data, tuple(xs), lambda g: np.split(g, cuts, axis=ax))


def narrow(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    """Contiguous slice ``start:stop`` along ``axis``."""
    idx = [slice(None)] * x.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    shape = x.shape

    def bwd(g):
        full = np.zeros(shape, dtype=g.dtype)
        full[idx] = g
        return (full,)

    return make_op(x.data[idx], (x,), bwd)


def gather(x: Tensor, index) -> Tensor:
    """Rows of ``x`` at ``index`` (repeats allowed; gradients are summed)."""
    idx = np.asarray(index, dtype=np.int64)
    shape = x.shape

    def bwd(g):
        full = np.zeros(shape, dtype=g.dtype)
        np.add.at(full, idx, g)
        return (full,)

    return make_op(x.data[idx], (x,), bwd)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    old = x.shape
    try:
        data = x.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot view {old} as {tuple(shape)}") from None
    return make_op(data, (x,), lambda g: (g.reshape(old),))


def transpose(x: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    axes = tuple(reversed(range(x.ndim))) if axes is None else tuple(axes)
    inv = tuple(np.argsort(axes))
    return make_op(np.ascontiguousarray(x.data.transpose(axes)), (x,), lambda g: (g.transpose(inv),))


def total(x: Tensor) -> Tensor:
    """Sum of all entries, as a scalar."""
    shape = x.shape
    return make_op(np.array(x.data.sum(), dtype=x.dtype), (x,), lambda g: (np.full(shape, g, dtype=x.dtype),))


def max_pool(x: Tensor, valid) -> Tensor:
    """Max over axis 1 of a [T, S, F] tensor, using only the first ``valid[t]`` rows.

    Gradient goes to the first maximising position.
    """
    if x.ndim != 3:
        raise DimensionError(f"max_pool: expected [T, S, F], got {x.shape}")
    T, S, F = x.shape
    valid = np.asarray(valid, dtype=np.int64)
    if valid.shape != (T,) or (valid < 1).any() or (valid > S).any():
        raise DimensionError(f"max_pool: bad valid counts {valid} for {x.shape}")
    keep = np.arange(S)[None, :] < valid[:, None]
    z = np.where(keep[:, :, None], x.data, -np.inf)
    arg = z.argmax(axis=1)
    ti, fi = np.meshgrid(np.arange(T), np.arange(F), indexing="ij")
    y = x.data[ti, arg, fi]

    def bwd(g):
        full = np.zeros(x.shape, dtype=g.dtype)
        full[ti, arg, fi] = g
        return (full,)

    return make_op(y, (x,), bwd)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight.T + bias`` with ``weight`` stored [out, in]."""
    y = matmul(x, transpose(weight))
    return add_bias(y, bias) if bias is not None else y


# ---------------------------------------------------------------- checking


@dataclass
class GradCheckReport:
    errors: dict[str, float]  # parameter -> max relative error over checked entries
    eps: float
    loss: float = 0.0
    worst_entries: dict[str, tuple[float, float]] = field(default_factory=dict)  # (analytic, numeric)

    @property
    def noise_floor(self) -> float:
        """Resolution of a central difference of the loss (one ulp over 2 eps)."""
        return float(np.spacing(abs(self.loss))) / (2 * self.eps)

    @property
    def worst(self) -> tuple[str, float]:
        name = max(self.errors, key=self.errors.get)
        return name, self.errors[name]

    def failures(self, tol: float) -> dict[str, float]:
        return {k: v for k, v in self.errors.items() if not v < tol}

    def passed(self, tol: float) -> bool:
        return not self.failures(tol)


def relative_error(a, n) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)


def grad_check(
    f: Callable[[], Tensor],
    params: Mapping[str, Tensor] | Sequence[Tensor],
    eps: float = 1e-5,
    max_entries: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients of ``f()`` against central differences.

    ``f`` must rebuild its computation from the current parameter values on
    every call.  With ``max_entries`` a seeded subset of each parameter's
    entries is perturbed instead of all of them.
    """
    if not 0 < eps <= 1e-3:
        raise ValueError(f"eps must lie in (0, 1e-3], got {eps}")
    if not isinstance(params, Mapping):
        params = {(p.name or f"param{i}"): p for i, p in enumerate(params)}
    for name, p in params.items():
        if p.dtype != np.float64:
            raise GradientError(f"grad_check needs float64 parameters; {name} is {p.dtype}")
        p.zero_grad()

    with Graph() as g:
        loss = f()
    if not np.isfinite(loss.data).all():
        raise GradientError(f"loss is not finite at the evaluation point (parameters: {', '.join(params)})")
    g.backward(loss, params.values())

    rng = np.random.default_rng(seed)
    errors, worst = {}, {}
    for name, p in params.items():
        analytic = p.grad
        if not np.isfinite(analytic).all():
            raise GradientError(f"non-finite analytic gradient for {name}")
        flat = p.data.reshape(-1)
        entries = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            entries = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        numeric = np.empty(len(entries))
        with no_grad():
            for j, i in enumerate(entries):
                orig = flat[i]
                flat[i] = orig + eps
                fp = float(f().data)
                flat[i] = orig - eps
                fm = float(f().data)
                flat[i] = orig
                if not (np.isfinite(fp) and np.isfinite(fm)):
                    raise GradientError(f"non-finite loss while perturbing {name}")
                numeric[j] = (fp - fm) / (2 * eps)
        picked = analytic.reshape(-1)[entries]
        err = relative_error(picked, numeric)
        errors[name] = float(err.max()) if err.size else 0.0
        if err.size:
            j = int(err.argmax())
            worst[name] = (float(picked[j]), float(numeric[j]))
        p.zero_grad()
    return GradCheckReport(errors, eps, float(loss.data), worst)
