"""Dense float64 tensors with a tape-based reverse mode.

Tensors are rank 1 or rank 2 (scalars are shape ``(1,)``). Every operation
goes through :func:`apply_primitive`, which checks shapes, computes the
forward value and, when a :class:`Graph` is recording and some input needs a
gradient, appends the result to the graph's node list. Because nodes are
appended as they are produced, the list is topologically ordered and the
backward pass is a single reverse sweep.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import ContractError, DimensionError

_ACTIVE: list["Graph"] = []


class Tensor:
    __slots__ = ("data", "grad", "parents", "backward_fn", "requires_grad", "name", "op")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.ndim not in (1, 2):
            raise DimensionError(f"tensor rank must be 1 or 2, got shape {arr.shape}")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.parents: tuple[Tensor, ...] = ()
        self.backward_fn: Callable | None = None
        self.requires_grad = requires_grad
        self.name = name
        self.op: str | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"

    # operator sugar; everything routes through apply_primitive
    def __add__(self, other: "Tensor") -> "Tensor":
        return apply_primitive("add", [self, other])

    def __sub__(self, other: "Tensor") -> "Tensor":
        return apply_primitive("sub", [self, other])

    def __mul__(self, other: "Tensor") -> "Tensor":
        return apply_primitive("mul", [self, other])

    def __matmul__(self, other: "Tensor") -> "Tensor":
        if other.data.ndim == 1:
            return apply_primitive("matvec", [self, other])
        return apply_primitive("matmul", [self, other])


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


@dataclass
class Graph:
    """Recording tape. Use as a context manager around the forward pass."""

    nodes: list[Tensor] = field(default_factory=list)
    recording: bool = True

    def __enter__(self) -> "Graph":
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.remove(self)


def active_graph() -> Graph | None:
    return _ACTIVE[-1] if _ACTIVE else None


@dataclass(frozen=True)
class Primitive:
    name: str
    # (inputs data, attrs) -> None, raises DimensionError
    check: Callable
    # (inputs data, attrs) -> (output array, saved context)
    forward: Callable
    # (grad_out, inputs data, output array, saved, attrs) -> list of grads (None allowed)
    backward: Callable


PRIMITIVES: dict[str, Primitive] = {}


def primitive(name: str, check: Callable):
    def register(fwd_bwd):
        fwd, bwd = fwd_bwd()
        PRIMITIVES[name] = Primitive(name, check, fwd, bwd)
        return fwd_bwd

    return register


def apply_primitive(op: str, inputs: Sequence[Tensor], **attrs) -> Tensor:
    try:
        prim = PRIMITIVES[op]
    except KeyError:
        raise ContractError(f"unknown primitive {op!r}") from None
    arrays = [t.data for t in inputs]
    prim.check(op, arrays, attrs)
    out_data, saved = prim.forward(arrays, attrs)
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.grad = None
    out.name = None
    out.op = op
    out.parents = ()
    out.backward_fn = None
    out.requires_grad = False
    graph = active_graph()
    if graph is not None and graph.recording and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.parents = tuple(inputs)

        def run_backward(grad_out, arrays=arrays, out_data=out_data, saved=saved):
            return prim.backward(grad_out, arrays, out_data, saved, attrs)

        out.backward_fn = run_backward
        graph.nodes.append(out)
    return out


class OuterGrad:
    """A rank-1 gradient ``a bᵀ`` left unmaterialized.

    Weight gradients of matrix-vector products are outer products. When the
    weight is a parameter leaf used at many time steps, stacking the factors
    and doing one matmul is far cheaper than summing outers one at a time.
    """

    __slots__ = ("a", "b")

    def __init__(self, a: np.ndarray, b: np.ndarray):
        self.a = a
        self.b = b

    def materialize(self) -> np.ndarray:
        return np.outer(self.a, self.b)


def backward(graph: Graph, loss: Tensor) -> dict[int, np.ndarray]:
    """Reverse sweep over ``graph``; accumulates into leaf ``.grad`` slots.

    Only leaves created with ``requires_grad=True`` (parameters) receive
    gradients; intermediate gradients live in the returned map keyed by
    ``id(node)``.
    """
    if loss.data.shape != (1,):
        raise ContractError(f"loss must be a scalar node, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones(1)}
    pending: dict[int, tuple[Tensor, list, list]] = {}
    for node in reversed(graph.nodes):
        g = grads.pop(id(node), None)
        if g is None or node.backward_fn is None:
            continue
        in_grads = node.backward_fn(g)
        for parent, pg in zip(node.parents, in_grads):
            if pg is None or not parent.requires_grad:
                continue
            if isinstance(pg, OuterGrad):
                if parent.backward_fn is None:
                    entry = pending.setdefault(id(parent), (parent, [], []))
                    entry[1].append(pg.a)
                    entry[2].append(pg.b)
                    continue
                pg = pg.materialize()
            if parent.backward_fn is None:
                # parameter leaf
                if parent.grad is None:
                    parent.grad = np.array(pg, dtype=np.float64)
                else:
                    parent.grad += pg
            else:
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
    for parent, left, right in pending.values():
        total = np.stack(left, axis=1) @ np.stack(right)
        if parent.grad is None:
            parent.grad = total
        else:
            parent.grad += total
    return grads


# --------------------------------------------------------------------------
# shape checks

def _fail(op, arrays, why=""):
    shapes = ", ".join(str(a.shape) for a in arrays)
    raise DimensionError(f"{op}: incompatible shapes [{shapes}]{' ' + why if why else ''}")


def _same_shape(op, arrays, attrs):
    if len(arrays) != 2 or arrays[0].shape != arrays[1].shape:
        _fail(op, arrays)


def _unary(op, arrays, attrs):
    if len(arrays) != 1:
        _fail(op, arrays, "expects one input")


def _vector(op, arrays, attrs):
    if len(arrays) != 1 or arrays[0].ndim != 1:
        _fail(op, arrays, "expects one vector")


# --------------------------------------------------------------------------
# primitive definitions

def _check_matvec(op, arrays, attrs):
    if len(arrays) != 2:
        _fail(op, arrays)
    w, x = arrays
    if w.ndim != 2 or x.ndim != 1 or w.shape[1] != x.shape[0]:
        _fail(op, arrays)


@primitive("matvec", _check_matvec)
def _matvec():
    def fwd(a, attrs):
        return a[0] @ a[1], None

    def bwd(g, a, out, saved, attrs):
        return [OuterGrad(g, a[1]), a[0].T @ g]

    return fwd, bwd


def _check_matvec_t(op, arrays, attrs):
    if len(arrays) != 2:
        _fail(op, arrays)
    w, x = arrays
    if w.ndim != 2 or x.ndim != 1 or w.shape[0] != x.shape[0]:
        _fail(op, arrays)


@primitive("matvec_t", _check_matvec_t)
def _matvec_t():
    """W^T x without materializing the transpose."""

    def fwd(a, attrs):
        return a[0].T @ a[1], None

    def bwd(g, a, out, saved, attrs):
        return [OuterGrad(a[1], g), a[0] @ g]

    return fwd, bwd


def _check_matmul(op, arrays, attrs):
    if len(arrays) != 2:
        _fail(op, arrays)
    a, b = arrays
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        _fail(op, arrays)


@primitive("matmul", _check_matmul)
def _matmul():
    def fwd(a, attrs):
        return a[0] @ a[1], None

    def bwd(g, a, out, saved, attrs):
        return [g @ a[1].T, a[0].T @ g]

    return fwd, bwd


def _check_outer(op, arrays, attrs):
    if len(arrays) != 2 or arrays[0].ndim != 1 or arrays[1].ndim != 1:
        _fail(op, arrays)


@primitive("outer", _check_outer)
def _outer():
    def fwd(a, attrs):
        return np.outer(a[0], a[1]), None

    def bwd(g, a, out, saved, attrs):
        return [g @ a[1], g.T @ a[0]]

    return fwd, bwd


def _check_dot(op, arrays, attrs):
    if len(arrays) != 2 or arrays[0].ndim != 1 or arrays[0].shape != arrays[1].shape:
        _fail(op, arrays)


@primitive("dot", _check_dot)
def _dot():
    def fwd(a, attrs):
        return np.array([a[0] @ a[1]]), None

    def bwd(g, a, out, saved, attrs):
        return [g[0] * a[1], g[0] * a[0]]

    return fwd, bwd


@primitive("add", _same_shape)
def _add():
    def fwd(a, attrs):
        return a[0] + a[1], None

    def bwd(g, a, out, saved, attrs):
        return [g, g]

    return fwd, bwd


@primitive("sub", _same_shape)
def _sub():
    def fwd(a, attrs):
        return a[0] - a[1], None

    def bwd(g, a, out, saved, attrs):
        return [g, -g]

    return fwd, bwd


@primitive("mul", _same_shape)
def _mul():
    def fwd(a, attrs):
        return a[0] * a[1], None

    def bwd(g, a, out, saved, attrs):
        return [g * a[1], g * a[0]]

    return fwd, bwd


@primitive("scale", _unary)
def _scale():
    def fwd(a, attrs):
        return a[0] * attrs["factor"], None

    def bwd(g, a, out, saved, attrs):
        return [g * attrs["factor"]]

    return fwd, bwd


def _check_concat(op, arrays, attrs):
    if not arrays or any(x.ndim != 1 for x in arrays):
        _fail(op, arrays, "expects one or more vectors")


@primitive("concat", _check_concat)
def _concat():
    def fwd(a, attrs):
        return np.concatenate(a), np.cumsum([x.shape[0] for x in a])[:-1]

    def bwd(g, a, out, saved, attrs):
        return np.split(g, saved)

    return fwd, bwd


def _check_slice(op, arrays, attrs):
    if len(arrays) != 1 or arrays[0].ndim != 1:
        _fail(op, arrays)
    start, stop = attrs["start"], attrs["stop"]
    if not 0 <= start < stop <= arrays[0].shape[0]:
        _fail(op, arrays, f"bad slice [{start}:{stop}]")


@primitive("slice", _check_slice)
def _slice():
    def fwd(a, attrs):
        return a[0][attrs["start"]:attrs["stop"]].copy(), None

    def bwd(g, a, out, saved, attrs):
        full = np.zeros_like(a[0])
        full[attrs["start"]:attrs["stop"]] = g
        return [full]

    return fwd, bwd


def _check_reshape(op, arrays, attrs):
    shape = tuple(attrs["shape"])
    if len(arrays) != 1 or len(shape) not in (1, 2) or int(np.prod(shape)) != arrays[0].size:
        _fail(op, arrays, f"cannot reshape to {shape}")


@primitive("reshape", _check_reshape)
def _reshape():
    def fwd(a, attrs):
        return a[0].reshape(attrs["shape"]).copy(), None

    def bwd(g, a, out, saved, attrs):
        return [g.reshape(a[0].shape)]

    return fwd, bwd


def _check_column(op, arrays, attrs):
    if len(arrays) != 1 or arrays[0].ndim != 2 or not 0 <= attrs["index"] < arrays[0].shape[1]:
        _fail(op, arrays, f"column {attrs.get('index')}")


@primitive("column", _check_column)
def _column():
    """W·e_j for a one-hot e_j, as a column read."""

    def fwd(a, attrs):
        return a[0][:, attrs["index"]].copy(), None

    def bwd(g, a, out, saved, attrs):
        full = np.zeros_like(a[0])
        full[:, attrs["index"]] = g
        return [full]

    return fwd, bwd


@primitive("sigmoid", _unary)
def _sigmoid():
    def fwd(a, attrs):
        x = a[0]
        # split by sign to avoid overflow in exp
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out, None

    def bwd(g, a, out, saved, attrs):
        return [g * out * (1.0 - out)]

    return fwd, bwd


@primitive("tanh", _unary)
def _tanh():
    def fwd(a, attrs):
        return np.tanh(a[0]), None

    def bwd(g, a, out, saved, attrs):
        return [g * (1.0 - out * out)]

    return fwd, bwd


def _softmax_array(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()


@primitive("softmax", _vector)
def _softmax():
    def fwd(a, attrs):
        return _softmax_array(a[0]), None

    def bwd(g, a, out, saved, attrs):
        return [out * (g - g @ out)]

    return fwd, bwd


@primitive("diag", _vector)
def _diag():
    def fwd(a, attrs):
        return np.diag(a[0]), None

    def bwd(g, a, out, saved, attrs):
        return [np.diagonal(g).copy()]

    return fwd, bwd


def _check_mean(op, arrays, attrs):
    if not arrays or any(x.shape != arrays[0].shape for x in arrays):
        _fail(op, arrays, "mean needs a non-empty set of equal shapes")


@primitive("mean", _check_mean)
def _mean():
    def fwd(a, attrs):
        return np.sum(a, axis=0) / len(a), None

    def bwd(g, a, out, saved, attrs):
        share = g / len(a)
        return [share] * len(a)

    return fwd, bwd


@primitive("sum", _unary)
def _sum():
    def fwd(a, attrs):
        return np.array([a[0].sum()]), None

    def bwd(g, a, out, saved, attrs):
        return [np.full_like(a[0], g[0])]

    return fwd, bwd


def _check_xent(op, arrays, attrs):
    if len(arrays) != 1 or arrays[0].ndim != 1 or not 0 <= attrs["target"] < arrays[0].shape[0]:
        _fail(op, arrays, f"target {attrs.get('target')}")


@primitive("cross_entropy", _check_xent)
def _cross_entropy():
    """-log softmax(logits)[target]."""

    def fwd(a, attrs):
        x = a[0]
        m = x.max()
        logz = m + np.log(np.exp(x - m).sum())
        p = np.exp(x - logz)
        return np.array([logz - x[attrs["target"]]]), p

    def bwd(g, a, out, p, attrs):
        grad = p.copy()
        grad[attrs["target"]] -= 1.0
        return [g[0] * grad]

    return fwd, bwd


def _check_lstm(op, arrays, attrs):
    if len(arrays) != 11:
        _fail(op, arrays, "expects x, h, c, 4 weights, 4 biases")
    x, h, c = arrays[:3]
    hidden = h.shape[0] if h.ndim == 1 else -1
    ok = x.ndim == 1 and h.ndim == 1 and c.shape == h.shape
    for w in arrays[3:7]:
        ok = ok and w.shape == (hidden, x.shape[0] + hidden)
    for b in arrays[7:]:
        ok = ok and b.shape == (hidden,)
    if not ok:
        _fail(op, arrays)


@primitive("lstm_cell", _check_lstm)
def _lstm_cell():
    """Fused LSTM step; output is ``[h; c]`` (length 2H).

    i = σ(W_i[x;h] + b_i), f = σ(W_f[x;h] + b_f), o = σ(W_o[x;h] + b_o),
    g = tanh(W_g[x;h] + b_g), c' = f⊙c + i⊙g, h' = o⊙tanh(c').
    """

    def sig(z):
        return 0.5 * (np.tanh(0.5 * z) + 1.0)

    def fwd(a, attrs):
        x, h, c, wi, wf, wo, wg, bi, bf, bo, bg = a
        xh = np.concatenate([x, h])
        i = sig(wi @ xh + bi)
        f = sig(wf @ xh + bf)
        o = sig(wo @ xh + bo)
        g = np.tanh(wg @ xh + bg)
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        return np.concatenate([h_new, c_new]), (xh, i, f, o, g, tc)

    def bwd(grad, a, out, saved, attrs):
        x, h, c, wi, wf, wo, wg = a[:7]
        xh, i, f, o, g, tc = saved
        n = h.shape[0]
        dh, dc = grad[:n], grad[n:]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c
        dc_prev = dc * f
        zi = di * i * (1.0 - i)
        zf = df * f * (1.0 - f)
        zo = do * o * (1.0 - o)
        zg = dg * (1.0 - g * g)
        dxh = wi.T @ zi + wf.T @ zf + wo.T @ zo + wg.T @ zg
        nx = x.shape[0]
        return [
            dxh[:nx], dxh[nx:], dc_prev,
            OuterGrad(zi, xh), OuterGrad(zf, xh), OuterGrad(zo, xh), OuterGrad(zg, xh),
            zi, zf, zo, zg,
        ]

    return fwd, bwd


# --------------------------------------------------------------------------
# functional helpers

def matvec(w: Tensor, x: Tensor) -> Tensor:
    return apply_primitive("matvec", [w, x])


def matvec_t(w: Tensor, x: Tensor) -> Tensor:
    return apply_primitive("matvec_t", [w, x])


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive("matmul", [a, b])


def outer(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive("outer", [a, b])


def dot(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive("dot", [a, b])


def add(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive("add", [a, b])


def sub(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive("sub", [a, b])


def mul(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive("mul", [a, b])


def scale(a: Tensor, factor: float) -> Tensor:
    return apply_primitive("scale", [a], factor=float(factor))


def concat(parts: Sequence[Tensor]) -> Tensor:
    return apply_primitive("concat", list(parts))


def slice_(a: Tensor, start: int, stop: int) -> Tensor:
    return apply_primitive("slice", [a], start=start, stop=stop)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    return apply_primitive("reshape", [a], shape=tuple(shape))


def vec(a: Tensor) -> Tensor:
    return reshape(a, (a.data.size,))


def column(w: Tensor, index: int) -> Tensor:
    return apply_primitive("column", [w], index=int(index))


def sigmoid(a: Tensor) -> Tensor:
    return apply_primitive("sigmoid", [a])


def tanh(a: Tensor) -> Tensor:
    return apply_primitive("tanh", [a])


def softmax(a: Tensor) -> Tensor:
    return apply_primitive("softmax", [a])


def diag(a: Tensor) -> Tensor:
    return apply_primitive("diag", [a])


def mean(parts: Sequence[Tensor]) -> Tensor:
    return apply_primitive("mean", list(parts))


def sum_(a: Tensor) -> Tensor:
    return apply_primitive("sum", [a])


def cross_entropy(logits: Tensor, target: int) -> Tensor:
    return apply_primitive("cross_entropy", [logits], target=int(target))


def lstm_cell(x, h, c, weights, biases) -> Tensor:
    return apply_primitive("lstm_cell", [x, h, c, *weights, *biases])
