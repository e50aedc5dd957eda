"""Eager N-d tensors with reverse-mode automatic differentiation.

Storage is a numpy array (float32 or float64). Every primitive op records its
inputs and an adjoint closure on the output tensor; `backward` walks that
implicit tape in reverse topological order and accumulates gradients.

Design constraints honoured here:
  - no implicit broadcasting between two tensors; elementwise ops demand
    identical shapes and identical dtypes, and report both on mismatch
  - scalar constants enter the graph either through `scalar_mul` or as
    explicit constant leaves
  - adjoints never allocate more than a bounded working set; conv2d streams
    its im2col patches in row chunks instead of materialising them
"""

from __future__ import annotations

import itertools
import math

import numpy as np

_ALLOWED = (np.dtype(np.float32), np.dtype(np.float64))

# Patch-buffer budget for chunked conv2d, in elements (~32 MB of float64).
_CONV_CHUNK_ELEMS = 4_000_000


class TensorError(Exception):
    """Base class for tensor contract violations."""


class ShapeError(TensorError):
    pass


class DtypeError(TensorError):
    pass


_FINITE_CHECKS = False


def set_finite_checks(enabled: bool) -> None:
    """Toggle a debug assertion that every op output is finite.

    Meant for tests; the pipeline leaves it off.
    """
    global _FINITE_CHECKS
    _FINITE_CHECKS = bool(enabled)


_node_ids = itertools.count()


class Tensor:
    __slots__ = ("data", "requires_grad", "node_id", "grad", "_op", "_inputs", "_adjoint")

    def __init__(self, data, dtype=None, requires_grad=False):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype)
        elif arr.dtype not in _ALLOWED:
            arr = arr.astype(np.float32)
        if arr.dtype not in _ALLOWED:
            raise DtypeError(f"tensors are float32/float64 only, got {arr.dtype}")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.node_id = next(_node_ids)
        self.grad = None
        self._op = None          # op kind name, None for leaves
        self._inputs = ()        # parent tensors
        self._adjoint = None     # grad_out -> tuple of per-input grads (or None)

    # -- introspection ------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        grad = ", requires_grad" if self.requires_grad else ""
        op = f", op={self._op}" if self._op else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{grad}{op})"

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Tensor):
            return add(self, other)
        return add(self, _const_like(self, other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Tensor):
            return sub(self, other)
        return sub(self, _const_like(self, other))

    def __rsub__(self, other):
        return sub(_const_like(self, other), self)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scalar_mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scalar_mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def relu(self):
        return relu(self)

    def sum(self, axis=None):
        return tsum(self, axis)

    def mean(self, axis=None):
        return tmean(self, axis)

    def abs(self):
        return tabs(self)

    def square(self):
        return square(self)

    def sqrt(self):
        return tsqrt(self)

    def clamp(self, lo, hi):
        return clamp(self, lo, hi)

    def reshape(self, shape):
        return reshape(self, shape)

    def transpose(self, axes=None):
        return transpose(self, axes)


def tensor(data, dtype=None, requires_grad=False) -> Tensor:
    return Tensor(data, dtype=dtype, requires_grad=requires_grad)


def constant(data, dtype=None) -> Tensor:
    return Tensor(data, dtype=dtype, requires_grad=False)


def _const_like(t: Tensor, value) -> Tensor:
    return Tensor(np.full(t.data.shape, value, dtype=t.data.dtype))


# Primitive op kinds. Acceptance tests assert gradcheck coverage of this set.
OP_KINDS = frozenset({
    "add", "sub", "mul", "scalar_mul", "relu", "softmax_rows", "matmul",
    "conv2d", "bilinear_resample", "bilinear_warp", "concat", "sum", "mean",
    "abs", "square", "sqrt", "clamp", "powc", "reshape", "transpose", "slice",
})


def _make(op, data, inputs, adjoint) -> Tensor:
    if _FINITE_CHECKS and not np.isfinite(data).all():
        raise FloatingPointError(f"non-finite values out of op '{op}'")
    out = Tensor(data)
    if any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._op = op
        out._inputs = tuple(inputs)
        out._adjoint = adjoint
    return out


def _check_binary(op, a, b):
    if a.data.dtype != b.data.dtype:
        raise DtypeError(f"{op}: dtype mismatch {a.data.dtype} vs {b.data.dtype}")
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: shape mismatch {a.data.shape} vs {b.data.shape}")


# -- elementwise ops ---------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    _check_binary("add", a, b)
    return _make("add", a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_binary("sub", a, b)
    return _make("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_binary("mul", a, b)
    return _make("mul", a.data * b.data, (a, b),
                 lambda g: (g * b.data, g * a.data))


def scalar_mul(a: Tensor, s) -> Tensor:
    s = float(s)
    return _make("scalar_mul", a.data * a.data.dtype.type(s), (a,),
                 lambda g: (g * s,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _make("relu", np.where(mask, a.data, 0), (a,),
                 lambda g: (g * mask,))


def tabs(a: Tensor) -> Tensor:
    # subgradient 0 at x == 0
    sign = np.sign(a.data)
    return _make("abs", np.abs(a.data), (a,), lambda g: (g * sign,))


def square(a: Tensor) -> Tensor:
    return _make("square", a.data * a.data, (a,), lambda g: (g * (2.0 * a.data),))


def tsqrt(a: Tensor) -> Tensor:
    if np.any(a.data < 0):
        raise ValueError("sqrt: negative input")
    root = np.sqrt(a.data)
    def adjoint(g):
        # subgradient 0 where the root is 0
        return (np.where(root > 0, g / (2.0 * np.where(root > 0, root, 1.0)), 0.0),)
    return _make("sqrt", root, (a,), adjoint)


def clamp(a: Tensor, lo, hi) -> Tensor:
    lo = float(lo)
    hi = float(hi)
    if not lo <= hi:
        raise ValueError(f"clamp: lo {lo} > hi {hi}")
    mask = (a.data >= lo) & (a.data <= hi)
    return _make("clamp", np.clip(a.data, lo, hi), (a,), lambda g: (g * mask,))


def powc(a: Tensor, c) -> Tensor:
    """x ** c for a constant exponent; domain x >= 0."""
    c = float(c)
    if np.any(a.data < 0):
        raise ValueError("powc: negative base")
    out = np.power(a.data, c)
    def adjoint(g):
        base = np.where(a.data > 0, a.data, 1.0)
        d = np.where(a.data > 0, c * np.power(base, c - 1.0), 0.0)
        return (g * d,)
    return _make("powc", out, (a,), adjoint)


# -- structural ops ----------------------------------------------------------

def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    if -1 in shape:
        raise ShapeError("reshape: explicit extents only")
    if math.prod(shape) != a.data.size:
        raise ShapeError(f"reshape: cannot view {a.data.shape} as {shape}")
    old = a.data.shape
    return _make("reshape", a.data.reshape(shape), (a,),
                 lambda g: (g.reshape(old),))


def transpose(a: Tensor, axes=None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(a.data.ndim)))
    axes = tuple(axes)
    if sorted(axes) != list(range(a.data.ndim)):
        raise ShapeError(f"transpose: {axes} is not a permutation of {a.data.ndim} axes")
    inverse = np.argsort(axes)
    return _make("transpose", a.data.transpose(axes), (a,),
                 lambda g: (g.transpose(inverse),))


def slice_axis(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    if not -a.data.ndim <= axis < a.data.ndim:
        raise ShapeError(f"slice: axis {axis} out of range for ndim {a.data.ndim}")
    axis = axis % a.data.ndim
    n = a.data.shape[axis]
    if not (0 <= start <= stop <= n):
        raise ShapeError(f"slice: [{start}:{stop}] out of range for extent {n}")
    index = tuple(slice(None) if d != axis else slice(start, stop)
                  for d in range(a.data.ndim))
    def adjoint(g):
        full = np.zeros(a.data.shape, dtype=g.dtype)
        full[index] = g
        return (full,)
    return _make("slice", a.data[index], (a,), adjoint)


def concat(tensors, axis: int) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat: empty input list")
    first = tensors[0]
    for t in tensors[1:]:
        if t.data.dtype != first.data.dtype:
            raise DtypeError(f"concat: dtype mismatch {first.data.dtype} vs {t.data.dtype}")
        if t.data.ndim != first.data.ndim:
            raise ShapeError(f"concat: rank mismatch {first.data.shape} vs {t.data.shape}")
        for d in range(first.data.ndim):
            if d != axis % first.data.ndim and t.data.shape[d] != first.data.shape[d]:
                raise ShapeError(f"concat: shape mismatch {first.data.shape} vs "
                                 f"{t.data.shape} outside axis {axis}")
    axis = axis % first.data.ndim
    sizes = [t.data.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]
    def adjoint(g):
        return tuple(np.ascontiguousarray(piece)
                     for piece in np.split(g, bounds, axis=axis))
    return _make("concat", np.concatenate([t.data for t in tensors], axis=axis),
                 tensors, adjoint)


# -- reductions --------------------------------------------------------------

def _reduction_axes(a, axis):
    if axis is None:
        return tuple(range(a.data.ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(d % a.data.ndim for d in axis)


def tsum(a: Tensor, axis=None) -> Tensor:
    axes = _reduction_axes(a, axis)
    shape = a.data.shape
    def adjoint(g):
        expanded = np.expand_dims(g, axes) if axes else g
        return (np.broadcast_to(expanded, shape).copy(),)
    return _make("sum", a.data.sum(axis=axes if axis is not None else None),
                 (a,), adjoint)


def tmean(a: Tensor, axis=None) -> Tensor:
    axes = _reduction_axes(a, axis)
    shape = a.data.shape
    count = math.prod(shape[d] for d in axes) if shape else 1
    if count == 0:
        raise ShapeError("mean: reduction over zero elements")
    def adjoint(g):
        expanded = np.expand_dims(g, axes) if axes else g
        return (np.broadcast_to(expanded, shape) / count,)
    return _make("mean", a.data.mean(axis=axes if axis is not None else None),
                 (a,), adjoint)


# -- linear algebra ----------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.dtype != b.data.dtype:
        raise DtypeError(f"matmul: dtype mismatch {a.data.dtype} vs {b.data.dtype}")
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul: 2-d operands required, got {a.data.shape} @ {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: inner extents differ, {a.data.shape} @ {b.data.shape}")
    return _make("matmul", a.data @ b.data, (a, b),
                 lambda g: (g @ b.data.T, a.data.T @ g))


def softmax_rows(a: Tensor) -> Tensor:
    """Row-wise softmax of a 2-d tensor, max-shifted for stability."""
    if a.data.ndim != 2:
        raise ShapeError(f"softmax_rows: 2-d input required, got {a.data.shape}")
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)
    def adjoint(g):
        dot = (g * y).sum(axis=1, keepdims=True)
        return (y * (g - dot),)
    return _make("softmax_rows", y, (a,), adjoint)


# -- convolution -------------------------------------------------------------

def _conv_geometry(extent, k, stride, pad):
    if pad == "same":
        if k % 2 == 0:
            raise ShapeError("conv2d: 'same' padding needs odd kernel extents")
        p = (k - 1) // 2
    else:
        p = int(pad)
        if p < 0:
            raise ShapeError(f"conv2d: negative padding {p}")
    out = (extent + 2 * p - k) // stride + 1
    if out < 1:
        raise ShapeError(f"conv2d: kernel {k} with pad {p} exceeds input extent {extent}")
    return out, p


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None,
           stride: int = 1, pad="same") -> Tensor:
    """2-d cross-correlation over an HWC image.

    x: (H, W, Cin); w: (kh, kw, Cin, Cout); b: (Cout,) or None.
    'same' padding keeps ceil(extent / stride) output extents for odd kernels.
    """
    if x.data.ndim != 3 or w.data.ndim != 4:
        raise ShapeError(f"conv2d: expected image (H,W,C) and kernel (kh,kw,Cin,Cout), "
                         f"got {x.data.shape} and {w.data.shape}")
    if x.data.dtype != w.data.dtype:
        raise DtypeError(f"conv2d: dtype mismatch {x.data.dtype} vs {w.data.dtype}")
    kh, kw, cin, cout = w.data.shape
    H, W, cx = x.data.shape
    if cx != cin:
        raise ShapeError(f"conv2d: input has {cx} channels, kernel expects {cin}")
    if b is not None:
        if b.data.shape != (cout,):
            raise ShapeError(f"conv2d: bias shape {b.data.shape}, expected ({cout},)")
        if b.data.dtype != x.data.dtype:
            raise DtypeError(f"conv2d: bias dtype {b.data.dtype} vs {x.data.dtype}")
    stride = int(stride)
    if stride < 1:
        raise ShapeError(f"conv2d: stride {stride} < 1")

    H2, ph = _conv_geometry(H, kh, stride, pad)
    W2, pw = _conv_geometry(W, kw, stride, pad)
    K = cin * kh * kw

    padded = np.pad(x.data, ((ph, ph), (pw, pw), (0, 0)))
    # (H', W', Cin, kh, kw) strided view; rows materialise chunk by chunk
    windows = np.lib.stride_tricks.sliding_window_view(
        padded, (kh, kw), axis=(0, 1))[::stride, ::stride]
    wmat = w.data.transpose(2, 0, 1, 3).reshape(K, cout)

    rows_per_chunk = max(1, _CONV_CHUNK_ELEMS // max(1, W2 * K))
    out = np.empty((H2, W2, cout), dtype=x.data.dtype)
    for r0 in range(0, H2, rows_per_chunk):
        r1 = min(r0 + rows_per_chunk, H2)
        patch = windows[r0:r1].reshape((r1 - r0) * W2, K)
        out[r0:r1] = (patch @ wmat).reshape(r1 - r0, W2, cout)
    if b is not None:
        out += b.data

    inputs = (x, w) if b is None else (x, w, b)

    def adjoint(g):
        need_x = x.requires_grad
        need_w = w.requires_grad
        gw = np.zeros((K, cout), dtype=g.dtype) if need_w else None
        gxp = np.zeros(padded.shape, dtype=g.dtype) if need_x else None
        for r0 in range(0, H2, rows_per_chunk):
            r1 = min(r0 + rows_per_chunk, H2)
            gflat = g[r0:r1].reshape((r1 - r0) * W2, cout)
            if need_w:
                patch = windows[r0:r1].reshape((r1 - r0) * W2, K)
                gw += patch.T @ gflat
            if need_x:
                gpatch = (gflat @ wmat.T).reshape(r1 - r0, W2, cin, kh, kw)
                # for a fixed kernel offset the scatter targets are disjoint
                for u in range(kh):
                    for v in range(kw):
                        gxp[r0 * stride + u:(r1 - 1) * stride + u + 1:stride,
                            v:(W2 - 1) * stride + v + 1:stride] += gpatch[:, :, :, u, v]
        grads = [None, None]
        if need_x:
            grads[0] = gxp[ph:ph + H, pw:pw + W]
        if need_w:
            grads[1] = gw.reshape(cin, kh, kw, cout).transpose(1, 2, 0, 3)
        if b is not None:
            grads.append(g.sum(axis=(0, 1)) if b.requires_grad else None)
        return tuple(grads)

    return _make("conv2d", out, inputs, adjoint)


# -- resampling --------------------------------------------------------------

def _lerp_coords(n_in, n_out, dtype):
    # half-pixel-centre mapping, clamped at the borders
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = (src - lo).astype(dtype)
    return lo, hi, frac


def _lerp_axis_forward(arr, n_out, axis):
    n_in = arr.shape[axis]
    if n_in == n_out:
        return arr, None
    lo, hi, frac = _lerp_coords(n_in, n_out, arr.dtype)
    moved = np.moveaxis(arr, axis, 0)
    shape = (n_out,) + (1,) * (moved.ndim - 1)
    w = frac.reshape(shape)
    # x[lo] + w*(x[hi]-x[lo]) keeps constants exact
    out = moved[lo] + w * (moved[hi] - moved[lo])
    return np.moveaxis(out, 0, axis), (lo, hi, frac)


def _lerp_axis_adjoint(g, n_in, axis, coords):
    if coords is None:
        return g
    lo, hi, frac = coords
    gm = np.moveaxis(g, axis, 0)
    shape = (gm.shape[0],) + (1,) * (gm.ndim - 1)
    w = frac.reshape(shape)
    out = np.zeros((n_in,) + gm.shape[1:], dtype=g.dtype)
    np.add.at(out, lo, gm * (1.0 - w))
    np.add.at(out, hi, gm * w)
    return np.moveaxis(out, 0, axis)


def bilinear_resample(x: Tensor, out_hw) -> Tensor:
    """Separable bilinear resize of the leading two axes of (H, W) or (H, W, C)."""
    if x.data.ndim not in (2, 3):
        raise ShapeError(f"bilinear_resample: 2-d or 3-d input required, got {x.data.shape}")
    h2, w2 = int(out_hw[0]), int(out_hw[1])
    if h2 < 1 or w2 < 1:
        raise ShapeError(f"bilinear_resample: bad target size {(h2, w2)}")
    H, W = x.data.shape[:2]
    mid, rows = _lerp_axis_forward(x.data, h2, 0)
    out, cols = _lerp_axis_forward(mid, w2, 1)
    def adjoint(g):
        gm = _lerp_axis_adjoint(g, W, 1, cols)
        return (_lerp_axis_adjoint(gm, H, 0, rows),)
    return _make("bilinear_resample", out, (x,), adjoint)


def bilinear_warp(x: Tensor, flow: np.ndarray) -> Tensor:
    """Sample x at (i + flow[...,1], j + flow[...,0]) with bilinear weights.

    The flow field is a constant; gradients propagate to x only. Out-of-range
    sample positions clamp to the border (see `warp_valid_mask` for the
    in-bounds mask the temporal loss uses).
    """
    if x.data.ndim != 3:
        raise ShapeError(f"bilinear_warp: image (H,W,C) required, got {x.data.shape}")
    if isinstance(flow, Tensor):
        flow = flow.data
    flow = np.asarray(flow, dtype=x.data.dtype)
    H, W, _ = x.data.shape
    if flow.shape != (H, W, 2):
        raise ShapeError(f"bilinear_warp: flow shape {flow.shape}, expected {(H, W, 2)}")
    jj, ii = np.meshgrid(np.arange(W), np.arange(H))
    sy = np.clip(ii + flow[:, :, 1], 0.0, H - 1.0)
    sx = np.clip(jj + flow[:, :, 0], 0.0, W - 1.0)
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    y1 = np.minimum(y0 + 1, H - 1)
    x1 = np.minimum(x0 + 1, W - 1)
    wy = (sy - y0).astype(x.data.dtype)[..., None]
    wx = (sx - x0).astype(x.data.dtype)[..., None]
    d = x.data
    out = ((1 - wy) * (1 - wx) * d[y0, x0] + (1 - wy) * wx * d[y0, x1]
           + wy * (1 - wx) * d[y1, x0] + wy * wx * d[y1, x1])
    def adjoint(g):
        gx = np.zeros_like(d)
        np.add.at(gx, (y0, x0), g * (1 - wy) * (1 - wx))
        np.add.at(gx, (y0, x1), g * (1 - wy) * wx)
        np.add.at(gx, (y1, x0), g * wy * (1 - wx))
        np.add.at(gx, (y1, x1), g * wy * wx)
        return (gx,)
    return _make("bilinear_warp", out, (x,), adjoint)


def warp_valid_mask(flow: np.ndarray, hw) -> np.ndarray:
    """Boolean mask of pixels whose warp source lies inside the frame."""
    H, W = hw
    if isinstance(flow, Tensor):
        flow = flow.data
    flow = np.asarray(flow)
    jj, ii = np.meshgrid(np.arange(W), np.arange(H))
    sy = ii + flow[:, :, 1]
    sx = jj + flow[:, :, 0]
    return (sy >= 0) & (sy <= H - 1) & (sx >= 0) & (sx <= W - 1)


# -- tape and backward -------------------------------------------------------

def tape(root: Tensor) -> list[Tensor]:
    """Topologically ordered list of the graph under `root` (inputs first)."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node.node_id in seen:
            continue
        seen.add(node.node_id)
        stack.append((node, True))
        for parent in node._inputs:
            if parent.node_id not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> dict[int, Tensor]:
    """Reverse-mode sweep from a scalar loss.

    Returns {node_id: gradient tensor} for every requires_grad node reached,
    and stores the gradient on `.grad` of requires_grad leaves (overwriting
    any previous value).
    """
    if loss.data.ndim != 0:
        raise ShapeError(f"backward: loss must be a scalar, got shape {loss.data.shape}")
    if not loss.requires_grad:
        raise TensorError("backward: loss does not depend on any requires_grad tensor")
    order = tape(loss)
    partial: dict[int, np.ndarray] = {loss.node_id: np.ones((), dtype=loss.data.dtype)}
    for node in reversed(order):
        g = partial.get(node.node_id)
        if g is None or node._adjoint is None:
            continue
        contributions = node._adjoint(g)
        for parent, contrib in zip(node._inputs, contributions):
            if contrib is None or not parent.requires_grad:
                continue
            if parent.node_id in partial:
                partial[parent.node_id] = partial[parent.node_id] + contrib
            else:
                partial[parent.node_id] = contrib
    grads: dict[int, Tensor] = {}
    for node in order:
        if node.requires_grad and node.node_id in partial:
            gt = Tensor(partial[node.node_id])
            grads[node.node_id] = gt
            if node._op is None:
                node.grad = gt
    return grads


def finite_difference_check(f, x: Tensor, eps: float = 1e-6,
                            max_coords: int | None = None, seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    f maps a tensor to a scalar tensor. Checks every coordinate of x, or a
    seeded sample of `max_coords` of them for large tensors. The error at a
    coordinate is |analytic - numeric| / max(1, |analytic|).
    """
    if eps <= 0:
        raise ValueError(f"finite_difference_check: eps must be positive, got {eps}")
    probe = Tensor(x.data.astype(np.float64), requires_grad=True)
    out = f(probe)
    if out.data.ndim != 0:
        raise ShapeError("finite_difference_check: f must return a scalar")
    grads = backward(out)
    analytic = grads[probe.node_id].data if probe.node_id in grads else np.zeros_like(probe.data)

    coords = np.arange(probe.data.size)
    if max_coords is not None and max_coords < coords.size:
        rng = np.random.default_rng(seed)
        coords = rng.choice(coords.size, size=max_coords, replace=False)

    flat = probe.data.reshape(-1)
    worst = 0.0
    for c in coords:
        saved = flat[c]
        flat[c] = saved + eps
        hi = f(Tensor(flat.reshape(probe.data.shape))).item()
        flat[c] = saved - eps
        lo = f(Tensor(flat.reshape(probe.data.shape))).item()
        flat[c] = saved
        numeric = (hi - lo) / (2 * eps)
        a = float(analytic.reshape(-1)[c])
        err = abs(a - numeric) / max(1.0, abs(a))
        if err > worst:
            worst = err
    return worst
