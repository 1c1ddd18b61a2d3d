"""Reverse-mode automatic differentiation over dense float64 tensors.

A Tensor wraps a numpy array and records the operations producing it on a
tape (the implicit graph of parent links).  Calling ``backward()`` on a
scalar Tensor walks the tape once in reverse topological order and
accumulates gradients into every node with ``requires_grad`` set.  Tensors
are treated as immutable once produced; a recorded graph serves exactly one
backward pass.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, DimensionError


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """Dense float64 array with an optional gradient tape."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph plumbing ----------------------------------------------------

    @staticmethod
    def _result(data, parents, backward):
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def backward(self):
        """Accumulate gradients of this scalar into every reachable leaf."""
        if self.data.size != 1:
            raise ContractError("backward() requires a scalar tensor")
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        for node in topo:
            node.grad = None
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _accumulate(self, grad):
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad = self.grad + grad

    # -- elementwise arithmetic ---------------------------------------------

    @staticmethod
    def _lift(x):
        return x if isinstance(x, Tensor) else Tensor(x)

    def __add__(self, other):
        other = Tensor._lift(other)
        a, b = self, other

        def backward(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g, b.shape))

        return Tensor._result(a.data + b.data, (a, b), backward)

    __radd__ = __add__

    def __neg__(self):
        a = self

        def backward(g):
            if a.requires_grad:
                a._accumulate(-g)

        return Tensor._result(-a.data, (a,), backward)

    def __sub__(self, other):
        return self + (-Tensor._lift(other))

    def __rsub__(self, other):
        return Tensor._lift(other) + (-self)

    def __mul__(self, other):
        other = Tensor._lift(other)
        a, b = self, other

        def backward(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g * b.data, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g * a.data, b.shape))

        return Tensor._result(a.data * b.data, (a, b), backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Tensor._lift(other)
        a, b = self, other

        def backward(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g / b.data, a.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

        return Tensor._result(a.data / b.data, (a, b), backward)

    def __pow__(self, exponent: float):
        a = self
        e = float(exponent)

        def backward(g):
            if a.requires_grad:
                a._accumulate(g * e * a.data ** (e - 1.0))

        return Tensor._result(a.data ** e, (a,), backward)

    def abs(self):
        a = self

        def backward(g):
            if a.requires_grad:
                a._accumulate(g * np.sign(a.data))

        return Tensor._result(np.abs(a.data), (a,), backward)

    def sqrt(self):
        a = self
        out_data = np.sqrt(a.data)

        def backward(g):
            if a.requires_grad:
                a._accumulate(g * 0.5 / out_data)

        return Tensor._result(out_data, (a,), backward)

    def sigmoid(self):
        a = self
        out_data = 1.0 / (1.0 + np.exp(-a.data))

        def backward(g):
            if a.requires_grad:
                a._accumulate(g * out_data * (1.0 - out_data))

        return Tensor._result(out_data, (a,), backward)

    # -- reductions and reshaping --------------------------------------------

    def sum(self, axis=None, keepdims=False):
        a = self

        def backward(g):
            if not a.requires_grad:
                return
            if axis is None:
                a._accumulate(np.broadcast_to(g, a.shape).copy())
                return
            gg = g
            if not keepdims:
                gg = np.expand_dims(gg, axis)
            a._accumulate(np.broadcast_to(gg, a.shape).copy())

        return Tensor._result(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward)

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            count = self.data.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            count = int(np.prod([self.data.shape[ax] for ax in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape):
        a = self
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])

        def backward(g):
            if a.requires_grad:
                a._accumulate(g.reshape(a.shape))

        return Tensor._result(a.data.reshape(shape), (a,), backward)

    def matmul(self, other):
        other = Tensor._lift(other)
        a, b = self, other

        def backward(g):
            ad, bd = a.data, b.data
            if a.requires_grad:
                if bd.ndim == 1 and ad.ndim == 2:
                    a._accumulate(np.outer(g, bd))
                elif ad.ndim == 1:
                    a._accumulate(g @ bd.T if bd.ndim == 2 else g * bd)
                else:
                    a._accumulate(g @ bd.T)
            if b.requires_grad:
                if ad.ndim == 1 and bd.ndim == 2:
                    b._accumulate(np.outer(ad, g))
                elif bd.ndim == 1:
                    b._accumulate(ad.T @ g if ad.ndim == 2 else g * ad)
                else:
                    b._accumulate(ad.T @ g)

        return Tensor._result(a.data @ b.data, (a, b), backward)

    __matmul__ = matmul


# -- neural-net operations ----------------------------------------------------


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    """Elementwise max(x, slope*x); the kink at 0 takes the positive branch."""
    if not 0.0 < slope < 1.0:
        raise ContractError(f"slope must be in (0,1), got {slope}")
    mask = np.where(x.data >= 0.0, 1.0, slope)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g * mask)

    return Tensor._result(x.data * mask, (x,), backward)


def _im2col(padded: np.ndarray, k: int, out_h: int, out_w: int) -> np.ndarray:
    """[Cin,Hp,Wp] -> [Cin*k*k, out_h*out_w] patch matrix."""
    cin = padded.shape[0]
    s0, s1, s2 = padded.strides
    windows = np.lib.stride_tricks.as_strided(
        padded,
        shape=(cin, k, k, out_h, out_w),
        strides=(s0, s1, s2, s1, s2),
        writeable=False,
    )
    return windows.reshape(cin * k * k, out_h * out_w)


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor, pad: int = 0) -> Tensor:
    """2-D cross-correlation of a [Cin,H,W] image with a [Cout,Cin,k,k] kernel."""
    if x.data.ndim != 3 or kernel.data.ndim != 4:
        raise DimensionError(
            f"conv2d expects input [Cin,H,W] and kernel [Cout,Cin,k,k], "
            f"got {x.shape} and {kernel.shape}"
        )
    cout, cin, k, k2 = kernel.shape
    if k != k2 or k % 2 == 0:
        raise DimensionError(f"kernel must be square with odd side, got {k}x{k2}")
    if x.shape[0] != cin:
        raise DimensionError(f"input has {x.shape[0]} channels, kernel expects {cin}")
    if bias.shape != (cout,):
        raise DimensionError(f"bias shape {bias.shape} != ({cout},)")
    if pad < 0:
        raise ContractError("pad must be non-negative")

    _, h, w = x.shape
    out_h = h + 2 * pad - k + 1
    out_w = w + 2 * pad - k + 1
    if out_h < 1 or out_w < 1:
        raise DimensionError(f"kernel {k}x{k} too large for padded input {h}x{w}")

    padded = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad)))
    cols = _im2col(padded, k, out_h, out_w)
    w_mat = kernel.data.reshape(cout, cin * k * k)
    out = (w_mat @ cols).reshape(cout, out_h, out_w) + bias.data[:, None, None]

    def backward(g):
        g_mat = g.reshape(cout, out_h * out_w)
        if kernel.requires_grad:
            kernel._accumulate((g_mat @ cols.T).reshape(kernel.shape))
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=(1, 2)))
        if x.requires_grad:
            dcols = (w_mat.T @ g_mat).reshape(cin, k, k, out_h, out_w)
            dpad = np.zeros_like(padded)
            for di in range(k):
                for dj in range(k):
                    dpad[:, di:di + out_h, dj:dj + out_w] += dcols[:, di, dj]
            if pad > 0:
                dpad = dpad[:, pad:-pad, pad:-pad]
            x._accumulate(dpad)

    return Tensor._result(out, (x, kernel, bias), backward)


def upsample2x(x: Tensor) -> Tensor:
    """Nearest-neighbor doubling of the spatial dims of a [C,H,W] tensor."""
    if x.data.ndim != 3:
        raise DimensionError(f"upsample2x expects [C,H,W], got {x.shape}")
    out = x.data.repeat(2, axis=1).repeat(2, axis=2)

    def backward(g):
        if x.requires_grad:
            c, h2, w2 = g.shape
            x._accumulate(g.reshape(c, h2 // 2, 2, w2 // 2, 2).sum(axis=(2, 4)))

    return Tensor._result(out, (x,), backward)


def downsample2x(x: Tensor) -> Tensor:
    """Keep every second row/column of a [C,H,W] tensor (stride-2 subsampling)."""
    if x.data.ndim != 3:
        raise DimensionError(f"downsample2x expects [C,H,W], got {x.shape}")

    def backward(g):
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[:, ::2, ::2] = g
            x._accumulate(full)

    return Tensor._result(x.data[:, ::2, ::2].copy(), (x,), backward)


def adain(x: Tensor, scale: Tensor, shift: Tensor, eps: float = 1e-8) -> Tensor:
    """Adaptive instance normalization over a [C,H,W] tensor.

    Each channel is normalized to zero mean / unit variance over its spatial
    extent, then modulated by the per-channel scale and shift.
    """
    if eps <= 0.0:
        raise ContractError("eps must be positive")
    if x.data.ndim != 3:
        raise DimensionError(f"adain expects [C,H,W], got {x.shape}")
    c = x.shape[0]
    if scale.shape != (c,) or shift.shape != (c,):
        raise DimensionError(
            f"scale/shift must be length-{c} vectors, got {scale.shape}, {shift.shape}"
        )
    mu = x.mean(axis=(1, 2), keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=(1, 2), keepdims=True)
    inv_std = (var + eps) ** -0.5
    return centered * inv_std * scale.reshape(c, 1, 1) + shift.reshape(c, 1, 1)


def grad_check(f, x: Tensor, h: float = 1e-5, max_coords: int = 64, rng=None,
               floor: float = 1e-4) -> float:
    """Max relative error between analytic and central-difference gradients.

    Coordinates are subsampled for large tensors.  The per-coordinate
    denominator is floored so near-zero gradient entries are compared
    absolutely rather than amplified.
    """
    if h <= 0.0:
        raise ContractError("h must be positive")
    x_var = Tensor(x.data.copy(), requires_grad=True)
    out = f(x_var)
    if out.data.size != 1:
        raise ContractError("grad_check requires a scalar-valued function")
    out.backward()
    analytic = x_var.grad.reshape(-1) if x_var.grad is not None else np.zeros(x.size)

    n = x.data.size
    if n <= max_coords:
        coords = np.arange(n)
    else:
        rng = rng or np.random.default_rng(0)
        coords = rng.choice(n, size=max_coords, replace=False)

    flat = x.data.reshape(-1)
    worst = 0.0
    for i in coords:
        probe = flat.copy()
        probe[i] += h
        fp = float(f(Tensor(probe.reshape(x.shape))).data)
        probe[i] -= 2.0 * h
        fm = float(f(Tensor(probe.reshape(x.shape))).data)
        numeric = (fp - fm) / (2.0 * h)
        a = analytic[i]
        err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
        worst = max(worst, err)
    return worst
