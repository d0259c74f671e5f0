"""Differentiable operations.

Each op computes its value with numpy in the dtype of its inputs and, when a
tape is active and an input is tracked, records a closure mapping the
upstream gradient to one gradient per input (None for untracked inputs).
"""

from collections.abc import Sequence
from typing import Literal

import numpy as np

from jafar.core import kernels
from jafar.core.tensor import Array, Tensor, record
from jafar.models.error_model import (
    DivisionByZero,
    InvalidTargetSize,
    NonFiniteInput,
    ShapeMismatch,
)

ElementwiseKind = Literal["add", "sub", "mul", "div"]


def elementwise(a: Tensor, b: Tensor | float, kind: ElementwiseKind) -> Tensor:
    if isinstance(b, Tensor):
        if a.shape != b.shape:
            raise ShapeMismatch(f"{kind}: shapes {a.shape} and {b.shape} differ")

        bv: Array | float = b.data

    else:
        bv = float(b)

    if kind == "div" and np.any(np.asarray(bv) == 0):
        raise DivisionByZero("div: divisor contains zeros")

    av: Array = a.data

    if kind == "add":
        out = av + bv
    elif kind == "sub":
        out = av - bv
    elif kind == "mul":
        out = av * bv
    else:
        out = av / bv

    out = np.asarray(out, dtype=av.dtype)
    inputs: list[Tensor] = [a, b] if isinstance(b, Tensor) else [a]

    def backward(g: Array) -> list[Array]:
        if kind == "add":
            grads = [g, g]
        elif kind == "sub":
            grads = [g, -g]
        elif kind == "mul":
            grads = [g * bv, g * av]
        else:
            grads = [g / bv, -g * av / np.square(bv)]

        return grads[: len(inputs)]

    return record(kind, inputs, out, backward)


def add(a: Tensor, b: Tensor | float) -> Tensor:
    return elementwise(a, b, "add")


def mul(a: Tensor, b: Tensor | float) -> Tensor:
    return elementwise(a, b, "mul")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: cannot multiply {a.shape} by {b.shape}")

    av, bv = a.data, b.data

    def backward(g: Array) -> tuple[Array, Array]:
        return g @ bv.T, av.T @ g

    return record("matmul", [a, b], av @ bv, backward)


def softmax_rows(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeMismatch(f"softmax_rows expects a matrix, got {a.shape}")

    if not np.all(np.isfinite(a.data)):
        raise NonFiniteInput("softmax_rows: input contains NaN or Inf")

    shifted: Array = a.data - a.data.max(axis=1, keepdims=True)
    e: Array = np.exp(shifted)
    y: Array = e / e.sum(axis=1, keepdims=True)

    def backward(g: Array) -> tuple[Array]:
        return (y * (g - (g * y).sum(axis=1, keepdims=True)),)

    return record("softmax_rows", [a], y, backward)


def conv2d(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    if (
        x.ndim != 3
        or w.ndim != 4
        or w.shape[2:] != (3, 3)
        or w.shape[1] != x.shape[0]
        or b.shape != (w.shape[0],)
    ):
        raise ShapeMismatch(
            f"conv2d: input {x.shape}, weight {w.shape}, bias {b.shape}"
        )

    c_in, h, width = x.shape
    c_out: int = w.shape[0]
    out, cols = kernels.conv3x3(x.data, w.data, b.data)
    wmat: Array = w.data.reshape(c_out, -1)

    def backward(g: Array) -> tuple[Array, Array, Array]:
        g2: Array = g.reshape(c_out, h * width)
        gw: Array = (g2 @ cols.T).reshape(w.shape)
        gx: Array = kernels.col2im3x3(wmat.T @ g2, c_in, h, width)

        return gx, gw, g2.sum(axis=1)

    return record("conv2d", [x, w, b], out, backward)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    if w.ndim != 2 or x.shape[-1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ShapeMismatch(
            f"linear: input {x.shape}, weight {w.shape}, bias {b.shape}"
        )

    d_in, d_out = w.shape
    lead: tuple[int, ...] = x.shape[:-1]
    x2: Array = x.data.reshape(-1, d_in)
    out: Array = (x2 @ w.data + b.data).reshape(*lead, d_out)

    def backward(g: Array) -> tuple[Array, Array, Array]:
        g2: Array = g.reshape(-1, d_out)
        gx: Array = (g2 @ w.data.T).reshape(x.shape)

        return gx, x2.T @ g2, g2.sum(axis=0)

    return record("linear", [x, w, b], out, backward)


def activation(x: Tensor) -> Tensor:
    """SiLU, x * sigmoid(x)."""
    sig: Array = kernels.sigmoid(x.data)
    out: Array = x.data * sig

    def backward(g: Array) -> tuple[Array]:
        return (g * sig * (1.0 + x.data * (1.0 - sig)),)

    return record("silu", [x], out, backward)


def adaptive_resample2d(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Adaptive average windows for any output size (windows repeat when upsizing)."""
    if x.ndim != 3:
        raise ShapeMismatch(f"adaptive pooling expects (C, H, W), got {x.shape}")

    if out_h < 1 or out_w < 1:
        raise InvalidTargetSize(f"target size {out_h}x{out_w} must be positive")

    _, h, w = x.shape

    if (out_h, out_w) == (h, w):
        return reshape(x, x.shape)

    rows: Array = kernels.adaptive_matrix(h, out_h, x.dtype)
    cols: Array = kernels.adaptive_matrix(w, out_w, x.dtype)
    out: Array = kernels.separable_apply(x.data, rows, cols).astype(x.dtype)

    def backward(g: Array) -> tuple[Array]:
        return (kernels.separable_apply(g, rows.T, cols.T).astype(g.dtype),)

    return record("adaptive_pool", [x], out, backward)


def adaptive_avg_pool2d(x: Tensor, out_h: int, out_w: int) -> Tensor:
    if x.ndim != 3:
        raise ShapeMismatch(f"adaptive pooling expects (C, H, W), got {x.shape}")

    _, h, w = x.shape

    if not (1 <= out_h <= h and 1 <= out_w <= w):
        raise InvalidTargetSize(
            f"cannot pool {h}x{w} to {out_h}x{out_w}: target must lie in [1, input]"
        )

    return adaptive_resample2d(x, out_h, out_w)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    src: tuple[int, ...] = x.shape
    out: Array = x.data.reshape(tuple(shape))

    def backward(g: Array) -> tuple[Array]:
        return (g.reshape(src),)

    return record("reshape", [x], out, backward)


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    perm: tuple[int, ...] = tuple(axes)
    inverse: tuple[int, ...] = tuple(int(i) for i in np.argsort(perm))
    out: Array = np.ascontiguousarray(x.data.transpose(perm))

    def backward(g: Array) -> tuple[Array]:
        return (g.transpose(inverse),)

    return record("transpose", [x], out, backward)


def concat(xs: Sequence[Tensor], axis: int) -> Tensor:
    axis = axis % xs[0].ndim
    sizes: list[int] = [x.shape[axis] for x in xs]

    for x in xs[1:]:
        rest_a = x.shape[:axis] + x.shape[axis + 1 :]
        rest_b = xs[0].shape[:axis] + xs[0].shape[axis + 1 :]

        if x.ndim != xs[0].ndim or rest_a != rest_b:
            raise ShapeMismatch(f"concat: incompatible shapes {xs[0].shape}, {x.shape}")

    out: Array = np.concatenate([x.data for x in xs], axis=axis)
    splits: list[int] = list(np.cumsum(sizes)[:-1])

    def backward(g: Array) -> list[Array]:
        return list(np.split(g, splits, axis=axis))

    return record("concat", list(xs), out, backward)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    index: list[slice] = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    key = tuple(index)
    out: Array = np.ascontiguousarray(x.data[key])

    def backward(g: Array) -> tuple[Array]:
        full: Array = np.zeros_like(x.data)
        full[key] = g
        return (full,)

    return record("slice", [x], out, backward)


def take(x: Tensor, index: int) -> Tensor:
    """Select x[index] along the leading axis."""
    out: Array = np.ascontiguousarray(x.data[index])

    def backward(g: Array) -> tuple[Array]:
        full: Array = np.zeros_like(x.data)
        full[index] = g
        return (full,)

    return record("take", [x], out, backward)


def reduce_sum(x: Tensor, axis: int | None = None) -> Tensor:
    out: Array = np.asarray(x.data.sum(axis=axis), dtype=x.dtype)

    def backward(g: Array) -> tuple[Array]:
        if axis is None:
            return (np.broadcast_to(g, x.shape).copy(),)

        return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),)

    return record("sum", [x], out, backward)


def reduce_mean(x: Tensor, axis: int | None = None) -> Tensor:
    count: int = x.size if axis is None else x.shape[axis]
    return elementwise(reduce_sum(x, axis), 1.0 / count, "mul")


def sqrt(x: Tensor) -> Tensor:
    out: Array = np.sqrt(x.data)

    def backward(g: Array) -> tuple[Array]:
        return (g * 0.5 / out,)

    return record("sqrt", [x], out, backward)


def pair_rotate(x: Tensor, cos: Array, sin: Array) -> Tensor:
    """Rotate feature pairs (2t, 2t+1) on the last axis by the given angles.

    ``cos``/``sin`` broadcast against ``x[..., 0::2]``.
    """
    if x.shape[-1] % 2:
        raise ShapeMismatch(f"pair_rotate needs an even last axis, got {x.shape}")

    c: Array = cos.astype(x.dtype, copy=False)
    s: Array = sin.astype(x.dtype, copy=False)

    def rotate(v: Array, sign: float) -> Array:
        even, odd = v[..., 0::2], v[..., 1::2]
        out: Array = np.empty_like(v)
        out[..., 0::2] = even * c - sign * odd * s
        out[..., 1::2] = sign * even * s + odd * c
        return out

    def backward(g: Array) -> tuple[Array]:
        return (rotate(g, -1.0),)

    return record("pair_rotate", [x], rotate(x.data, 1.0), backward)
