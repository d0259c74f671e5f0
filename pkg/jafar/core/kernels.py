"""Raw numpy kernels shared by the differentiable ops and the frozen encoder."""

import math
from typing import Any, Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.typing import DTypeLike, NDArray

type Array = NDArray[np.floating[Any]]

ResizeMode = Literal["bilinear", "nearest"]


def im2col3x3(x: Array) -> Array:
    """(C, H, W) -> (C*9, H*W) patches for a 3x3 / stride 1 / pad 1 convolution."""
    c, h, w = x.shape
    padded: Array = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    windows = sliding_window_view(padded, (3, 3), axis=(1, 2))

    return np.ascontiguousarray(windows.transpose(0, 3, 4, 1, 2)).reshape(
        c * 9, h * w
    )


def col2im3x3(cols: Array, c: int, h: int, w: int) -> Array:
    blocks: Array = cols.reshape(c, 3, 3, h, w)
    padded: Array = np.zeros((c, h + 2, w + 2), dtype=cols.dtype)

    for ki in range(3):
        for kj in range(3):
            padded[:, ki : ki + h, kj : kj + w] += blocks[:, ki, kj]

    return padded[:, 1 : h + 1, 1 : w + 1]


def conv3x3(x: Array, weight: Array, bias: Array) -> tuple[Array, Array]:
    _, h, w = x.shape
    c_out: int = weight.shape[0]
    cols: Array = im2col3x3(x)
    out: Array = weight.reshape(c_out, -1) @ cols + bias[:, None]

    return out.reshape(c_out, h, w), cols


def silu(x: Array) -> Array:
    return x * sigmoid(x)


def sigmoid(x: Array) -> Array:
    return np.exp(-np.logaddexp(0.0, -x)).astype(x.dtype, copy=False)


def adaptive_bounds(in_size: int, out_size: int) -> list[tuple[int, int]]:
    """Window [floor(i*in/out), ceil((i+1)*in/out)) for each output index."""
    return [
        ((i * in_size) // out_size, -((-(i + 1) * in_size) // out_size))
        for i in range(out_size)
    ]


def adaptive_matrix(in_size: int, out_size: int, dtype: DTypeLike) -> Array:
    mat: Array = np.zeros((out_size, in_size), dtype=dtype)

    for i, (lo, hi) in enumerate(adaptive_bounds(in_size, out_size)):
        mat[i, lo:hi] = 1.0 / (hi - lo)

    return mat


def resize_matrix(
    in_size: int, out_size: int, mode: ResizeMode, dtype: DTypeLike
) -> Array:
    """Interpolation weights (out x in) under the half-pixel convention."""
    mat: Array = np.zeros((out_size, in_size), dtype=np.float64)
    scale: float = in_size / out_size

    for dst in range(out_size):
        if mode == "nearest":
            src_n: int = min(int(math.floor((dst + 0.5) * scale)), in_size - 1)
            mat[dst, src_n] = 1.0
            continue

        src: float = (dst + 0.5) * scale - 0.5
        src = min(max(src, 0.0), in_size - 1.0)
        lo: int = int(math.floor(src))
        hi: int = min(lo + 1, in_size - 1)
        frac: float = src - lo

        mat[dst, lo] += 1.0 - frac
        mat[dst, hi] += frac

    return mat.astype(dtype)


def separable_apply(x: Array, rows: Array, cols: Array) -> Array:
    """Apply (out_h x H) and (out_w x W) matrices to every channel of (C, H, W)."""
    return np.einsum("ih,chw,jw->cij", rows, x, cols, optimize=True)
