"""Multi-head attention kernels used as interpolation weights.

Two evaluation paths share the same definition:

* ``attention_kernel`` / ``kernel_apply`` build the kernel with taped ops
  (BLAS matmuls) and are what training differentiates through;
* ``KernelEngine`` evaluates the same kernel for inference with reductions
  that only ever touch one query row, so any tiling of the query rows
  reproduces the monolithic result bit for bit.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from jafar.core import ops
from jafar.core.tensor import Array, Tensor
from jafar.models.error_model import IndivisibleHeads, ShapeMismatch
from jafar.nn.rope import RopeConfig, grid_positions, rope_apply
from jafar.nn.tokens import from_tokens, to_tokens


@dataclass(frozen=True, slots=True)
class AttentionKernel:
    a: Tensor
    heads_used: int
    query_shape: tuple[int, int]
    key_shape: tuple[int, int]


def head_dim_for(d: int, n_heads: int) -> int:
    if n_heads < 1 or d % n_heads:
        raise IndivisibleHeads(f"embedding dim {d} not divisible by {n_heads} heads")

    return d // n_heads


def split_heads(x: Tensor, n_heads: int) -> Tensor:
    """(d, h, w) -> (n_heads, h*w, head_dim)."""
    d, h, w = x.shape
    head_dim: int = head_dim_for(d, n_heads)
    tokens: Tensor = ops.reshape(to_tokens(x), (h * w, n_heads, head_dim))

    return ops.transpose(tokens, (1, 0, 2))


def attention_kernel(
    q: Tensor,
    k: Tensor,
    n_heads: int,
    cfg: RopeConfig,
    use_rope: bool = True,
) -> AttentionKernel:
    if q.ndim != 3 or k.ndim != 3 or q.shape[0] != k.shape[0]:
        raise ShapeMismatch(f"attention_kernel: queries {q.shape} vs keys {k.shape}")

    d, h_q, w_q = q.shape
    _, h_k, w_k = k.shape
    head_dim: int = head_dim_for(d, n_heads)

    qh: Tensor = split_heads(q, n_heads)
    kh: Tensor = split_heads(k, n_heads)

    if use_rope:
        cfg.validate()
        qh = rope_apply(qh, grid_positions(h_q, w_q), cfg)
        kh = rope_apply(kh, grid_positions(h_k, w_k), cfg)

    scale: float = 1.0 / math.sqrt(head_dim)
    acc: Tensor | None = None

    for head in range(n_heads):
        logits: Tensor = ops.matmul(
            ops.take(qh, head), ops.transpose(ops.take(kh, head), (1, 0))
        )
        probs: Tensor = ops.softmax_rows(logits * scale)
        acc = probs if acc is None else acc + probs

    assert acc is not None

    return AttentionKernel(
        a=acc * (1.0 / n_heads),
        heads_used=n_heads,
        query_shape=(h_q, w_q),
        key_shape=(h_k, w_k),
    )


def kernel_apply(kernel: AttentionKernel, f_lr: Tensor) -> Tensor:
    """F_hat = A . F_lr, reshaped to the query grid; no value projection."""
    h_k, w_k = kernel.key_shape

    if f_lr.ndim != 3 or kernel.a.shape[1] != f_lr.shape[1] * f_lr.shape[2]:
        raise ShapeMismatch(
            f"kernel_apply: kernel has {kernel.a.shape[1]} columns, "
            f"features {f_lr.shape} have {f_lr.shape[1:]} locations"
        )

    h_q, w_q = kernel.query_shape
    out: Tensor = ops.matmul(kernel.a, to_tokens(f_lr))

    return from_tokens(out, h_q, w_q)


type AllocationHook = Callable[[int], None]


class KernelEngine:
    """Row-local inference evaluation of the head-averaged kernel.

    Holds rotated per-head queries (n_heads, Nq, head_dim) and keys
    (n_heads, Nk, head_dim) as plain arrays.
    """

    def __init__(
        self,
        q_heads: Array,
        k_heads: Array,
        query_shape: tuple[int, int],
        key_shape: tuple[int, int],
        on_alloc: AllocationHook | None = None,
    ) -> None:
        self.q_heads = q_heads
        self.k_heads = k_heads
        self.query_shape = query_shape
        self.key_shape = key_shape
        self.n_heads: int = q_heads.shape[0]
        self.scale = q_heads.dtype.type(1.0 / math.sqrt(q_heads.shape[2]))
        self._on_alloc = on_alloc

    @classmethod
    def build(
        cls,
        q: Array,
        k: Array,
        n_heads: int,
        cfg: RopeConfig,
        use_rope: bool = True,
        on_alloc: AllocationHook | None = None,
    ) -> KernelEngine:
        qh: Tensor = split_heads(Tensor(q, dtype=q.dtype), n_heads)
        kh: Tensor = split_heads(Tensor(k, dtype=k.dtype), n_heads)

        if use_rope:
            cfg.validate()
            qh = rope_apply(qh, grid_positions(q.shape[1], q.shape[2]), cfg)
            kh = rope_apply(kh, grid_positions(k.shape[1], k.shape[2]), cfg)

        return cls(
            qh.data,
            kh.data,
            (q.shape[1], q.shape[2]),
            (k.shape[1], k.shape[2]),
            on_alloc=on_alloc,
        )

    @property
    def n_queries(self) -> int:
        return self.q_heads.shape[1]

    def _workspace(self, n_rows: int, n_channels: int = 0) -> dict[str, Array]:
        """Every array one evaluation of ``n_rows`` kernel rows writes into."""
        n_keys: int = self.k_heads.shape[1]
        dtype = self.q_heads.dtype
        buffers: dict[str, Array] = {
            "acc": np.zeros((n_rows, n_keys), dtype=dtype),
            "logits": np.empty((n_rows, n_keys), dtype=dtype),
            "term": np.empty((n_rows, n_keys), dtype=dtype),
            "row": np.empty((n_rows, 1), dtype=dtype),
        }

        if n_channels:
            buffers["out"] = np.empty((n_rows, n_channels), dtype=dtype)

        if self._on_alloc is not None:
            self._on_alloc(sum(b.size for b in buffers.values()))

        return buffers

    def _kernel_into(self, start: int, stop: int, ws: dict[str, Array]) -> Array:
        acc, logits, term, row = ws["acc"], ws["logits"], ws["term"], ws["row"]

        for head in range(self.n_heads):
            q: Array = self.q_heads[head, start:stop]
            k: Array = self.k_heads[head]
            logits.fill(0)

            # one head-dim column at a time keeps the transient at rows x Nk
            for t in range(q.shape[1]):
                np.multiply(q[:, t, None], k[None, :, t], out=term)
                logits += term

            logits *= self.scale
            np.max(logits, axis=1, keepdims=True, out=row)
            logits -= row
            np.exp(logits, out=logits)
            np.sum(logits, axis=1, keepdims=True, out=row)
            logits /= row
            acc += logits

        acc *= acc.dtype.type(1.0 / self.n_heads)

        return acc

    def rows(self, start: int, stop: int) -> Array:
        """Kernel rows [start, stop) as a (stop - start, Nk) array."""
        return self._kernel_into(start, stop, self._workspace(stop - start))

    def apply(self, start: int, stop: int, f_tokens_t: Array) -> Array:
        """Interpolated features for query rows [start, stop) as (rows, C).

        ``f_tokens_t`` is the (C, Nk) transposed token matrix of F_lr.
        """
        ws: dict[str, Array] = self._workspace(stop - start, f_tokens_t.shape[0])
        a: Array = self._kernel_into(start, stop, ws)
        term, out = ws["term"], ws["out"]

        for c in range(f_tokens_t.shape[0]):
            np.multiply(a, f_tokens_t[c], out=term)
            np.sum(term, axis=1, out=out[:, c])

        return out


def feature_tokens_t(f_lr: NDArray[Any]) -> Array:
    c = f_lr.shape[0]
    return np.ascontiguousarray(f_lr.reshape(c, -1))
