"""JAFAR forward pass.

guidance -> w_in -> E_theta -> I_E, then
    queries: q_enc(I_E) resampled to the output grid
    keys:    k_enc(I_E) pooled to the feature grid, combined with F_lr per
             ``key_strategy``
and the head-averaged attention kernel interpolates F_lr onto the query grid.

``forward_tensor`` is the taped path used for training. ``forward``,
``upsample_tiled`` and ``export_attention_row`` are the inference path and
evaluate the kernel one query row at a time (see ``KernelEngine``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from jafar.config.logging import log
from jafar.config.metrics import UPSAMPLE_LATENCY
from jafar.core import ops
from jafar.core.tensor import Array, Tensor, no_grad
from jafar.model.params import JafarParams
from jafar.models.error_model import IndexOutOfRange, InvalidTargetSize, ShapeMismatch
from jafar.models.feature_model import FeatureMap, Image
from jafar.nn.attention import (
    KernelEngine,
    attention_kernel,
    feature_tokens_t,
    kernel_apply,
)
from jafar.nn.sft import sft_modulate
from jafar.nn.tokens import from_tokens, to_tokens

E_THETA_BLOCKS: tuple[str, ...] = ("e_theta.0", "e_theta.1")


@dataclass(frozen=True, slots=True, eq=False)
class UpsampleRequest:
    guidance: Image
    f_lr: FeatureMap
    out_h: int
    out_w: int


@dataclass(slots=True)
class KernelMemoryMeter:
    """Records the floats of every engine workspace: kernel tile plus scratch."""

    peak_floats: int = 0
    allocations: int = 0

    def __call__(self, n_floats: int) -> None:
        self.allocations += 1
        self.peak_floats = max(self.peak_floats, n_floats)


def _check_request(p: JafarParams, req: UpsampleRequest) -> None:
    if req.out_h < 1 or req.out_w < 1:
        raise InvalidTargetSize(f"output grid {req.out_h}x{req.out_w} must be positive")

    if req.guidance.ndim != 3 or req.guidance.shape[0] != 3:
        raise ShapeMismatch(f"guidance must be (3, H, W), got {req.guidance.shape}")

    if req.f_lr.ndim != 3 or req.f_lr.shape[1] < 1 or req.f_lr.shape[2] < 1:
        raise ShapeMismatch(f"features must be (C, h, w), got {req.f_lr.shape}")

    if req.f_lr.shape[0] != p.c_in:
        raise ShapeMismatch(
            f"model expects {p.c_in} feature channels, got {req.f_lr.shape[0]}"
        )


def _block(p: JafarParams, name: str, x: Tensor) -> Tensor:
    return ops.activation(ops.conv2d(x, p[f"{name}.weight"], p[f"{name}.bias"]))


def encode_guidance(p: JafarParams, guidance: Tensor) -> Tensor:
    """I_E = E_theta(w_in(guidance)), shape (d, H, W)."""
    _, h, w = guidance.shape
    x: Tensor = ops.linear(to_tokens(guidance), p["w_in.weight"], p["w_in.bias"])
    x = from_tokens(x, h, w)

    for name in E_THETA_BLOCKS:
        x = _block(p, name, x)

    return x


def keys_for(p: JafarParams, i_e: Tensor, f_lr: Tensor) -> Tensor:
    _, h_k, w_k = f_lr.shape

    if p.key_strategy == "linear_projection":
        k: Tensor = ops.linear(to_tokens(f_lr), p["key_proj.weight"], p["key_proj.bias"])
        return from_tokens(k, h_k, w_k)

    k_tilde: Tensor = ops.adaptive_resample2d(_block(p, "k_enc", i_e), h_k, w_k)

    match p.key_strategy:
        case "sft":
            return sft_modulate(k_tilde, f_lr, p.sft)

        case "concat":
            mixed: Tensor = ops.concat([to_tokens(k_tilde), to_tokens(f_lr)], axis=1)
            k = ops.linear(mixed, p["key_mix.weight"], p["key_mix.bias"])
            return from_tokens(k, h_k, w_k)

        case _:
            return k_tilde


def queries_and_keys(
    p: JafarParams, req: UpsampleRequest
) -> tuple[Tensor, Tensor, Tensor]:
    """(Q, K, F_lr) tensors in the parameter dtype."""
    _check_request(p, req)

    guidance: Tensor = Tensor(req.guidance, dtype=p.dtype)
    f_lr: Tensor = Tensor(req.f_lr, dtype=p.dtype)

    i_e: Tensor = encode_guidance(p, guidance)
    q: Tensor = ops.adaptive_resample2d(_block(p, "q_enc", i_e), req.out_h, req.out_w)
    k: Tensor = keys_for(p, i_e, f_lr)

    return q, k, f_lr


def forward_tensor(p: JafarParams, req: UpsampleRequest) -> Tensor:
    """Differentiable forward; records on the active tape if there is one."""
    q, k, f_lr = queries_and_keys(p, req)
    kernel = attention_kernel(q, k, p.n_heads, p.rope, use_rope=p.use_rope)

    return kernel_apply(kernel, f_lr)


def build_engine(
    p: JafarParams, req: UpsampleRequest, meter: KernelMemoryMeter | None = None
) -> tuple[KernelEngine, Array]:
    with no_grad():
        q, k, f_lr = queries_and_keys(p, req)

    engine: KernelEngine = KernelEngine.build(
        q.data, k.data, p.n_heads, p.rope, use_rope=p.use_rope, on_alloc=meter
    )

    return engine, feature_tokens_t(f_lr.data)


def _to_grid(tokens: Array, out_h: int, out_w: int) -> FeatureMap:
    return np.ascontiguousarray(tokens.T.reshape(tokens.shape[1], out_h, out_w))


def forward(p: JafarParams, req: UpsampleRequest) -> FeatureMap:
    with UPSAMPLE_LATENCY.labels(mode="monolithic").time():
        engine, f_t = build_engine(p, req)
        out: Array = engine.apply(0, engine.n_queries, f_t)

    return _to_grid(out, req.out_h, req.out_w)


def upsample_tiled(
    p: JafarParams,
    req: UpsampleRequest,
    tile_rows: int,
    meter: KernelMemoryMeter | None = None,
) -> FeatureMap:
    """Forward evaluated ``tile_rows`` output rows at a time.

    Only one tile workspace exists at once: three (tile_rows * out_w, h_k * w_k)
    buffers plus a row vector and the (tile_rows * out_w, C) output block.
    """
    if tile_rows < 1:
        raise InvalidTargetSize(f"tile_rows must be >= 1, got {tile_rows}")

    with UPSAMPLE_LATENCY.labels(mode="tiled").time():
        engine, f_t = build_engine(p, req, meter)
        out: Array = np.empty((engine.n_queries, f_t.shape[0]), dtype=f_t.dtype)

        for row in range(0, req.out_h, tile_rows):
            start: int = row * req.out_w
            stop: int = min(row + tile_rows, req.out_h) * req.out_w
            out[start:stop] = engine.apply(start, stop, f_t)

    log.debug(
        f"upsample_tiled {req.f_lr.shape[1:]} → {req.out_h}x{req.out_w} "
        f"in tiles of {tile_rows} rows"
    )

    return _to_grid(out, req.out_h, req.out_w)


def attention_map(p: JafarParams, req: UpsampleRequest) -> Array:
    """The full (out_h * out_w, h_k * w_k) head-averaged kernel."""
    engine, _ = build_engine(p, req)
    return engine.rows(0, engine.n_queries)


def export_attention_row(
    p: JafarParams, req: UpsampleRequest, query_index: tuple[int, int]
) -> FeatureMap:
    i, j = query_index

    if not (0 <= i < req.out_h and 0 <= j < req.out_w):
        raise IndexOutOfRange(
            f"query ({i}, {j}) outside the {req.out_h}x{req.out_w} output grid"
        )

    engine, _ = build_engine(p, req)
    row_index: int = i * req.out_w + j
    h_k, w_k = engine.key_shape

    return engine.rows(row_index, row_index + 1).reshape(1, h_k, w_k)
