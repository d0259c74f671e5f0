import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jafar.core.rng import Rng
from jafar.core.tensor import Tensor
from jafar.models.error_model import IndivisibleHeads, ShapeMismatch
from jafar.nn.attention import (
    AttentionKernel,
    KernelEngine,
    attention_kernel,
    kernel_apply,
)
from jafar.nn.rope import RopeConfig

D = 32


def features(rng: Rng, c: int, h: int, w: int) -> Tensor:
    return Tensor(rng.normal((c, h, w)))


def kernel_for(rng: Rng, n_heads: int, q_hw, k_hw) -> AttentionKernel:
    q = features(rng, D, *q_hw)
    k = features(rng, D, *k_hw)
    return attention_kernel(q, k, n_heads, RopeConfig(head_dim=D // n_heads))


def fixed_kernel(a: np.ndarray, q_hw, k_hw) -> AttentionKernel:
    return AttentionKernel(
        a=Tensor(a, dtype=np.float32), heads_used=1, query_shape=q_hw, key_shape=k_hw
    )


@given(
    st.integers(0, 2**32),
    st.sampled_from([1, 2, 4, 8]),
    st.tuples(st.integers(1, 6), st.integers(1, 6)),
    st.tuples(st.integers(1, 4), st.integers(1, 4)),
)
def test_kernel_is_row_stochastic(seed, n_heads, q_hw, k_hw):
    kernel = kernel_for(Rng(seed), n_heads, q_hw, k_hw)
    a = kernel.a.data

    assert a.shape == (q_hw[0] * q_hw[1], k_hw[0] * k_hw[1])
    assert kernel.heads_used == n_heads
    assert np.all(np.isfinite(a))
    assert np.all(a >= 0)
    np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-5)


def test_single_key_gives_all_ones_column():
    kernel = kernel_for(Rng(1), 4, (5, 3), (1, 1))
    np.testing.assert_array_equal(kernel.a.data, np.ones((15, 1)))


def test_single_head_matches_dense_reference():
    rng = Rng(2)
    q, k = features(rng, D, 3, 4), features(rng, D, 2, 2)
    kernel = attention_kernel(q, k, 1, RopeConfig(head_dim=D), use_rope=False)

    qt = q.data.reshape(D, -1).T.astype(np.float64)
    kt = k.data.reshape(D, -1).T.astype(np.float64)
    logits = qt @ kt.T / math.sqrt(D)
    e = np.exp(logits - logits.max(axis=1, keepdims=True))

    np.testing.assert_allclose(kernel.a.data, e / e.sum(axis=1, keepdims=True), atol=1e-6)


def test_identical_heads_average_to_single_head():
    rng = Rng(3)
    q_half, k_half = rng.normal((8, 3, 3)), rng.normal((8, 2, 2))
    cfg = RopeConfig(head_dim=8)

    single = attention_kernel(Tensor(q_half), Tensor(k_half), 1, cfg)
    doubled = attention_kernel(
        Tensor(np.concatenate([q_half, q_half])),
        Tensor(np.concatenate([k_half, k_half])),
        2,
        cfg,
    )

    np.testing.assert_allclose(doubled.a.data, single.a.data, rtol=0, atol=1e-7)


def test_indivisible_heads():
    rng = Rng(4)

    with pytest.raises(IndivisibleHeads):
        attention_kernel(features(rng, 12, 2, 2), features(rng, 12, 2, 2), 5, RopeConfig(4))


def test_identity_kernel_reproduces_features():
    f = Rng(5).normal((3, 2, 3))
    out = kernel_apply(fixed_kernel(np.eye(6), (2, 3), (2, 3)), Tensor(f))

    np.testing.assert_allclose(out.data, f, atol=1e-7)


def test_uniform_kernel_gives_spatial_mean():
    f = Rng(6).normal((4, 3, 3))
    out = kernel_apply(fixed_kernel(np.full((10, 9), 1 / 9), (2, 5), (3, 3)), Tensor(f))

    assert out.shape == (4, 2, 5)
    np.testing.assert_allclose(
        out.data, np.broadcast_to(f.mean(axis=(1, 2))[:, None, None], (4, 2, 5)), atol=1e-6
    )


@given(st.integers(0, 2**32), st.sampled_from([1, 2, 4]), st.integers(1, 8))
def test_output_stays_in_channel_convex_hull(seed, n_heads, out_size):
    rng = Rng(seed)
    kernel = kernel_for(rng, n_heads, (out_size, out_size), (3, 2))
    f = rng.normal((5, 3, 2))
    out = kernel_apply(kernel, Tensor(f)).data

    lo = f.min(axis=(1, 2))[:, None, None]
    hi = f.max(axis=(1, 2))[:, None, None]

    assert np.all(out >= lo - 1e-5)
    assert np.all(out <= hi + 1e-5)


def test_kernel_apply_rejects_wrong_key_count():
    kernel = kernel_for(Rng(7), 2, (2, 2), (2, 2))

    with pytest.raises(ShapeMismatch):
        kernel_apply(kernel, Tensor(np.ones((3, 3, 3))))


def test_engine_rows_agree_with_taped_kernel():
    rng = Rng(8)
    q, k = rng.normal((D, 4, 5)), rng.normal((D, 3, 3))
    cfg = RopeConfig(head_dim=D // 4)

    taped = attention_kernel(Tensor(q), Tensor(k), 4, cfg).a.data
    engine = KernelEngine.build(q, k, 4, cfg)

    np.testing.assert_allclose(engine.rows(0, engine.n_queries), taped, atol=1e-6)
    np.testing.assert_array_equal(engine.rows(7, 9), engine.rows(0, 20)[7:9])
