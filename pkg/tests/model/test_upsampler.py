import tracemalloc
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jafar.core.gradcheck import grad_check
from jafar.core.rng import Rng
from jafar.core.tensor import Tensor
from jafar.evaluation.gradcheck_suite import COMPOSITE_TOL, composite_case
from jafar.model import params as jafar_params
from jafar.model.upsampler import (
    KernelMemoryMeter,
    UpsampleRequest,
    attention_map,
    build_engine,
    export_attention_row,
    forward,
    forward_tensor,
    queries_and_keys,
    upsample_tiled,
)
from jafar.models.error_model import IndexOutOfRange, InvalidTargetSize, ShapeMismatch

C = 8


def features(seed: int, h: int, w: int, c: int = C) -> np.ndarray:
    return Rng(seed).normal((c, h, w))


def assert_convex(out: np.ndarray, f_lr: np.ndarray) -> None:
    lo = f_lr.min(axis=(1, 2))[:, None, None]
    hi = f_lr.max(axis=(1, 2))[:, None, None]

    assert np.all(out >= lo - 1e-5)
    assert np.all(out <= hi + 1e-5)


def test_output_shape_and_stochastic_kernel(small_params, guidance):
    req = UpsampleRequest(guidance, features(1, 4, 4), 16, 16)
    out = forward(small_params, req)
    a = attention_map(small_params, req)

    assert out.shape == (C, 16, 16)
    assert a.shape == (256, 16)
    np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-5)


def test_large_output_respects_convex_hull(small_params, guidance):
    f_lr = features(2, 8, 8)
    out = forward(small_params, UpsampleRequest(guidance, f_lr, 112, 112))

    assert out.shape == (C, 112, 112)
    assert np.all(np.isfinite(out))
    assert_convex(out, f_lr)


def test_constant_features_stay_constant(small_params, guidance):
    v = Rng(3).normal((C, 1, 1))
    f_lr = np.broadcast_to(v, (C, 4, 4)).copy()
    out = forward(small_params, UpsampleRequest(guidance, f_lr, 12, 12))

    np.testing.assert_allclose(out, np.broadcast_to(v, out.shape), atol=1e-5)


def test_taped_and_inference_paths_agree(small_params, guidance):
    req = UpsampleRequest(guidance, features(4, 4, 4), 8, 8)

    np.testing.assert_allclose(
        forward_tensor(small_params, req).data, forward(small_params, req), atol=1e-5
    )


@pytest.mark.parametrize("out_size", [2, 4, 8, 16, 28])
def test_resolution_agnostic_outputs(small_params, guidance, out_size):
    """One set of weights serves every output size from 1x to 14x."""
    f_lr = features(5, 2, 2)
    req = UpsampleRequest(guidance, f_lr, out_size, out_size)
    out = forward(small_params, req)
    a = attention_map(small_params, req)

    assert out.shape == (C, out_size, out_size)
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-5)
    assert_convex(out, f_lr)


def test_guidance_may_be_smaller_than_output(small_params):
    small_guidance = Rng(6).uniform((3, 8, 8)).astype(np.float32)
    out = forward(small_params, UpsampleRequest(small_guidance, features(6, 4, 4), 24, 24))

    assert out.shape == (C, 24, 24)


@pytest.mark.parametrize("tile_rows", [1, 7, 16, 40])
def test_tiling_is_bitwise_identical(small_params, guidance, tile_rows):
    req = UpsampleRequest(guidance, features(7, 4, 4), 16, 16)

    tiled = upsample_tiled(small_params, req, tile_rows)

    np.testing.assert_array_equal(tiled, forward(small_params, req))


@given(st.integers(1, 9), st.integers(3, 20))
def test_tile_memory_is_bounded(tile_rows, out_w):
    p = jafar_params.init(Rng(3), C, d=16, n_heads=2)
    guidance = Rng(1).uniform((3, 16, 16)).astype(np.float32)
    req = UpsampleRequest(guidance, features(8, 3, 2), 11, out_w)
    meter = KernelMemoryMeter()

    upsample_tiled(p, req, tile_rows, meter)

    rows = min(tile_rows, 11) * out_w
    assert meter.allocations == -(-11 // tile_rows)
    assert meter.peak_floats == 3 * rows * 6 + rows + rows * C


def test_meter_accounts_for_the_real_tile_peak(small_params, guidance):
    """Traced numpy allocations stay within what the meter reports."""
    req = UpsampleRequest(guidance, features(12, 16, 16), 64, 64)
    meter = KernelMemoryMeter()
    engine, f_t = build_engine(small_params, req, meter)
    itemsize = f_t.dtype.itemsize

    tracemalloc.start()
    try:
        tracemalloc.reset_peak()
        engine.apply(0, 2 * 64, f_t)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()

    assert meter.peak_floats == 3 * 128 * 256 + 128 + 128 * C
    assert peak <= meter.peak_floats * itemsize + 256 * 1024


def test_tile_rows_must_be_positive(small_params, guidance):
    with pytest.raises(InvalidTargetSize):
        upsample_tiled(small_params, UpsampleRequest(guidance, features(1, 4, 4), 8, 8), 0)


def test_attention_rows_sum_to_one(small_params, guidance):
    req = UpsampleRequest(guidance, features(9, 4, 4), 16, 16)
    rng = Rng(10)

    for _ in range(10):
        i, j = rng.integers(0, 16), rng.integers(0, 16)
        row = export_attention_row(small_params, req, (i, j))

        assert row.shape == (1, 4, 4)
        assert float(row.sum()) == pytest.approx(1.0, abs=1e-5)


def test_attention_row_matches_full_kernel(small_params, guidance):
    req = UpsampleRequest(guidance, features(11, 3, 5), 6, 7)
    full = attention_map(small_params, req)
    row = export_attention_row(small_params, req, (4, 2))

    np.testing.assert_array_equal(row.reshape(-1), full[4 * 7 + 2])


def test_single_key_attention_is_one(small_params, guidance):
    req = UpsampleRequest(guidance, features(12, 1, 1), 5, 5)
    np.testing.assert_array_equal(export_attention_row(small_params, req, (2, 3)), [[[1.0]]])


@pytest.mark.parametrize("query", [(-1, 0), (0, 8), (8, 0)])
def test_attention_row_index_out_of_range(small_params, guidance, query):
    req = UpsampleRequest(guidance, features(1, 4, 4), 8, 8)

    with pytest.raises(IndexOutOfRange):
        export_attention_row(small_params, req, query)


def test_identity_sft_equals_no_sft_bitwise(guidance):
    p = jafar_params.init(Rng(13), C, d=16, n_heads=2)
    tensors = dict(p.tensors)
    tensors["sft.gamma.weight"] = Tensor(np.zeros((C, 16), dtype=np.float32))
    tensors["sft.beta.weight"] = Tensor(np.zeros((C, 16), dtype=np.float32))
    identity_sft = p.with_tensors(tensors)
    no_sft = replace(
        p,
        tensors={k: v for k, v in tensors.items() if not k.startswith("sft.")},
        key_strategy="no_sft",
    )
    req = UpsampleRequest(guidance, features(14, 4, 4), 12, 12)

    np.testing.assert_array_equal(forward(identity_sft, req), forward(no_sft, req))


def test_channel_permutation_commutes_without_sft(guidance):
    p = jafar_params.init(Rng(15), C, d=16, n_heads=2, key_strategy="no_sft")
    f_lr = features(16, 4, 4)
    perm = np.array([3, 0, 7, 1, 6, 2, 5, 4])

    out = forward(p, UpsampleRequest(guidance, f_lr, 8, 8))
    permuted = forward(p, UpsampleRequest(guidance, f_lr[perm], 8, 8))

    np.testing.assert_allclose(permuted, out[perm], rtol=0, atol=1e-7)


@pytest.mark.parametrize("strategy", ["concat", "linear_projection", "no_sft"])
def test_every_key_strategy_runs(guidance, strategy):
    p = jafar_params.init(Rng(17), C, d=16, n_heads=4, key_strategy=strategy)
    req = UpsampleRequest(guidance, features(18, 4, 4), 8, 8)
    out = forward(p, req)

    assert out.shape == (C, 8, 8)
    np.testing.assert_allclose(attention_map(p, req).sum(axis=1), 1.0, atol=1e-5)


def test_linear_projection_keys_ignore_guidance(guidance):
    """Keys come from F_lr alone, so only the queries see the image."""
    p = jafar_params.init(Rng(19), C, d=16, n_heads=2, key_strategy="linear_projection")
    f_lr = features(20, 3, 3)
    other = Rng(21).uniform((3, 32, 32)).astype(np.float32)

    q_a, k_a, _ = queries_and_keys(p, UpsampleRequest(guidance, f_lr, 6, 6))
    q_b, k_b, _ = queries_and_keys(p, UpsampleRequest(other, f_lr, 6, 6))

    np.testing.assert_array_equal(k_a.data, k_b.data)
    assert not np.array_equal(q_a.data, q_b.data)


def test_mismatched_feature_channels(small_params, guidance):
    with pytest.raises(ShapeMismatch):
        forward(small_params, UpsampleRequest(guidance, features(1, 4, 4, c=5), 8, 8))


def test_rope_can_be_disabled(guidance):
    p = jafar_params.init(Rng(22), C, d=16, n_heads=2, use_rope=False)
    req = UpsampleRequest(guidance, features(23, 4, 4), 8, 8)

    np.testing.assert_allclose(attention_map(p, req).sum(axis=1), 1.0, atol=1e-5)


@pytest.mark.parametrize("size", [(0, 4), (4, 0)])
def test_empty_output_grid(small_params, guidance, size):
    with pytest.raises(InvalidTargetSize):
        forward(small_params, UpsampleRequest(guidance, features(1, 4, 4), *size))


def test_full_model_gradient_check():
    case = composite_case(Rng(24))
    report = grad_check(case.fn, case.inputs, tol=COMPOSITE_TOL)

    assert report.passed, report.errors
    assert set(report.errors) == set(case.inputs)
