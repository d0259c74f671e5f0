import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from jafar.core.rng import Rng


def test_same_seed_same_stream():
    a, b = Rng(123), Rng(123)

    np.testing.assert_array_equal(a.uniform(50), b.uniform(50))
    np.testing.assert_array_equal(a.normal((4, 5)), b.normal((4, 5)))
    assert a.integers(0, 10) == b.integers(0, 10)


def test_vector_draw_equals_sequential_draws():
    """Drawing n values at once consumes the stream like n single draws."""
    batched = Rng(5).uniform(10)
    single = Rng(5)

    np.testing.assert_array_equal(batched, [single.uniform_scalar() for _ in range(10)])


@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_uniform_lies_in_unit_interval(seed):
    u = Rng(seed).uniform(256)

    assert u.min() >= 0.0
    assert u.max() < 1.0


def test_normal_moments():
    z = Rng(9).normal(20_000, dtype=np.float64)

    assert abs(z.mean()) < 0.05
    assert abs(z.std() - 1.0) < 0.05


@given(st.integers(min_value=0, max_value=2**32), st.integers(-5, 5), st.integers(1, 9))
def test_integers_stay_in_half_open_range(seed, low, span):
    rng = Rng(seed)

    for _ in range(20):
        assert low <= rng.integers(low, low + span) < low + span


def test_spawned_streams_differ():
    base = Rng(1)
    first, second = base.spawn(1), base.spawn(2)

    assert not np.array_equal(first.uniform(8), second.uniform(8))
