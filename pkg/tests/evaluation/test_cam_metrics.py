import numpy as np
import pytest

from jafar.core.rng import Rng
from jafar.evaluation.cam_metrics import (
    ScorePair,
    adcc,
    avg_drop,
    avg_gain,
    avg_increase,
    coherency,
    complexity,
    mask_by_saliency,
)
from jafar.models.error_model import (
    ConstantMap,
    NonPositiveFullScore,
    ShapeMismatch,
    UndefinedHarmonicMean,
)


def test_avg_drop_clamps_increases_to_zero():
    pairs = [ScorePair(1.0, 0.5), ScorePair(2.0, 2.0), ScorePair(1.0, 3.0)]
    assert avg_drop(pairs) == pytest.approx(100.0 * 0.5 / 3)


def test_avg_drop_two_pairs():
    assert avg_drop([ScorePair(1.0, 0.5), ScorePair(2.0, 2.0)]) == pytest.approx(25.0)


def test_avg_drop_rejects_non_positive_full_score():
    with pytest.raises(NonPositiveFullScore):
        avg_drop([ScorePair(0.0, 0.5)])


def test_avg_increase_counts_strict_improvements():
    pairs = [ScorePair(0.5, 0.6), ScorePair(0.5, 0.5), ScorePair(0.5, 0.1), ScorePair(0.2, 0.9)]
    assert avg_increase(pairs) == pytest.approx(50.0)


def test_avg_gain_uses_remaining_headroom():
    gain = avg_gain([ScorePair(0.5, 0.75), ScorePair(0.5, 0.25)])

    assert gain.percent == pytest.approx(25.0)
    assert gain.skipped == 0


def test_avg_gain_skips_saturated_scores():
    gain = avg_gain([ScorePair(1.0, 1.0), ScorePair(0.6, 0.8)])

    assert gain.percent == pytest.approx(50.0)
    assert gain.skipped == 1


def test_unchanged_scores_give_zero_everywhere():
    pairs = [ScorePair(y, y) for y in (0.1, 0.4, 0.9)]

    assert avg_drop(pairs) == 0.0
    assert avg_increase(pairs) == 0.0
    assert avg_gain(pairs).percent == 0.0


def test_empty_pair_lists():
    assert avg_drop([]) == 0.0
    assert avg_increase([]) == 0.0
    assert avg_gain([]) == (0.0, 0)


def test_coherency_extremes():
    a = Rng(0).uniform((8, 8))

    assert coherency(a, a) == pytest.approx(100.0)
    assert coherency(a, 1.0 - a) == pytest.approx(0.0, abs=1e-9)
    assert coherency(a, 3.0 * a + 1.0) == pytest.approx(100.0)


@pytest.mark.parametrize("seed", range(20))
def test_coherency_of_unrelated_maps_is_near_midpoint(seed):
    rng = Rng(seed)
    value = coherency(rng.uniform((16, 16)), rng.uniform((16, 16)))

    assert 30.0 <= value <= 70.0


def test_coherency_is_symmetric():
    rng = Rng(5)
    a, b = rng.uniform((6, 6)), rng.uniform((6, 6))

    assert coherency(a, b) == pytest.approx(coherency(b, a))


def test_coherency_of_constant_map():
    with pytest.raises(ConstantMap):
        coherency(np.full((4, 4), 0.3), Rng(1).uniform((4, 4)))


def test_coherency_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        coherency(np.zeros((4, 4)), np.zeros((4, 5)))


def test_complexity_is_the_active_share():
    cam = np.zeros((4, 4))
    cam[:2, :2] = 0.7

    assert complexity(cam) == pytest.approx(25.0)
    assert complexity(np.zeros((3, 3))) == 0.0
    assert complexity(np.ones((3, 3))) == 100.0


def test_adcc_harmonic_mean():
    assert adcc(91.4, 44.1, 17.4) == pytest.approx(73.28, abs=0.01)
    assert adcc(100.0, 0.0, 0.0) == pytest.approx(100.0)


@pytest.mark.parametrize(
    ("coh", "cplx", "ad"), [(0.0, 10.0, 10.0), (50.0, 100.0, 10.0), (50.0, 10.0, 100.0)]
)
def test_adcc_undefined_when_a_term_vanishes(coh, cplx, ad):
    with pytest.raises(UndefinedHarmonicMean):
        adcc(coh, cplx, ad)


def test_mask_keeps_only_salient_pixels():
    img = Rng(2).uniform((3, 4, 4))
    cam = (np.indices((4, 4)).sum(axis=0) % 2).astype(np.float64)

    masked = mask_by_saliency(img, cam)

    np.testing.assert_array_equal(masked[:, cam > 0], img[:, cam > 0])
    np.testing.assert_array_equal(masked[:, cam == 0], 0.0)


def test_mask_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        mask_by_saliency(np.zeros((3, 4, 4)), np.zeros((4, 3)))
