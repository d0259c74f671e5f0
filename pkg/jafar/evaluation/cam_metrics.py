"""Faithfulness and ADCC formulas for class activation maps.

Scores are supplied as (y, o) pairs: y is the class score on the full image,
o the score on the image masked by its own CAM.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from jafar.models.error_model import (
    ConstantMap,
    NonPositiveFullScore,
    ShapeMismatch,
    UndefinedHarmonicMean,
)
from jafar.models.feature_model import Image, SaliencyMap

ACTIVE_EPS = 1e-8
STD_EPS = 1e-8
GAIN_EPS = 1e-8


@dataclass(frozen=True, slots=True)
class ScorePair:
    y: float
    o: float


class GainScore(NamedTuple):
    percent: float
    skipped: int


def avg_drop(pairs: Sequence[ScorePair]) -> float:
    if not pairs:
        return 0.0

    for pair in pairs:
        if pair.y <= 0:
            raise NonPositiveFullScore(f"full-image score must be > 0, got {pair.y}")

    return 100.0 * float(np.mean([max(0.0, p.y - p.o) / p.y for p in pairs]))


def avg_increase(pairs: Sequence[ScorePair]) -> float:
    if not pairs:
        return 0.0

    return 100.0 * sum(p.o > p.y for p in pairs) / len(pairs)


def avg_gain(pairs: Sequence[ScorePair]) -> GainScore:
    """Pairs with 1 - y < 1e-8 have no headroom and are skipped."""
    terms: list[float] = [
        max(0.0, p.o - p.y) / (1.0 - p.y) for p in pairs if 1.0 - p.y >= GAIN_EPS
    ]
    skipped: int = len(pairs) - len(terms)

    if not terms:
        return GainScore(0.0, skipped)

    return GainScore(100.0 * float(np.mean(terms)), skipped)


def coherency(a: SaliencyMap, b: SaliencyMap) -> float:
    """Pearson correlation of two CAMs mapped to [0, 100]."""
    if a.shape != b.shape:
        raise ShapeMismatch(f"coherency: maps {a.shape} and {b.shape} differ")

    x = a.astype(np.float64).reshape(-1)
    y = b.astype(np.float64).reshape(-1)
    sx, sy = float(x.std()), float(y.std())

    if sx <= STD_EPS or sy <= STD_EPS:
        raise ConstantMap("coherency is undefined for a constant map")

    rho: float = float(np.mean((x - x.mean()) * (y - y.mean()))) / (sx * sy)
    rho = min(1.0, max(-1.0, rho))

    return 100.0 * (rho + 1.0) / 2.0


def complexity(a: SaliencyMap) -> float:
    """Share of active pixels, as a percentage."""
    if a.size == 0:
        return 0.0

    return 100.0 * float(np.mean(a > ACTIVE_EPS))


def adcc(coh: float, cplx: float, ad: float) -> float:
    terms: tuple[float, ...] = (coh / 100.0, 1.0 - cplx / 100.0, 1.0 - ad / 100.0)

    if any(t <= 0.0 for t in terms):
        raise UndefinedHarmonicMean(
            f"ADCC undefined for coherency={coh}, complexity={cplx}, avg_drop={ad}"
        )

    return 100.0 * 3.0 / sum(1.0 / t for t in terms)


def mask_by_saliency(img: Image, cam: SaliencyMap) -> Image:
    if img.ndim != 3 or cam.shape != img.shape[1:]:
        raise ShapeMismatch(f"mask_by_saliency: image {img.shape} vs CAM {cam.shape}")

    return img * (cam > 0)[None].astype(img.dtype)
