from dataclasses import dataclass

import numpy as np

from jafar.core.tensor import Array
from jafar.models.error_model import ShapeMismatch
from jafar.models.feature_model import FeatureMap

COS_EPS = 1e-8


@dataclass(frozen=True, slots=True)
class ReconScore:
    mean_cos: float
    mean_l2: float


def location_scores(pred: FeatureMap, target: FeatureMap) -> tuple[Array, Array]:
    """Per-location cosine and Euclidean distance of the channel vectors."""
    if pred.shape != target.shape or pred.ndim != 3:
        raise ShapeMismatch(f"recon_score: prediction {pred.shape} vs target {target.shape}")

    c: int = pred.shape[0]
    p: Array = pred.reshape(c, -1).astype(np.float64)
    t: Array = target.reshape(c, -1).astype(np.float64)

    norms: Array = np.linalg.norm(p, axis=0) * np.linalg.norm(t, axis=0)
    cos: Array = (p * t).sum(axis=0) / (norms + COS_EPS)
    l2: Array = np.linalg.norm(p - t, axis=0)

    return cos, l2


def recon_score(pred: FeatureMap, target: FeatureMap) -> ReconScore:
    cos, l2 = location_scores(pred, target)
    return ReconScore(mean_cos=float(cos.mean()), mean_l2=float(l2.mean()))
