import numpy as np

from jafar.core import ops
from jafar.core.tensor import Array, Tensor, as_tensor
from jafar.models.error_model import ShapeMismatch
from jafar.nn.tokens import to_tokens

COS_EPS = 1e-8
# keeps d/dx sqrt finite when a channel vector is exactly zero
NORM_EPS = 1e-16


def _norm(x: Tensor) -> Tensor:
    return ops.sqrt(ops.reduce_sum(x * x, axis=1) + NORM_EPS)


def loss_cos_l2(pred: Tensor | Array, target: Tensor | Array) -> Tensor:
    """mean(1 - cos(pred, target)) + mean(||pred - target||_2) over locations.

    Both terms compare (C,) channel vectors at each spatial location.
    """
    p: Tensor = as_tensor(pred)
    t: Tensor = as_tensor(target, dtype=p.dtype)

    if p.shape != t.shape or p.ndim != 3:
        raise ShapeMismatch(f"loss: prediction {p.shape} vs target {t.shape}")

    pt: Tensor = to_tokens(p)
    tt: Tensor = to_tokens(t.detach())

    dot: Tensor = ops.reduce_sum(pt * tt, axis=1)
    denom: Tensor = _norm(pt) * _norm(tt) + COS_EPS
    cos_term: Tensor = ops.reduce_mean(1.0 - dot / denom)

    diff: Tensor = pt - tt
    l2_term: Tensor = ops.reduce_mean(_norm(diff))

    return cos_term + l2_term


def loss_value(pred: Array, target: Array) -> float:
    return loss_cos_l2(Tensor(pred, dtype=np.float64), Tensor(target, dtype=np.float64)).item()
