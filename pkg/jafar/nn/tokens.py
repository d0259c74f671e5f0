from jafar.core import ops
from jafar.core.tensor import Tensor


def to_tokens(x: Tensor) -> Tensor:
    """(C, H, W) -> (H*W, C), row-major over the grid."""
    c, h, w = x.shape
    return ops.transpose(ops.reshape(x, (c, h * w)), (1, 0))


def from_tokens(t: Tensor, h: int, w: int) -> Tensor:
    """(H*W, C) -> (C, H, W)."""
    n, c = t.shape
    return ops.reshape(ops.transpose(t, (1, 0)), (c, h, w))
