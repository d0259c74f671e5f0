from dataclasses import dataclass

from jafar.core import ops
from jafar.core.tensor import Tensor
from jafar.models.error_model import ShapeMismatch
from jafar.nn.tokens import from_tokens, to_tokens


@dataclass(frozen=True, slots=True)
class SftParams:
    """C -> d projections producing the per-location scale and shift maps."""

    w_gamma: Tensor
    b_gamma: Tensor
    w_beta: Tensor
    b_beta: Tensor


def sft_modulate(k_tilde: Tensor, f_lr: Tensor, p: SftParams) -> Tensor:
    """K = gamma_F * K~ + beta_F."""
    d, h, w = k_tilde.shape

    if f_lr.ndim != 3 or f_lr.shape[1:] != (h, w):
        raise ShapeMismatch(
            f"sft_modulate: keys {k_tilde.shape} vs features {f_lr.shape}"
        )

    if p.w_gamma.shape[1] != d or p.w_beta.shape[1] != d:
        raise ShapeMismatch(
            f"sft_modulate: projections map to {p.w_gamma.shape[1]} channels, keys have {d}"
        )

    tokens: Tensor = to_tokens(f_lr)
    gamma: Tensor = from_tokens(ops.linear(tokens, p.w_gamma, p.b_gamma), h, w)
    beta: Tensor = from_tokens(ops.linear(tokens, p.w_beta, p.b_beta), h, w)

    return k_tilde * gamma + beta
