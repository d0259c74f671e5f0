from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from jafar.config.logging import log
from jafar.config.metrics import TRAIN_LOSS, TRAIN_STEP_LATENCY, TRAIN_STEPS
from jafar.config.train_config import TrainConfig
from jafar.core.rng import Rng
from jafar.core.tensor import Array, Tape, Tensor
from jafar.encoder.stub_encoder import StubEncoder
from jafar.model import params as jafar_params
from jafar.model.params import JafarParams
from jafar.model.upsampler import forward_tensor
from jafar.models.error_model import NonFiniteLoss
from jafar.storage.repositories.checkpoint_repo import checkpoint_repo
from jafar.training.loss import loss_cos_l2
from jafar.training.optimizer import AdamWConfig, AdamWState, adamw_step
from jafar.training.views import ViewPair, sample_view

# stream offsets so view sampling never overlaps parameter init
PARAM_STREAM = 1
VIEW_STREAM = 2


@dataclass(frozen=True, slots=True, eq=False)
class TrainResult:
    params: JafarParams
    losses: list[float]

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else math.nan

    def window_mean(self, first: bool, size: int = 100) -> float:
        window: list[float] = self.losses[:size] if first else self.losses[-size:]
        return float(np.mean(window)) if window else math.nan


def optimizer_config(cfg: TrainConfig) -> AdamWConfig:
    return AdamWConfig(
        lr=cfg.lr,
        beta1=cfg.betas[0],
        beta2=cfg.betas[1],
        eps=cfg.eps,
        weight_decay=cfg.weight_decay,
    )


def init_params(cfg: TrainConfig) -> JafarParams:
    return jafar_params.init(
        Rng(cfg.seed).spawn(PARAM_STREAM),
        cfg.c_out,
        d=cfg.d,
        n_heads=cfg.n_heads,
        key_strategy=cfg.key_strategy,
        use_rope=cfg.use_rope,
        rope_base=cfg.rope_base,
        encoder_seed=cfg.encoder_seed,
        encoder_patch=cfg.patch,
    )


def batch_loss(params: JafarParams, views: list[ViewPair]) -> Tensor:
    total: Tensor | None = None

    for view in views:
        loss: Tensor = loss_cos_l2(forward_tensor(params, view.request()), view.f_hr)
        total = loss if total is None else total + loss

    assert total is not None

    return total * (1.0 / len(views))


def train(cfg: TrainConfig, enc: StubEncoder, params: JafarParams) -> TrainResult:
    """Run ``cfg.steps`` AdamW steps on freshly sampled view pairs.

    ``params`` is updated in place and returned in the result.
    """
    rng: Rng = Rng(cfg.seed).spawn(VIEW_STREAM)
    opt: AdamWConfig = optimizer_config(cfg)
    state: AdamWState = AdamWState.zeros(params.tensors)
    losses: list[float] = []

    log.info(
        f"Training → {cfg.steps} steps, batch {cfg.batch}, "
        f"{params.count()} params ({params.key_strategy})"
    )

    for step in range(1, cfg.steps + 1):
        with TRAIN_STEP_LATENCY.time():
            views: list[ViewPair] = [sample_view(rng, cfg, enc) for _ in range(cfg.batch)]

            with Tape() as tape:
                loss: Tensor = batch_loss(params, views)

            value: float = loss.item()

            if not math.isfinite(value):
                raise NonFiniteLoss(f"loss became {value} at step {step}", step=step)

            tape.backward(loss)
            grads: dict[str, Array] = {
                name: tape.grad(t) for name, t in params.tensors.items()
            }

            adamw_step(params.tensors, grads, state, opt, step)

        losses.append(value)
        TRAIN_STEPS.inc()
        TRAIN_LOSS.set(value)

        if step == 1 or step % cfg.log_every == 0:
            log.info(f"step {step}/{cfg.steps} → loss {value:.5f}")

        if (
            cfg.checkpoint_every
            and cfg.checkpoint_path is not None
            and step % cfg.checkpoint_every == 0
        ):
            checkpoint_repo.save(cfg.checkpoint_path, params)
            log.info(f"Checkpoint at step {step} → {cfg.checkpoint_path}")

    return TrainResult(params=params, losses=losses)
