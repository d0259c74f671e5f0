"""Train one model per (key strategy, head count) and compare reconstruction."""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from dataclasses import dataclass

from jafar.config.logging import log
from jafar.config.train_config import TrainConfig
from jafar.encoder.stub_encoder import StubEncoder
from jafar.evaluation.generalization import (
    DEFAULT_BASE_SIZE,
    GeneralizationCell,
    generalization_eval,
    held_out_scenes,
)
from jafar.model.params import KeyStrategy
from jafar.training.trainer import init_params, train


@dataclass(frozen=True, slots=True)
class AblationRow:
    key_strategy: KeyStrategy
    n_heads: int
    factor: int
    mean_cos: float
    mean_l2: float
    final_loss: float


def run_ablation(
    cfg: TrainConfig,
    strategies: Sequence[KeyStrategy],
    heads: Sequence[int],
    factor: int,
    n_images: int,
    *,
    base_size: int = DEFAULT_BASE_SIZE,
    workers: int = 1,
) -> list[AblationRow]:
    enc: StubEncoder = StubEncoder.create(cfg.encoder_seed, cfg.patch, cfg.c_out)
    scenes = held_out_scenes(cfg.seed, n_images)
    rows: list[AblationRow] = []

    for strategy in strategies:
        for n_heads in heads:
            variant: TrainConfig = cfg.model_copy(
                update={"key_strategy": strategy, "n_heads": n_heads}
            )
            log.info(f"Ablation → key_strategy={strategy}, n_heads={n_heads}")

            result = train(variant, enc, init_params(variant))
            report = generalization_eval(
                result.params,
                enc,
                scenes,
                [factor],
                base_size=base_size,
                methods=["jafar"],
                workers=workers,
            )
            cell: GeneralizationCell = report.cell(factor, "jafar")

            rows.append(
                AblationRow(
                    key_strategy=strategy,
                    n_heads=n_heads,
                    factor=factor,
                    mean_cos=cell.mean_cos,
                    mean_l2=cell.mean_l2,
                    final_loss=result.final_loss,
                )
            )

    return rows


def ablation_csv(rows: Sequence[AblationRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["key_strategy", "n_heads", "factor", "mean_cos", "mean_l2", "final_loss"])

    for r in rows:
        writer.writerow(
            [
                r.key_strategy,
                r.n_heads,
                r.factor,
                f"{r.mean_cos:.6f}",
                f"{r.mean_l2:.6f}",
                f"{r.final_loss:.6f}",
            ]
        )

    return buffer.getvalue()
