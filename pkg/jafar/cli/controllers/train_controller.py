from pathlib import Path

import click

from jafar.cli.models.summary_model import TrainSummary
from jafar.cli.parameters import FILE, INT_LIST, NameList
from jafar.config.environment import AppSettings
from jafar.config.logging import log
from jafar.config.metrics import write_metrics
from jafar.config.train_config import TrainConfig, load_train_config
from jafar.encoder.stub_encoder import StubEncoder
from jafar.evaluation.ablation import ablation_csv, run_ablation
from jafar.model.params import KEY_STRATEGIES
from jafar.storage.binary import write_text_atomic
from jafar.storage.repositories.checkpoint_repo import checkpoint_repo
from jafar.training.trainer import TrainResult, init_params, train


## train
@click.command("train")
@click.option("--config", "config_path", type=FILE, required=True, help="key = value training config.")
@click.option("--out", type=FILE, required=True, help="Checkpoint to write.")
@click.option("--steps", type=int, default=None, help="Override the configured step count.")
@click.option("--metrics-file", type=FILE, default=None, help="Write Prometheus metrics here.")
@click.pass_obj
def train_command(
    app: AppSettings,
    config_path: Path,
    out: Path,
    steps: int | None,
    metrics_file: Path | None,
) -> None:
    """Train a model on synthetic multi-resolution views."""
    overrides: dict[str, int] = {} if steps is None else {"steps": steps}
    cfg: TrainConfig = load_train_config(config_path, defaults={"seed": app.SEED}, **overrides)

    enc: StubEncoder = StubEncoder.create(cfg.encoder_seed, cfg.patch, cfg.c_out)
    result: TrainResult = train(cfg, enc, init_params(cfg))

    checkpoint_repo.save(out, result.params)
    log.info(f"Checkpoint → {out}")

    if metrics_file is not None:
        write_metrics(metrics_file)

    summary = TrainSummary(
        steps=cfg.steps,
        first_window_loss=result.window_mean(first=True),
        last_window_loss=result.window_mean(first=False),
        final_loss=result.final_loss,
        checkpoint=str(out),
    )
    click.echo(summary.model_dump_json())


## ablate
@click.command("ablate")
@click.option("--config", "config_path", type=FILE, default=None, help="Base training config.")
@click.option(
    "--strategies",
    type=NameList(KEY_STRATEGIES),
    default="sft,linear_projection",
    show_default=True,
)
@click.option("--heads", type=INT_LIST, default="4", show_default=True)
@click.option("--factor", type=int, default=4, show_default=True)
@click.option("--images", type=click.IntRange(min=1), default=50, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--csv", "csv_path", type=FILE, default=None)
@click.pass_obj
def ablate_command(
    app: AppSettings,
    config_path: Path | None,
    strategies: list[str],
    heads: list[int],
    factor: int,
    images: int,
    workers: int,
    csv_path: Path | None,
) -> None:
    """Train one model per key strategy and head count, then compare them."""
    cfg: TrainConfig = load_train_config(config_path, defaults={"seed": app.SEED})
    rows = run_ablation(cfg, strategies, heads, factor, images, workers=workers)  # type: ignore[arg-type]
    text: str = ablation_csv(rows)

    if csv_path is not None:
        write_text_atomic(csv_path, text)

    click.echo(text, nl=False)
