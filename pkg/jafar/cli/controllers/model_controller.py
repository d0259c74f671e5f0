from pathlib import Path

import click
import numpy as np

from jafar.cli.parameters import FILE, INDEX_PAIR
from jafar.config.logging import log
from jafar.evaluation.baselines import feature_resize
from jafar.model.params import JafarParams
from jafar.model.upsampler import (
    UpsampleRequest,
    export_attention_row,
    forward,
    upsample_tiled,
)
from jafar.models.feature_model import FeatureMap
from jafar.storage.repositories.checkpoint_repo import checkpoint_repo
from jafar.storage.repositories.feature_repo import feature_repo
from jafar.storage.repositories.image_repo import image_repo


def _request(features: Path, image: Path, out_h: int, out_w: int) -> UpsampleRequest:
    return UpsampleRequest(
        guidance=image_repo.load_ppm(image),
        f_lr=feature_repo.load(features),
        out_h=out_h,
        out_w=out_w,
    )


## upsample
@click.command("upsample")
@click.option("--ckpt", type=FILE, required=True)
@click.option("--features", type=FILE, required=True, help="JFAR low-resolution features.")
@click.option("--image", type=FILE, required=True, help="PPM guidance image.")
@click.option("--out-h", type=int, required=True)
@click.option("--out-w", type=int, required=True)
@click.option("--out", type=FILE, required=True)
@click.option("--tile-rows", type=int, default=None, help="Evaluate this many output rows at a time.")
def upsample_command(
    ckpt: Path,
    features: Path,
    image: Path,
    out_h: int,
    out_w: int,
    out: Path,
    tile_rows: int | None,
) -> None:
    """Upsample a feature file guided by an image."""
    params: JafarParams = checkpoint_repo.load(ckpt)
    req: UpsampleRequest = _request(features, image, out_h, out_w)

    if tile_rows is None:
        result: FeatureMap = forward(params, req)

    else:
        result = upsample_tiled(params, req, tile_rows)

    feature_repo.save(out, result)
    log.info(f"Upsampled {req.f_lr.shape} → {result.shape} at {out}")


## baseline
@click.command("baseline")
@click.option("--mode", type=click.Choice(["nearest", "bilinear"]), required=True)
@click.option("--features", type=FILE, required=True)
@click.option("--out-h", type=int, required=True)
@click.option("--out-w", type=int, required=True)
@click.option("--out", type=FILE, required=True)
def baseline_command(mode: str, features: Path, out_h: int, out_w: int, out: Path) -> None:
    """Resize a feature file with a training-free interpolator."""
    f_lr: FeatureMap = feature_repo.load(features)
    result: FeatureMap = feature_resize(f_lr, out_h, out_w, mode)  # type: ignore[arg-type]

    feature_repo.save(out, result)
    log.info(f"{mode} {f_lr.shape} → {result.shape} at {out}")


## viz-attn
@click.command("viz-attn")
@click.option("--ckpt", type=FILE, required=True)
@click.option("--features", type=FILE, required=True)
@click.option("--image", type=FILE, required=True)
@click.option("--query", type=INDEX_PAIR, required=True, help="Output location as i,j.")
@click.option("--out-h", type=int, default=None, help="Output grid height (default: image height / 4).")
@click.option("--out-w", type=int, default=None, help="Output grid width (default: image width / 4).")
@click.option("--out", type=FILE, required=True, help="PGM to write.")
def viz_attn_command(
    ckpt: Path,
    features: Path,
    image: Path,
    query: list[int],
    out_h: int | None,
    out_w: int | None,
    out: Path,
) -> None:
    """Write one query's attention over the key grid as a grey map."""
    params: JafarParams = checkpoint_repo.load(ckpt)
    guidance = image_repo.load_ppm(image)
    f_lr: FeatureMap = feature_repo.load(features)

    req = UpsampleRequest(
        guidance=guidance,
        f_lr=f_lr,
        out_h=out_h or max(1, guidance.shape[1] // 4),
        out_w=out_w or max(1, guidance.shape[2] // 4),
    )
    row: FeatureMap = export_attention_row(params, req, (query[0], query[1]))[0]
    peak: float = float(row.max())

    image_repo.save_pgm(out, row / peak if peak > 0 else np.zeros_like(row))
    log.info(f"Attention of query ({query[0]}, {query[1]}) → {out} (peak {peak:.4f})")
