import csv
from pathlib import Path

import click
import numpy as np

from jafar.cli.models.summary_model import CamMetricsSummary
from jafar.cli.parameters import FILE, INT_LIST, merge_paths
from jafar.config.environment import AppSettings
from jafar.encoder.stub_encoder import StubEncoder
from jafar.evaluation import cam_metrics
from jafar.evaluation.cam_metrics import ScorePair
from jafar.evaluation.generalization import (
    DEFAULT_BASE_SIZE,
    GeneralizationReport,
    generalization_eval,
    held_out_scenes,
)
from jafar.evaluation.pca import pca_rgb
from jafar.model.params import JafarParams
from jafar.models.error_model import ValidationFailure
from jafar.models.feature_model import SaliencyMap
from jafar.storage.binary import write_text_atomic
from jafar.storage.repositories.checkpoint_repo import checkpoint_repo
from jafar.storage.repositories.feature_repo import feature_repo
from jafar.storage.repositories.image_repo import image_repo


## eval-gen
@click.command("eval-gen")
@click.option("--ckpt", type=FILE, required=True)
@click.option("--images", type=click.IntRange(min=1), default=50, show_default=True)
@click.option("--factors", type=INT_LIST, default="2,4,8", show_default=True)
@click.option("--csv", "csv_path", type=FILE, default=None)
@click.option("--base-size", type=int, default=DEFAULT_BASE_SIZE, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.pass_obj
def eval_gen_command(
    app: AppSettings,
    ckpt: Path,
    images: int,
    factors: list[int],
    csv_path: Path | None,
    base_size: int,
    workers: int,
) -> None:
    """Compare JAFAR with bilinear and nearest upsampling across scale factors."""
    params: JafarParams = checkpoint_repo.load(ckpt)
    enc: StubEncoder = StubEncoder.create(
        params.encoder_seed, params.encoder_patch, params.c_in
    )
    scenes = held_out_scenes(app.SEED, images)

    report: GeneralizationReport = generalization_eval(
        params, enc, scenes, factors, base_size=base_size, workers=workers
    )

    if csv_path is not None:
        write_text_atomic(csv_path, report.to_csv())

    click.echo(report.to_table())

    for factor in factors:
        click.echo(
            f"factor {factor}: jafar beats bilinear on "
            f"{100.0 * report.win_rate(factor):.1f}% of images"
        )


## viz-pca
@click.command("viz-pca")
@click.option("--inputs", type=FILE, multiple=True, required=True, help="JFAR feature files.")
@click.option("--out-prefix", type=str, required=True, help="Writes <prefix>_<k>.ppm per input.")
@click.argument("extra_inputs", nargs=-1, type=FILE)
def viz_pca_command(
    inputs: tuple[Path, ...], out_prefix: str, extra_inputs: tuple[Path, ...]
) -> None:
    """Colour feature maps with one shared 3-component PCA basis."""
    paths: list[Path] = merge_paths(inputs, extra_inputs)
    images = pca_rgb([feature_repo.load(path) for path in paths])

    for k, img in enumerate(images):
        target = Path(f"{out_prefix}_{k}.ppm")
        image_repo.save_ppm(target, img)
        click.echo(str(target))


def read_score_pairs(path: Path) -> list[ScorePair]:
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)

        if reader.fieldnames is None or not {"y", "o"} <= set(reader.fieldnames):
            raise ValidationFailure(f"{path}: score CSV needs 'y' and 'o' columns")

        try:
            return [ScorePair(y=float(row["y"]), o=float(row["o"])) for row in reader]

        except (TypeError, ValueError) as err:
            raise ValidationFailure(f"{path}: bad score value ({err})") from err


def map_pair_scores(maps: list[SaliencyMap]) -> tuple[float, float]:
    """Mean coherency and mean complexity over (original, masked) CAM pairs."""
    if len(maps) % 2:
        raise ValidationFailure(
            f"--maps expects (original, masked) pairs, got {len(maps)} files"
        )

    originals, masked = maps[0::2], maps[1::2]
    coh: list[float] = [cam_metrics.coherency(a, b) for a, b in zip(originals, masked, strict=True)]
    cplx: list[float] = [cam_metrics.complexity(a) for a in originals]

    return float(np.mean(coh)), float(np.mean(cplx))


## cam-metrics
@click.command("cam-metrics")
@click.option("--scores", type=FILE, required=True, help="CSV with y,o columns.")
@click.option("--maps", type=FILE, multiple=True, help="PGM CAMs as (original, masked) pairs.")
@click.argument("extra_maps", nargs=-1, type=FILE)
def cam_metrics_command(
    scores: Path, maps: tuple[Path, ...], extra_maps: tuple[Path, ...]
) -> None:
    """Faithfulness (A.D, A.I, A.G) and ADCC scores for CAMs."""
    pairs: list[ScorePair] = read_score_pairs(scores)
    paths: list[Path] = merge_paths(maps, extra_maps)

    if not pairs:
        raise ValidationFailure(f"{scores}: no score rows")

    gain = cam_metrics.avg_gain(pairs)
    drop: float = cam_metrics.avg_drop(pairs)
    coh: float | None = None
    cplx: float | None = None
    combined: float | None = None

    if paths:
        coh, cplx = map_pair_scores([image_repo.load_pgm(path) for path in paths])
        combined = cam_metrics.adcc(coh, cplx, drop)

    summary = CamMetricsSummary(
        pairs=len(pairs),
        avg_drop=drop,
        avg_increase=cam_metrics.avg_increase(pairs),
        avg_gain=gain.percent,
        gain_skipped=gain.skipped,
        coherency=coh,
        complexity=cplx,
        adcc=combined,
    )

    click.echo(summary.model_dump_json())
