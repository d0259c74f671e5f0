"""Scale-robustness sweep: JAFAR against training-free baselines.

Each held-out scene is rendered at ``base_size`` to produce the input
features and at ``factor * base_size`` to produce the target features, so
targets are what the frozen encoder actually sees at higher resolution.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from jafar.config.logging import log
from jafar.core.rng import Rng
from jafar.encoder.images import Scene, image_resize, render_scene, sample_scene
from jafar.encoder.stub_encoder import StubEncoder
from jafar.evaluation.baselines import feature_resize
from jafar.evaluation.reconstruction import ReconScore, recon_score
from jafar.model.params import JafarParams
from jafar.model.upsampler import UpsampleRequest, forward
from jafar.models.feature_model import FeatureMap, Image

Method = Literal["jafar", "bilinear", "nearest"]
METHODS: tuple[Method, ...] = ("jafar", "bilinear", "nearest")

DEFAULT_BASE_SIZE = 32
DEFAULT_FACTORS: tuple[int, ...] = (2, 4, 8)
# held-out scenes come from a stream no training run draws from
HELD_OUT_OFFSET = 1_000_003

type HeldOut = Scene | Image


@dataclass(frozen=True, slots=True)
class GeneralizationCell:
    factor: int
    method: Method
    mean_cos: float
    mean_l2: float


@dataclass(slots=True)
class GeneralizationReport:
    cells: list[GeneralizationCell] = field(default_factory=list)
    # (factor, method) -> per-image scores, in held-out order
    per_image: dict[tuple[int, Method], list[ReconScore]] = field(default_factory=dict)

    def cell(self, factor: int, method: Method) -> GeneralizationCell:
        for cell in self.cells:
            if cell.factor == factor and cell.method == method:
                return cell

        raise KeyError((factor, method))

    def win_rate(
        self, factor: int, method: Method = "jafar", baseline: Method = "bilinear"
    ) -> float:
        """Fraction of images where ``method`` has the higher mean cosine."""
        ours = self.per_image[(factor, method)]
        theirs = self.per_image[(factor, baseline)]
        wins: int = sum(a.mean_cos > b.mean_cos for a, b in zip(ours, theirs, strict=True))

        return wins / len(ours) if ours else 0.0

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["factor", "method", "mean_cos", "mean_l2"])

        for c in self.cells:
            writer.writerow([c.factor, c.method, f"{c.mean_cos:.6f}", f"{c.mean_l2:.6f}"])

        return buffer.getvalue()

    def to_table(self) -> str:
        lines: list[str] = [f"{'factor':>6}  {'method':<9} {'mean_cos':>9} {'mean_l2':>9}"]

        for c in self.cells:
            lines.append(
                f"{c.factor:>6}  {c.method:<9} {c.mean_cos:>9.4f} {c.mean_l2:>9.4f}"
            )

        return "\n".join(lines)


def held_out_scenes(seed: int, n: int) -> list[Scene]:
    rng: Rng = Rng(seed + HELD_OUT_OFFSET)
    return [sample_scene(rng) for _ in range(n)]


def render(item: HeldOut, size: int) -> Image:
    if isinstance(item, Scene):
        return render_scene(item, size)

    return image_resize(item, size, size, "bilinear")


def upsample_with(
    method: Method,
    params: JafarParams | None,
    guidance: Image,
    f_lr: FeatureMap,
    out_h: int,
    out_w: int,
) -> FeatureMap:
    if method == "jafar":
        assert params is not None
        return forward(params, UpsampleRequest(guidance, f_lr, out_h, out_w))

    return feature_resize(f_lr, out_h, out_w, method)


def _score_item(
    item: HeldOut,
    params: JafarParams | None,
    enc: StubEncoder,
    factors: Sequence[int],
    methods: Sequence[Method],
    base_size: int,
) -> dict[tuple[int, Method], ReconScore]:
    f_lr: FeatureMap = enc.encode(render(item, base_size))
    scores: dict[tuple[int, Method], ReconScore] = {}

    for factor in factors:
        hi: Image = render(item, factor * base_size)
        target: FeatureMap = enc.encode(hi)
        _, out_h, out_w = target.shape
        g: int = max(1, hi.shape[1] // 2)
        guidance: Image = image_resize(hi, g, g, "bilinear")

        for method in methods:
            pred = upsample_with(method, params, guidance, f_lr, out_h, out_w)
            scores[(factor, method)] = recon_score(pred, target)

    return scores


def generalization_eval(
    params: JafarParams | None,
    enc: StubEncoder,
    held_out: Sequence[HeldOut],
    factors: Sequence[int] = DEFAULT_FACTORS,
    *,
    base_size: int = DEFAULT_BASE_SIZE,
    methods: Sequence[Method] = METHODS,
    workers: int = 1,
) -> GeneralizationReport:
    """Score every method at every factor; per-image work may run in threads."""
    if params is None and "jafar" in methods:
        methods = [m for m in methods if m != "jafar"]

    def job(item: HeldOut) -> dict[tuple[int, Method], ReconScore]:
        return _score_item(item, params, enc, factors, methods, base_size)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, held_out))

    else:
        results = [job(item) for item in held_out]

    report = GeneralizationReport()

    for factor in factors:
        for method in methods:
            scores: list[ReconScore] = [r[(factor, method)] for r in results]
            report.per_image[(factor, method)] = scores
            report.cells.append(
                GeneralizationCell(
                    factor=factor,
                    method=method,
                    mean_cos=float(np.mean([s.mean_cos for s in scores])),
                    mean_l2=float(np.mean([s.mean_l2 for s in scores])),
                )
            )

    log.info(
        f"Generalization sweep → {len(held_out)} images, factors {list(factors)}, "
        f"methods {list(methods)}"
    )

    return report
