from dataclasses import dataclass

from jafar.config.train_config import TrainConfig
from jafar.core.rng import Rng
from jafar.encoder.images import image_resize, synth_image
from jafar.encoder.stub_encoder import StubEncoder
from jafar.model.upsampler import UpsampleRequest
from jafar.models.feature_model import FeatureMap, Image


@dataclass(frozen=True, slots=True, eq=False)
class ViewPair:
    guidance: Image
    f_lr: FeatureMap
    f_hr: FeatureMap
    lr_size: int
    hr_size: int

    @property
    def factor(self) -> float:
        return self.hr_size / self.lr_size

    def request(self) -> UpsampleRequest:
        _, out_h, out_w = self.f_hr.shape
        return UpsampleRequest(self.guidance, self.f_lr, out_h, out_w)


def sample_view(rng: Rng, cfg: TrainConfig, enc: StubEncoder) -> ViewPair:
    """One HR image, one bilinear LR view of it, both encoded."""
    hr: Image = synth_image(rng, cfg.hr_image_size)
    lr_size: int = rng.choice(cfg.delta_set)

    lr: Image = image_resize(hr, lr_size, lr_size, "bilinear")
    guidance: Image = image_resize(hr, cfg.guidance_size, cfg.guidance_size, "bilinear")

    return ViewPair(
        guidance=guidance,
        f_lr=enc.encode(lr),
        f_hr=enc.encode(hr),
        lr_size=lr_size,
        hr_size=cfg.hr_image_size,
    )
