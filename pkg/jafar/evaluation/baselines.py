from jafar.core.kernels import ResizeMode
from jafar.encoder.images import resize_grid
from jafar.models.feature_model import FeatureMap


def feature_resize(
    f: FeatureMap, out_h: int, out_w: int, mode: ResizeMode = "bilinear"
) -> FeatureMap:
    """Training-free upsampling: the image resize rules applied per channel."""
    return resize_grid(f, out_h, out_w, mode)
