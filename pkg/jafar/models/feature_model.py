from typing import Any

import numpy as np
from numpy.typing import NDArray

# (C, H, W) grid of feature vectors
type FeatureMap = NDArray[np.floating[Any]]

# (3, H, W) with values in [0, 1]
type Image = NDArray[np.floating[Any]]

# (H, W) with values in [0, 1]
type SaliencyMap = NDArray[np.floating[Any]]
