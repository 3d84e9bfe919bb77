"""spoofguard: image-quality metrics and spoofing detection for hand biometrics."""

__version__ = "0.1.0"

from .imgio import load_image, resize_bilinear, save_image  # noqa: F401
from .iqm import METRIC_IDS, compute_all  # noqa: F401
