"""Desk-scale toolkit for long-term multi-camera tracking evaluation:
bounding-box data model, long-term metrics, the one-pass protocol, a
tracking-by-detection baseline, a two-instance fusion controller, and a
seeded simulator."""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend  # noqa: F401
from .geometry import BBox, FrameDims  # noqa: F401
from .metrics import Prediction, PredictionTrace  # noqa: F401
