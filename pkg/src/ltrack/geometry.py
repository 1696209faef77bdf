"""Axis-aligned bounding-box arithmetic and frame geometry.

Boxes use the top-left [x, y, w, h] convention with real-valued pixel
coordinates throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from ._kernels import iou_pairs as _iou_pairs


class FrameTooNarrowError(ValueError):
    """Raised when a frame is narrower than tall, so the horizontal clip
    interval for the relocalization reference is empty."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle: (x, y) is the top-left corner."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for value in (self.x, self.y, self.w, self.h):
            if not math.isfinite(value):
                raise ValueError(f"non-finite box coordinate: {self!r}")
        if self.w < 0 or self.h < 0:
            raise ValueError(f"negative box size: {self!r}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def aspect(self) -> float:
        """Width/height ratio; h must be positive."""
        return self.w / self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x + dx, self.y + dy, self.w, self.h)


@dataclass(frozen=True)
class FrameDims:
    """Frame size in pixels."""

    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"frame dims must be positive: {self!r}")


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes; 0 when the union has zero area."""
    ix = min(a.x2, b.x2) - max(a.x, b.x)
    iy = min(a.y2, b.y2) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        inter = 0.0
    else:
        inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def center(b: BBox) -> tuple[float, float]:
    """Center point (c_x, c_y) of a box."""
    return (b.x + b.w / 2.0, b.y + b.h / 2.0)


def from_center(c: tuple[float, float], w: float, h: float) -> BBox:
    """Box of size (w, h) centered at c; inverse of :func:`center`."""
    return BBox(c[0] - w / 2.0, c[1] - h / 2.0, w, h)


def clip(value: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, value))


def clip_to_frame(b: BBox, dims: FrameDims) -> BBox:
    """Intersect a box with the frame rectangle; may become zero-area."""
    x1 = clip(b.x, 0.0, dims.width)
    y1 = clip(b.y, 0.0, dims.height)
    x2 = clip(b.x2, 0.0, dims.width)
    y2 = clip(b.y2, 0.0, dims.height)
    return BBox(x1, y1, max(0.0, x2 - x1), max(0.0, y2 - y1))


def relocalization_reference(prev_confident: BBox, dims: FrameDims,
                             factor: float = 5.0) -> BBox:
    """Reference box for wide-area re-detection after a confident frame.

    The box is square with side S = H/factor, vertically centered, with its
    center-x taken from ``prev_confident`` and clamped to [H/2, W - H/2] so
    that the induced search region (side factor*S = H) stays inside the frame
    horizontally.

    Raises:
        FrameTooNarrowError: when W < H (the clamp interval is empty); the
            caller decides the fallback.
    """
    if factor <= 0:
        raise ValueError("factor must be positive")
    W, H = dims.width, dims.height
    if W < H:
        raise FrameTooNarrowError(
            f"frame {W}x{H} narrower than tall: no valid reference center")
    side = H / factor
    c_x = clip(center(prev_confident)[0], H / 2.0, W - H / 2.0)
    return from_center((c_x, H / 2.0), side, side)


def iou_many(pred_boxes, gt_boxes) -> "list[float]":
    """IoU for aligned lists of optional boxes; None on either side scores 0."""
    import numpy as np

    n = len(pred_boxes)
    if len(gt_boxes) != n:
        raise ValueError("box lists must be aligned")
    mask = [p is not None and g is not None for p, g in zip(pred_boxes, gt_boxes)]
    out = np.zeros(n, dtype=np.float64)
    idx = [i for i in range(n) if mask[i]]
    if idx:
        a = np.array([pred_boxes[i].as_tuple() for i in idx], dtype=np.float64)
        b = np.array([gt_boxes[i].as_tuple() for i in idx], dtype=np.float64)
        out[idx] = _iou_pairs(a, b)
    return out.tolist()
