"""Two-instance fusion controller: a precise small-search tracker plus a
wide-search re-detector, switched on a confidence gate.

Per frame the tracker runs first. On a confident frame its box is emitted and
the re-detector's reference box is relocated near it; otherwise the
re-detector produces the frame, and a confident re-detection additionally
re-initializes the tracker from scratch. The gate comparison is <= on the
tracker side (a confidence of exactly the gate value falls back).
"""
from __future__ import annotations

from dataclasses import dataclass

from .geometry import BBox, FrameTooNarrowError, clip_to_frame, relocalization_reference
from .metrics import Prediction
from .protocol import CapabilityError, FrameContext, TrackerBackend


@dataclass(frozen=True)
class FusionConfig:
    confidence_gate: float = 0.5
    tracker_search_factor: float = 3.0
    redetector_search_factor: float = 5.0

    def __post_init__(self):
        if not (0.0 < self.confidence_gate < 1.0):
            raise ValueError("confidence gate must be in (0,1)")
        if self.tracker_search_factor <= 0 or self.redetector_search_factor <= 0:
            raise ValueError("search factors must be positive")


@dataclass(frozen=True)
class CallLogEntry:
    """Which instance produced a frame, and what side effects happened."""

    t: int
    producer: str            # "tracker" or "redetector"
    fallback: bool
    reinit: bool
    reference_reset: bool


class FusionController(TrackerBackend):
    """Composes two backends into one; usable anywhere a backend is."""

    def __init__(self, cfg: FusionConfig, tracker: TrackerBackend,
                 redetector: TrackerBackend):
        if not redetector.has_reference_box:
            raise CapabilityError(
                "fusion re-detector must support set_reference_box")
        self.cfg = cfg
        self.tracker = tracker
        self.redetector = redetector
        self.tracker.search_area_factor = cfg.tracker_search_factor
        self.redetector.search_area_factor = cfg.redetector_search_factor
        self.search_area_factor = cfg.tracker_search_factor
        self.call_log: list = []

    def init(self, ctx: FrameContext, box: BBox) -> None:
        box = clip_to_frame(box, ctx.dims)
        self.tracker.init(ctx, box)
        self.redetector.init(ctx, box)
        self.call_log = []

    def update(self, ctx: FrameContext) -> Prediction:
        gate = self.cfg.confidence_gate
        pred = self.tracker.update(ctx)
        if pred.confidence > gate:
            reset = False
            if pred.box is not None:
                try:
                    ref = relocalization_reference(
                        pred.box, ctx.dims, self.cfg.redetector_search_factor)
                    self.redetector.set_reference_box(ref)
                    reset = True
                except FrameTooNarrowError:
                    pass  # keep the previous reference
            self.call_log.append(CallLogEntry(ctx.t, "tracker", False, False, reset))
            return pred
        pred = self.redetector.update(ctx)
        reinit = pred.confidence > gate and pred.box is not None
        if reinit:
            self.tracker.reinit(ctx, pred.box)
        self.call_log.append(CallLogEntry(ctx.t, "redetector", True, reinit, False))
        return pred


def fusion_init(cfg: FusionConfig, tracker: TrackerBackend,
                redetector: TrackerBackend, frame0: FrameContext,
                b0: BBox) -> FusionController:
    state = FusionController(cfg, tracker, redetector)
    state.init(frame0, b0)
    return state


def fusion_step(state: FusionController, ctx: FrameContext) -> Prediction:
    return state.update(ctx)
