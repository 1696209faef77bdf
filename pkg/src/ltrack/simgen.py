"""Seeded synthetic generator: multi-camera ground truth, noisy detection
streams, and scripted/oracle backends for exercising metrics and the fusion
state machine without any pixels.

Camera cuts are modeled as instantaneous jumps of the target box (a new
viewpoint); occluded stretches keep their interpolated boxes but are flagged.
All outputs are deterministic functions of (config, seed); each component
draws from its own fixed sub-stream of the seed so generators cannot perturb
each other.
"""
from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field

import numpy as np

from .datamodel import (Discipline, FrameAnnotation, MCVideo, VideoMeta,
                        Visibility, Weather)
from .geometry import BBox, FrameDims, clip_to_frame, from_center
from .metrics import Prediction
from .protocol import Detection, DetectionStream, FrameContext, TrackerBackend

# sub-stream tags: trajectory, metadata, detections
_STREAM_TRAJ = 0
_STREAM_META = 1
_STREAM_DET = 2


@dataclass(frozen=True)
class TrajectorySegment:
    """Linear center path and size schedule for one single-camera run."""

    start_center: tuple
    end_center: tuple
    start_size: tuple
    end_size: tuple


@dataclass(frozen=True)
class SimConfig:
    frames: int
    fps: float = 30.0
    dims: FrameDims = FrameDims(1280.0, 720.0)
    cut_points: tuple = ()        # strictly increasing frame indices in (0, frames)
    segments: tuple | None = None  # one TrajectorySegment per camera run
    occlusions: tuple = ()         # (start, length) pairs; default length 15
    seed: int = 0
    video_id: str = "sim000"

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("need at least one frame")
        if list(self.cut_points) != sorted(set(self.cut_points)):
            raise ValueError("cut points must be strictly increasing")
        if any(not (0 < c < self.frames) for c in self.cut_points):
            raise ValueError("cut points must lie inside (0, frames)")
        runs = len(self.cut_points) + 1
        if self.segments is not None and len(self.segments) != runs:
            raise ValueError(f"need {runs} trajectory segments, "
                             f"got {len(self.segments)}")
        for start, length in self.occlusions:
            if length < 1 or start < 0 or start + length > self.frames:
                raise ValueError(f"occlusion ({start},{length}) out of bounds")


@dataclass(frozen=True)
class NoiseConfig:
    center_sigma: float = 0.0      # pixels
    size_sigma: float = 0.0        # relative
    false_positive_rate: float = 0.0
    miss_rate: float = 0.0
    score_spread: float = 0.0      # true scores drawn from [1-spread, 1]
    fp_score_band: tuple = (0.05, 0.5)
    seed: int = 0

    def __post_init__(self):
        for rate in (self.false_positive_rate, self.miss_rate):
            if not (0.0 <= rate <= 1.0):
                raise ValueError("rates must be in [0,1]")
        if self.center_sigma < 0 or self.size_sigma < 0 or self.score_spread < 0:
            raise ValueError("noise magnitudes must be >= 0")


def _runs(cfg: SimConfig):
    bounds = [0, *cfg.cut_points, cfg.frames]
    return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


def _random_segment(rng, dims: FrameDims) -> TrajectorySegment:
    W, H = dims.width, dims.height
    w = rng.uniform(40.0, 90.0)
    h = rng.uniform(60.0, 120.0)
    margin_x, margin_y = w, h
    start = (rng.uniform(margin_x, W - margin_x), rng.uniform(margin_y, H - margin_y))
    end = (rng.uniform(margin_x, W - margin_x), rng.uniform(margin_y, H - margin_y))
    scale = rng.uniform(0.8, 1.25)
    return TrajectorySegment(start, end, (w, h), (w * scale, h * scale))


def gen_mc_sequence(cfg: SimConfig) -> MCVideo:
    """Ground-truth video for a config: per-run linear motion, camera ids by
    run, occlusion flags from the configured intervals."""
    traj_rng = np.random.default_rng([_STREAM_TRAJ, cfg.seed])
    meta_rng = np.random.default_rng([_STREAM_META, cfg.seed])
    runs = _runs(cfg)
    segments = cfg.segments
    if segments is None:
        segments = tuple(_random_segment(traj_rng, cfg.dims) for _ in runs)

    occluded = set()
    for start, length in cfg.occlusions:
        occluded.update(range(start, start + length))

    frames = []
    for cam, ((lo, hi), seg) in enumerate(zip(runs, segments), start=1):
        span = max(hi - 1 - lo, 1)
        for t in range(lo, hi):
            a = (t - lo) / span
            cx = seg.start_center[0] + a * (seg.end_center[0] - seg.start_center[0])
            cy = seg.start_center[1] + a * (seg.end_center[1] - seg.start_center[1])
            w = seg.start_size[0] + a * (seg.end_size[0] - seg.start_size[0])
            h = seg.start_size[1] + a * (seg.end_size[1] - seg.start_size[1])
            box = clip_to_frame(from_center((cx, cy), w, h), cfg.dims)
            vis = Visibility.OCCLUDED if t in occluded else Visibility.VISIBLE
            frames.append(FrameAnnotation(t, box, vis, cam))

    discipline = meta_rng.choice([d.value for d in Discipline])
    weather = meta_rng.choice([w.value for w in Weather])
    meta = VideoMeta(
        discipline=Discipline(str(discipline)),
        sub_discipline=str(meta_rng.choice(["slalom", "downhill", "large_hill",
                                            "ski_cross", "big_air"])),
        weather=Weather(str(weather)),
        athlete_id=f"A{int(meta_rng.integers(0, 40)):03d}",
        athlete_nationality=str(meta_rng.choice(["ITA", "AUT", "SUI", "NOR", "USA"])),
        location=str(meta_rng.choice(["Kitzbuehel", "Wengen", "Planica",
                                      "Oberstdorf", "Aspen"])),
        country=str(meta_rng.choice(["AUT", "SUI", "SLO", "GER", "USA"])),
        date=_dt.date(2023, 1, 1) + _dt.timedelta(days=int(meta_rng.integers(0, 365))),
        fps=cfg.fps,
        resolution=cfg.dims,
    )
    return MCVideo(id=cfg.video_id, frames=tuple(frames), meta=meta)


def gen_detections(gt: MCVideo, noise: NoiseConfig | None = None) -> DetectionStream:
    """Detector output simulated from ground truth: jittered true boxes on
    visible frames (unless missed), plus uniformly placed false positives."""
    noise = noise or NoiseConfig()
    rng = np.random.default_rng([_STREAM_DET, noise.seed])
    dims = gt.meta.resolution
    frames = []
    for fr in gt.frames:
        dets = []
        missed = rng.uniform() < noise.miss_rate
        if fr.visibility is Visibility.VISIBLE and not missed and fr.box.area > 0:
            dx = rng.normal(0.0, 1.0) * noise.center_sigma
            dy = rng.normal(0.0, 1.0) * noise.center_sigma
            sw = 1.0 + rng.normal(0.0, 1.0) * noise.size_sigma
            sh = 1.0 + rng.normal(0.0, 1.0) * noise.size_sigma
            b = fr.box
            if dx == 0.0 and dy == 0.0 and sw == 1.0 and sh == 1.0:
                box = b  # keep the exact box: no center round-trip rounding
            else:
                box = clip_to_frame(
                    from_center((b.x + b.w / 2 + dx, b.y + b.h / 2 + dy),
                                max(b.w * sw, 1.0), max(b.h * sh, 1.0)), dims)
            score = 1.0 - rng.uniform() * noise.score_spread
            dets.append(Detection(box, score))
        if rng.uniform() < noise.false_positive_rate:
            w = rng.uniform(20.0, 120.0)
            h = rng.uniform(20.0, 120.0)
            x = rng.uniform(0.0, dims.width - w)
            y = rng.uniform(0.0, dims.height - h)
            lo, hi = noise.fp_score_band
            dets.append(Detection(BBox(x, y, w, h), rng.uniform(lo, hi)))
        frames.append(tuple(dets))
    return DetectionStream(tuple(frames))


class ScriptedBackend(TrackerBackend):
    """Replays a fixed per-frame script of (box or None, confidence)."""

    has_reference_box = True

    def __init__(self, script):
        self.script = [p if isinstance(p, Prediction) else Prediction(*p)
                       for p in script]
        self.reference_log: list = []
        self.reinit_log: list = []
        self._initialized = False

    def init(self, ctx: FrameContext, box: BBox) -> None:
        if ctx.t >= len(self.script):
            raise ValueError("script shorter than sequence")
        self._initialized = True

    def reinit(self, ctx: FrameContext, box: BBox) -> None:
        self.reinit_log.append((ctx.t, box))

    def update(self, ctx: FrameContext) -> Prediction:
        if not self._initialized:
            raise RuntimeError("update before init")
        if ctx.t >= len(self.script):
            raise ValueError(f"script has no frame {ctx.t}")
        return self.script[ctx.t]

    def set_reference_box(self, box: BBox) -> None:
        self.reference_log.append(box)


class OracleBackend(TrackerBackend):
    """Emits the ground-truth box, optionally jittered, with a scheduled
    confidence (default 1)."""

    has_reference_box = True

    def __init__(self, gt: MCVideo, jitter_sigma: float = 0.0,
                 confidence_schedule=None, seed: int = 0):
        self.gt = gt
        self.jitter_sigma = jitter_sigma
        self.schedule = confidence_schedule
        self.rng = np.random.default_rng([3, seed])
        self.reference_log: list = []
        self._initialized = False

    def init(self, ctx: FrameContext, box: BBox) -> None:
        self._initialized = True

    def update(self, ctx: FrameContext) -> Prediction:
        if not self._initialized:
            raise RuntimeError("update before init")
        box = self.gt.frames[ctx.t].box
        if self.jitter_sigma > 0:
            box = box.translate(self.rng.normal(0, self.jitter_sigma),
                                self.rng.normal(0, self.jitter_sigma))
        conf = 1.0 if self.schedule is None else self.schedule[ctx.t]
        return Prediction(box, conf)

    def set_reference_box(self, box: BBox) -> None:
        self.reference_log.append(box)


def scripted_backend(script) -> ScriptedBackend:
    return ScriptedBackend(script)


def oracle_backend(gt: MCVideo, jitter_sigma: float = 0.0,
                   confidence_schedule=None, seed: int = 0) -> OracleBackend:
    return OracleBackend(gt, jitter_sigma, confidence_schedule, seed)
