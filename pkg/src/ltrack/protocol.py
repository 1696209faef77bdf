"""One-pass evaluation: tracker backend interface, init policies, the runner,
and the trace / detection file formats.

Trace file: one CSV row per frame ``t,x,y,w,h,conf,init`` with empty box
fields for absent frames and init=1 exactly on the initialization row.
Detection file: CSV ``t,x,y,w,h,score``, multiple rows per frame allowed.
"""
from __future__ import annotations

import abc
import io
import time
from dataclasses import dataclass, field

from .datamodel import MCVideo, ParseError
from .geometry import BBox, FrameDims
from .metrics import Prediction, PredictionTrace


class BackendError(RuntimeError):
    """A backend violated its contract; the sequence is marked failed."""


class NoInitError(RuntimeError):
    """Detector-based initialization found no qualifying detection."""


class CapabilityError(BackendError):
    """Backend lacks an optional capability the caller requires."""


@dataclass(frozen=True)
class FrameContext:
    """What a backend is allowed to see per frame: geometry and timing only.

    ``image_path`` is an opaque hint for backends that resolve pixels
    externally; the toolkit itself never reads images.
    """

    t: int
    dims: FrameDims
    timestamp: float
    image_path: str | None = None


class TrackerBackend(abc.ABC):
    """init/update/reinit tracker interface driven by the OPE runner."""

    search_area_factor: float = 5.0
    has_reference_box: bool = False

    @abc.abstractmethod
    def init(self, ctx: FrameContext, box: BBox) -> None:
        """Start tracking the target given by ``box`` at frame ``ctx.t``."""

    @abc.abstractmethod
    def update(self, ctx: FrameContext) -> Prediction:
        """Predict the target at frame ``ctx.t``; only valid after init."""

    def reinit(self, ctx: FrameContext, box: BBox) -> None:
        """Restart from a fresh target box mid-sequence; defaults to init."""
        self.init(ctx, box)

    def set_reference_box(self, box: BBox) -> None:
        """Optional capability: relocate the search-region reference."""
        raise CapabilityError(f"{type(self).__name__} has no reference box")


@dataclass(frozen=True)
class Detection:
    box: BBox
    score: float

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"detection score out of [0,1]: {self.score}")


@dataclass(frozen=True)
class DetectionStream:
    """Per-frame detection lists aligned to a video."""

    frames: tuple  # tuple of tuples of Detection

    def __len__(self) -> int:
        return len(self.frames)

    def at(self, t: int):
        return self.frames[t]


@dataclass(frozen=True)
class GroundTruthInit:
    """Initialize with the annotated box at frame 0."""


@dataclass(frozen=True)
class DetectorInit:
    """Initialize at the first frame with a detection scoring >= threshold."""

    stream: DetectionStream
    threshold: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.threshold <= 1.0):
            raise ValueError("threshold must be in [0,1]")


@dataclass
class OpeResult:
    trace: PredictionTrace
    update_costs: list  # seconds per frame; 0.0 on and before the init frame
    init_cost: float


def _pick_init_detection(dets):
    """Deterministic choice among detections passing the threshold:
    highest score, then larger area, then lexicographic coordinates."""
    return max(dets, key=lambda d: (d.score, d.box.area,
                                    tuple(-c for c in d.box.as_tuple())))


def run_ope(backend: TrackerBackend, video: MCVideo, policy=None,
            clock=time.perf_counter) -> OpeResult:
    """Run the one-pass protocol: initialize once, update to the end.

    Ground truth is never exposed to the backend after initialization.
    """
    if policy is None:
        policy = GroundTruthInit()
    T = len(video)
    dims = video.meta.resolution
    fps = video.meta.fps

    if isinstance(policy, GroundTruthInit):
        init_t = 0
        init_box = video.frames[0].box
    elif isinstance(policy, DetectorInit):
        if len(policy.stream) != T:
            raise ValueError("detection stream not aligned to video")
        init_t = None
        for t in range(T):
            qualifying = [d for d in policy.stream.at(t)
                          if d.score >= policy.threshold]
            if qualifying:
                init_t = t
                init_box = _pick_init_detection(qualifying).box
                break
        if init_t is None:
            raise NoInitError(f"video {video.id}: no detection with score >= "
                              f"{policy.threshold}")
    else:
        raise TypeError(f"unknown init policy: {policy!r}")

    predictions = [Prediction(None, 0.0)] * init_t
    ctx0 = FrameContext(init_t, dims, init_t / fps)
    t0 = clock()
    backend.init(ctx0, init_box)
    init_cost = clock() - t0
    predictions.append(Prediction(init_box, 1.0))

    costs = [0.0] * (init_t + 1)
    for t in range(init_t + 1, T):
        ctx = FrameContext(t, dims, t / fps)
        t0 = clock()
        pred = backend.update(ctx)
        costs.append(clock() - t0)
        if not isinstance(pred, Prediction):
            raise BackendError(f"backend returned {type(pred).__name__}, "
                               "expected Prediction")
        predictions.append(pred)
    trace = PredictionTrace(tuple(predictions), init_frame=init_t)
    return OpeResult(trace, costs, init_cost)


# ---------------------------------------------------------------------------
# trace files

def serialize_trace(trace: PredictionTrace) -> str:
    out = io.StringIO()
    for t, p in enumerate(trace.predictions):
        flag = 1 if t == trace.init_frame else 0
        if p.box is None:
            out.write(f"{t},,,,,{_fmt(p.confidence)},{flag}\n")
        else:
            b = p.box
            out.write(f"{t},{_fmt(b.x)},{_fmt(b.y)},{_fmt(b.w)},{_fmt(b.h)},"
                      f"{_fmt(p.confidence)},{flag}\n")
    return out.getvalue()


def parse_trace(text) -> PredictionTrace:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    predictions = []
    init_frame = None
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.strip() == "":
            continue
        parts = line.split(",")
        if len(parts) not in (6, 7):
            raise ParseError(f"expected 6 or 7 CSV fields, got {len(parts)}",
                             lineno)
        try:
            t = int(parts[0])
            if t != len(predictions):
                raise ValueError(f"non-contiguous frame index {t}")
            if parts[1].strip() == "":
                pred = Prediction(None, float(parts[5]))
            else:
                pred = Prediction(BBox(*(float(p) for p in parts[1:5])),
                                  float(parts[5]))
            if len(parts) == 7 and int(parts[6]) == 1:
                if init_frame is not None:
                    raise ValueError("multiple init rows")
                init_frame = t
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
        predictions.append(pred)
    if not predictions:
        raise ParseError("empty trace")
    if init_frame is None:
        init_frame = next(i for i, p in enumerate(predictions)
                          if p.box is not None)
    return PredictionTrace(tuple(predictions), init_frame=init_frame)


class TraceBackend(TrackerBackend):
    """Replays a stored prediction trace verbatim.

    ``init`` only checks alignment with the stored init row; ``update``
    returns the stored row for the requested frame. Accepts a reference box
    (recorded, unused) so it can stand in as a fusion re-detector.
    """

    has_reference_box = True

    def __init__(self, trace: PredictionTrace):
        self.trace = trace
        self.reference_log: list = []
        self._initialized = False

    @classmethod
    def from_file(cls, path) -> "TraceBackend":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(parse_trace(fh.read()))

    def init(self, ctx: FrameContext, box: BBox) -> None:
        if ctx.t != self.trace.init_frame:
            raise BackendError(
                f"trace init frame {self.trace.init_frame} != requested {ctx.t}")
        self._initialized = True

    def reinit(self, ctx: FrameContext, box: BBox) -> None:
        # replay continues regardless; nothing to reset
        pass

    def update(self, ctx: FrameContext) -> Prediction:
        if not self._initialized:
            raise BackendError("update before init")
        if ctx.t >= len(self.trace):
            raise BackendError(f"trace shorter than video (frame {ctx.t})")
        return self.trace.predictions[ctx.t]

    def set_reference_box(self, box: BBox) -> None:
        self.reference_log.append(box)


def trace_backend(path) -> TraceBackend:
    return TraceBackend.from_file(path)


# ---------------------------------------------------------------------------
# detection stream files

def serialize_detections(stream: DetectionStream) -> str:
    out = io.StringIO()
    for t, dets in enumerate(stream.frames):
        for d in dets:
            b = d.box
            out.write(f"{t},{_fmt(b.x)},{_fmt(b.y)},{_fmt(b.w)},{_fmt(b.h)},"
                      f"{_fmt(d.score)}\n")
    return out.getvalue()


def parse_detections(text, length: int) -> DetectionStream:
    """Parse a detection CSV; ``length`` fixes the number of frames (frames
    without rows get empty detection lists)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    frames: list = [[] for _ in range(length)]
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.strip() == "":
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ParseError(f"expected 6 CSV fields, got {len(parts)}", lineno)
        try:
            t = int(parts[0])
            det = Detection(BBox(*(float(p) for p in parts[1:5])),
                            float(parts[5]))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
        if not (0 <= t < length):
            raise ParseError(f"frame index {t} outside [0,{length})", lineno)
        frames[t].append(det)
    return DetectionStream(tuple(tuple(f) for f in frames))


def _fmt(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))
