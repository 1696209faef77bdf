"""Long-term tracking scores and pose-impact metrics.

Precision is the mean overlap on confidently reported frames, recall the mean
overlap over all ground-truth frames, and the F-score is maximized over the
confidence thresholds occurring in the trace. The robustness score normalizes
the index of the first failure that is not recovered within a window of
frames. Latency follows a single-worker queueing model over per-frame
processing costs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .datamodel import KeypointPose, MCVideo, Visibility, keypoints_to_box
from .geometry import BBox, iou_many

GSR_WINDOWS = (1, 7, 15, 22, 30, 60, 90)

HEAD = "head"
NECK = "neck"


@dataclass(frozen=True)
class Prediction:
    """Per-frame tracker output: optional box plus confidence in [0, 1]."""

    box: BBox | None
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of [0,1]: {self.confidence}")

    @property
    def absent(self) -> bool:
        return self.box is None


@dataclass(frozen=True)
class PredictionTrace:
    """One Prediction per video frame; the init frame carries the given box."""

    predictions: tuple
    init_frame: int = 0

    def __post_init__(self):
        if not (0 <= self.init_frame < len(self.predictions)):
            raise ValueError("init_frame outside trace")
        init = self.predictions[self.init_frame]
        if init.box is None or init.confidence != 1.0:
            raise ValueError("init entry must carry a box with confidence 1")
        for i in range(self.init_frame):
            if self.predictions[i].box is not None:
                raise ValueError("frames before init must be absent")

    def __len__(self) -> int:
        return len(self.predictions)


@dataclass
class PrRe:
    precision: float
    recall: float
    pr_defined: bool = True


@dataclass
class LTEvalResult:
    """Precision/recall/F curves over the confidence-threshold grid."""

    thresholds: list
    precision: list
    recall: list
    fscore: list

    @property
    def best_index(self) -> int:
        best = max(self.fscore)
        return self.fscore.index(best)

    @property
    def f_star(self) -> float:
        return self.fscore[self.best_index]

    @property
    def tau_star(self) -> float:
        return self.thresholds[self.best_index]

    @property
    def precision_at_best(self) -> float:
        return self.precision[self.best_index]

    @property
    def recall_at_best(self) -> float:
        return self.recall[self.best_index]


@dataclass
class LatencyProfile:
    """Per-frame completion delays under a single-worker queue."""

    delays: list
    costs: list
    fps: float

    @property
    def final_delay(self) -> float:
        return self.delays[-1]

    @property
    def max_delay(self) -> float:
        return max(self.delays)


def _gt_frames(gts):
    if isinstance(gts, MCVideo):
        return gts.frames
    return list(gts)


def _scoring_indices(trace: PredictionTrace, frames, include_occluded: bool):
    idx = []
    for i, fr in enumerate(frames):
        if i == trace.init_frame:
            continue
        if not include_occluded and fr.visibility is Visibility.OCCLUDED:
            continue
        idx.append(i)
    return idx


def _overlaps(trace: PredictionTrace, frames, indices):
    preds = [trace.predictions[i].box for i in indices]
    gt = [frames[i].box for i in indices]
    return iou_many(preds, gt)


def pr_re_f(trace: PredictionTrace, gts, tau: float,
            include_occluded: bool = True) -> PrRe:
    """Precision and recall at one confidence threshold.

    Precision averages overlap over frames reported with confidence >= tau;
    recall averages overlap over every scoring frame (absent frames count 0).
    When no frame qualifies for precision it is returned as 0 with
    ``pr_defined`` False.
    """
    frames = _gt_frames(gts)
    if len(trace) != len(frames):
        raise ValueError(f"trace length {len(trace)} != video length {len(frames)}")
    indices = _scoring_indices(trace, frames, include_occluded)
    if not indices:
        raise ValueError("no scoring frames")
    overlaps = _overlaps(trace, frames, indices)
    recall = sum(overlaps) / len(indices)
    reported = [k for k, i in enumerate(indices)
                if trace.predictions[i].box is not None
                and trace.predictions[i].confidence >= tau]
    if not reported:
        return PrRe(0.0, recall, pr_defined=False)
    precision = sum(overlaps[k] for k in reported) / len(reported)
    return PrRe(precision, recall)


def fscore_optimize(trace: PredictionTrace, gts,
                    include_occluded: bool = True) -> LTEvalResult:
    """Evaluate Pr/Re/F on the grid of confidences present in the trace
    (plus 0 and 1) and retain the best F."""
    frames = _gt_frames(gts)
    grid = {0.0, 1.0}
    for i, p in enumerate(trace.predictions):
        if i != trace.init_frame and p.box is not None:
            grid.add(p.confidence)
    thresholds = sorted(grid)
    precision, recall, fscore = [], [], []
    for tau in thresholds:
        r = pr_re_f(trace, frames, tau, include_occluded)
        f = 0.0
        if r.precision + r.recall > 0:
            f = 2.0 * r.precision * r.recall / (r.precision + r.recall)
        precision.append(r.precision)
        recall.append(r.recall)
        fscore.append(f)
    return LTEvalResult(thresholds, precision, recall, fscore)


def gsr(trace: PredictionTrace, gts, recovery_window: int,
        iou_threshold: float = 0.5, include_occluded: bool = True) -> float:
    """Fraction of the video before the first unrecovered failure.

    A frame is wrong when its overlap falls below ``iou_threshold`` (absent
    boxes overlap 0). The failure is the start of the first maximal run of
    wrong frames longer than ``recovery_window``; with no such run the score
    is 1. With ``include_occluded`` False, occluded frames never count as
    wrong (they are skipped, breaking wrong runs conservatively is avoided
    by treating them as neutral correct frames).
    """
    if recovery_window < 1:
        raise ValueError("recovery_window must be >= 1")
    frames = _gt_frames(gts)
    if len(trace) != len(frames):
        raise ValueError("trace/video length mismatch")
    indices = _scoring_indices(trace, frames, include_occluded)
    overlaps = dict(zip(indices, _overlaps(trace, frames, indices)))
    total = len(frames)
    run_start = None
    run_len = 0
    for t in range(total):
        wrong = t in overlaps and overlaps[t] < iou_threshold
        if wrong:
            if run_start is None:
                run_start = t
            run_len += 1
            if run_len > recovery_window:
                return run_start / total
        else:
            run_start = None
            run_len = 0
    return 1.0


def gsr_curve(trace: PredictionTrace, gts, windows=GSR_WINDOWS,
              iou_threshold: float = 0.5, include_occluded: bool = True) -> list:
    """GSR evaluated at the standard recovery windows."""
    return [gsr(trace, gts, w, iou_threshold, include_occluded) for w in windows]


def latency_profile(costs, fps: float) -> LatencyProfile:
    """Completion delays when frames arrive at ``fps`` and a single worker
    processes them in order without dropping any."""
    if fps <= 0:
        raise ValueError("fps must be positive")
    costs = [float(c) for c in costs]
    if any(c < 0 for c in costs):
        raise ValueError("processing costs must be non-negative")
    delays = []
    completed = 0.0
    for t, cost in enumerate(costs):
        arrival = t / fps
        completed = max(arrival, completed) + cost
        delays.append(completed - arrival)
    return LatencyProfile(delays, costs, fps)


# ---------------------------------------------------------------------------
# pose-impact metrics

def pck(pred: KeypointPose, gt: KeypointPose, fraction: float = 0.5) -> float:
    """Fraction of present ground-truth keypoints predicted within
    ``fraction`` of the ground-truth head-neck distance."""
    if HEAD not in gt or NECK not in gt:
        raise ValueError("ground-truth pose must contain head and neck")
    hx, hy = gt[HEAD]
    nx, ny = gt[NECK]
    threshold = fraction * math.hypot(hx - nx, hy - ny)
    correct = 0
    for name, (gx, gy) in gt.points.items():
        if name in pred:
            px, py = pred[name]
            if math.hypot(px - gx, py - gy) <= threshold:
                correct += 1
    return correct / len(gt.points)


def mpjpe(pred: KeypointPose, gt: KeypointPose,
          normalizer: float | None = None) -> float:
    """Mean Euclidean keypoint error over jointly present keypoints, divided
    by ``normalizer`` (default: diagonal of the tight ground-truth box)."""
    matched = [name for name in gt.points if name in pred]
    if not matched:
        raise ValueError("no matched keypoints")
    if normalizer is None:
        box = keypoints_to_box(gt, 0.0)
        normalizer = math.hypot(box.w, box.h)
    if normalizer == 0:
        raise ValueError("zero normalizer")
    total = 0.0
    for name in matched:
        (px, py), (gx, gy) = pred[name], gt[name]
        total += math.hypot(px - gx, py - gy)
    return total / len(matched) / normalizer


# ---------------------------------------------------------------------------
# aggregation

def aggregate(rows, metric_keys, group_key=None) -> dict:
    """Unweighted per-group means of the given metric fields.

    ``rows`` are per-sequence mappings; ``group_key`` is a field name or a
    callable, or None for a single "overall" group. Empty input raises.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no sequence results to aggregate")
    groups: dict = {}
    for row in rows:
        if group_key is None:
            key = "overall"
        elif callable(group_key):
            key = group_key(row)
        else:
            key = row[group_key]
        groups.setdefault(key, []).append(row)
    out = {}
    for key, members in sorted(groups.items(), key=lambda kv: str(kv[0])):
        out[key] = {mk: sum(r[mk] for r in members) / len(members)
                    for mk in metric_keys}
        out[key]["count"] = len(members)
    return out
