"""Data schema for annotated multi-camera runs and the file formats around it.

An annotation document is a ``key: value`` metadata header, a blank line, then
one CSV row per frame: ``t,x,y,w,h,visibility,camera_id`` (visibility V or O).
Keypoint files are CSV: ``frame,joint_name,x,y,present``.
"""
from __future__ import annotations

import datetime as _dt
import io
import math
from dataclasses import dataclass, field
from enum import Enum

from .geometry import BBox, FrameDims, center, from_center


class ParseError(ValueError):
    """Malformed annotation or keypoint document; carries line context."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvariantError(ValueError):
    """Structurally valid document violating a schema invariant."""


class Visibility(Enum):
    VISIBLE = "V"
    OCCLUDED = "O"


class Discipline(Enum):
    AL = "AL"
    JP = "JP"
    FS = "FS"


class Weather(Enum):
    SUNNY = "Sunny"
    CLOUDY = "Cloudy"
    HARSH = "Harsh"


class SplitCondition(Enum):
    DATE = "date"
    ATHLETE = "athlete"
    LOCATION = "location"


# Per-clip attribute flags; four are computed by rule, the rest are manual.
AUTO_ATTRIBUTES = ("SC", "ARC", "FM", "LR")
MANUAL_ATTRIBUTES = ("CM", "BC", "IV", "POC", "MB", "FOC")
ALL_ATTRIBUTES = ("CM", "SC", "BC", "ARC", "IV", "POC", "MB", "FM", "FOC", "LR")


@dataclass(frozen=True)
class AttributeSet:
    """Boolean flag per attribute name; provenance is fixed by the name."""

    flags: dict

    def __post_init__(self):
        unknown = set(self.flags) - set(ALL_ATTRIBUTES)
        if unknown:
            raise ValueError(f"unknown attributes: {sorted(unknown)}")

    def __getitem__(self, name: str) -> bool:
        return bool(self.flags.get(name, False))

    @staticmethod
    def provenance(name: str) -> str:
        if name not in ALL_ATTRIBUTES:
            raise ValueError(f"unknown attribute: {name}")
        return "automatic" if name in AUTO_ATTRIBUTES else "manual"

    @classmethod
    def from_auto(cls, auto_flags: dict, manual_flags: dict | None = None) -> "AttributeSet":
        flags = {name: False for name in ALL_ATTRIBUTES}
        flags.update(manual_flags or {})
        for name in auto_flags:
            if name not in AUTO_ATTRIBUTES:
                raise ValueError(f"{name} is not an automatic attribute")
        flags.update(auto_flags)
        return cls(flags)


@dataclass(frozen=True)
class FrameAnnotation:
    t: int
    box: BBox
    visibility: Visibility
    camera_id: int

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("frame index must be >= 0")
        if self.camera_id < 1:
            raise ValueError("camera_id must be >= 1")


@dataclass(frozen=True)
class VideoMeta:
    discipline: Discipline
    sub_discipline: str
    weather: Weather
    athlete_id: str
    athlete_nationality: str
    location: str
    country: str
    date: _dt.date
    fps: float
    resolution: FrameDims
    performance_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError("fps must be positive")


@dataclass(frozen=True)
class MCVideo:
    id: str
    frames: tuple
    meta: VideoMeta

    def __post_init__(self):
        if not self.frames:
            raise InvariantError(f"video {self.id}: no frames")
        for i, fr in enumerate(self.frames):
            if fr.t != i:
                raise InvariantError(
                    f"video {self.id}: frame indices must be contiguous from 0 "
                    f"(got {fr.t} at position {i})")

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class SCClip:
    """Maximal single-camera run [start, end] (inclusive) of an MC video."""

    video_id: str
    camera_id: int
    start: int
    end: int
    attributes: AttributeSet | None = None

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("clip start must be <= end")

    def __len__(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class KeypointPose:
    """Named 2D keypoints; a joint absent from the map is not present."""

    points: dict

    def __post_init__(self):
        for name, (x, y) in self.points.items():
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"keypoint {name} has non-finite coordinates")

    def __contains__(self, name: str) -> bool:
        return name in self.points

    def __getitem__(self, name: str) -> tuple:
        return self.points[name]


# ---------------------------------------------------------------------------
# parsing / serialization

_HEADER_KEYS = ("id", "discipline", "sub_discipline", "weather", "athlete_id",
                "nationality", "location", "country", "date", "fps",
                "width", "height")


def parse_annotations(stream) -> MCVideo:
    """Parse one annotation document (bytes, text, or file-like) to MCVideo."""
    text = _as_text(stream)
    lines = text.split("\n")
    header: dict[str, str] = {}
    lineno = 0
    for lineno, line in enumerate(lines, start=1):
        if line.strip() == "":
            break
        if ":" not in line:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno)
        key, _, value = line.partition(":")
        header[key.strip()] = value.strip()
    else:
        raise ParseError("missing blank line separating header and frames")

    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise ParseError(f"missing header keys: {missing}")
    try:
        meta = VideoMeta(
            discipline=Discipline(header["discipline"]),
            sub_discipline=header["sub_discipline"],
            weather=Weather(header["weather"]),
            athlete_id=header["athlete_id"],
            athlete_nationality=header["nationality"],
            location=header["location"],
            country=header["country"],
            date=_dt.date.fromisoformat(header["date"]),
            fps=float(header["fps"]),
            resolution=FrameDims(float(header["width"]), float(header["height"])),
            performance_params={k: v for k, v in header.items()
                                if k not in _HEADER_KEYS},
        )
    except (ValueError, KeyError) as exc:
        raise ParseError(f"bad header value: {exc}") from exc

    frames = []
    for off, line in enumerate(lines[lineno:], start=lineno + 1):
        if line.strip() == "":
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise ParseError(f"expected 7 CSV fields, got {len(parts)}", off)
        try:
            t = int(parts[0])
            box = BBox(*(float(p) for p in parts[1:5]))
            visibility = Visibility(parts[5].strip())
            camera_id = int(parts[6])
            frames.append(FrameAnnotation(t, box, visibility, camera_id))
        except ValueError as exc:
            raise ParseError(str(exc), off) from exc
    return MCVideo(id=header["id"], frames=tuple(frames), meta=meta)


def serialize_annotations(video: MCVideo) -> str:
    """Inverse of :func:`parse_annotations` (lossless round-trip)."""
    m = video.meta
    out = io.StringIO()
    out.write(f"id: {video.id}\n")
    out.write(f"discipline: {m.discipline.value}\n")
    out.write(f"sub_discipline: {m.sub_discipline}\n")
    out.write(f"weather: {m.weather.value}\n")
    out.write(f"athlete_id: {m.athlete_id}\n")
    out.write(f"nationality: {m.athlete_nationality}\n")
    out.write(f"location: {m.location}\n")
    out.write(f"country: {m.country}\n")
    out.write(f"date: {m.date.isoformat()}\n")
    out.write(f"fps: {_fmt(m.fps)}\n")
    out.write(f"width: {_fmt(m.resolution.width)}\n")
    out.write(f"height: {_fmt(m.resolution.height)}\n")
    for key in sorted(m.performance_params):
        out.write(f"{key}: {m.performance_params[key]}\n")
    out.write("\n")
    for fr in video.frames:
        b = fr.box
        out.write(f"{fr.t},{_fmt(b.x)},{_fmt(b.y)},{_fmt(b.w)},{_fmt(b.h)},"
                  f"{fr.visibility.value},{fr.camera_id}\n")
    return out.getvalue()


def parse_keypoints(stream) -> dict:
    """Parse a keypoint CSV to {frame: KeypointPose} (present joints only)."""
    text = _as_text(stream)
    per_frame: dict[int, dict] = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.strip() == "" or line.startswith("frame,"):
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ParseError(f"expected 5 CSV fields, got {len(parts)}", lineno)
        try:
            t = int(parts[0])
            name = parts[1].strip()
            x, y = float(parts[2]), float(parts[3])
            present = parts[4].strip() in ("1", "true", "True")
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
        if present:
            per_frame.setdefault(t, {})[name] = (x, y)
    return {t: KeypointPose(points) for t, points in sorted(per_frame.items())}


def _as_text(stream) -> str:
    if isinstance(stream, bytes):
        return stream.decode("utf-8")
    if isinstance(stream, str):
        return stream
    data = stream.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def _fmt(value: float) -> str:
    """Shortest lossless float rendering; integers stay integer-looking."""
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


# ---------------------------------------------------------------------------
# derived computations

def segment_clips(video: MCVideo) -> list:
    """Split a video into maximal runs of equal camera_id, in order."""
    clips = []
    start = 0
    cam = video.frames[0].camera_id
    for fr in video.frames[1:]:
        if fr.camera_id != cam:
            clips.append(SCClip(video.id, cam, start, fr.t - 1))
            start = fr.t
            cam = fr.camera_id
    clips.append(SCClip(video.id, cam, start, video.frames[-1].t))
    return clips


def compute_auto_attributes(frames, ratio_range=(0.5, 2.0),
                            low_res_area=1000.0) -> dict:
    """Rule-based SC/ARC/FM/LR flags for one clip's frames.

    SC/ARC compare the first frame's box area / aspect ratio against every
    later frame; the flag fires when the ratio leaves ``ratio_range``.
    FM fires when a center displacement between consecutive frames exceeds
    sqrt(w*h) of the earlier box. LR fires when any box area is below
    ``low_res_area`` (px^2).
    """
    frames = list(frames)
    if not frames:
        raise ValueError("empty clip")
    first = frames[0].box
    lo, hi = ratio_range

    sc = arc = fm = lr = False
    if any(fr.box.area < low_res_area for fr in frames):
        lr = True
    for fr in frames[1:]:
        box = fr.box
        if first.area <= 0:
            raise InvariantError("zero-area first box: SC/ARC undefined")
        if box.area > 0:
            ratio = first.area / box.area
            if not (lo <= ratio <= hi):
                sc = True
        else:
            sc = True
        if first.h <= 0 or box.h <= 0 or box.w <= 0 or first.w <= 0:
            raise InvariantError("degenerate box: aspect ratio undefined")
        ar_ratio = first.aspect / box.aspect
        if not (lo <= ar_ratio <= hi):
            arc = True
    for prev, cur in zip(frames, frames[1:]):
        (px, py), (cx, cy) = center(prev.box), center(cur.box)
        displacement = math.hypot(cx - px, cy - py)
        if displacement > math.sqrt(prev.box.area):
            fm = True
            break
    return {"SC": sc, "ARC": arc, "FM": fm, "LR": lr}


def keypoints_to_box(pose: KeypointPose, padding_fraction: float = 0.0) -> BBox:
    """Tight box over present keypoints, symmetrically inflated by padding."""
    if not pose.points:
        raise ValueError("no present keypoints")
    xs = [p[0] for p in pose.points.values()]
    ys = [p[1] for p in pose.points.values()]
    x1, x2 = min(xs), max(xs)
    y1, y2 = min(ys), max(ys)
    w, h = x2 - x1, y2 - y1
    tight = BBox(x1, y1, w, h)
    if padding_fraction == 0.0:
        return tight
    return from_center(center(tight), w * (1.0 + padding_fraction),
                       h * (1.0 + padding_fraction))


def generate_splits(videos, condition: SplitCondition,
                    train_fraction: float = 0.6, seed: int | None = None):
    """Partition videos into train/test ids under a split condition.

    Date: per discipline, chronological order, first ceil(f*N) go to train.
    Athlete/Location: all videos sharing the condition key stay together;
    groups are packed greedily (descending size, ties by key) into train
    while every touched discipline is still under its per-discipline target,
    so the condition-key sets of train and test are disjoint.

    ``seed`` is accepted for interface symmetry with the generators; the
    packing itself is deterministic and does not consume it.
    """
    videos = list(videos)
    if len(videos) < 2:
        raise ValueError("need at least 2 videos to split")
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must be in (0, 1)")

    def key_of(v: MCVideo):
        if condition is SplitCondition.DATE:
            value = v.meta.date
        elif condition is SplitCondition.ATHLETE:
            value = v.meta.athlete_id
        else:
            value = v.meta.location
        if value in (None, ""):
            raise ValueError(f"video {v.id}: missing {condition.value} metadata")
        return value

    per_disc: dict[Discipline, list] = {}
    for v in videos:
        key_of(v)  # validate metadata up front
        per_disc.setdefault(v.meta.discipline, []).append(v)
    targets = {d: math.ceil(train_fraction * len(vs))
               for d, vs in per_disc.items()}

    train: list[str] = []
    test: list[str] = []
    if condition is SplitCondition.DATE:
        for d, vs in per_disc.items():
            ordered = sorted(vs, key=lambda v: (v.meta.date, v.id))
            train += [v.id for v in ordered[:targets[d]]]
            test += [v.id for v in ordered[targets[d]:]]
    else:
        groups: dict[str, list] = {}
        for v in videos:
            groups.setdefault(key_of(v), []).append(v)
        counts = {d: 0 for d in per_disc}
        ordered_groups = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
        for _, members in ordered_groups:
            touched = {v.meta.discipline for v in members}
            if all(counts[d] < targets[d] for d in touched):
                train += [v.id for v in members]
                for v in members:
                    counts[v.meta.discipline] += 1
            else:
                test += [v.id for v in members]
    return sorted(train), sorted(test)
