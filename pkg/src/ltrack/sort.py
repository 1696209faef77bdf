"""Tracking-by-detection association core: constant-velocity Kalman tracks,
IoU-cost assignment, lifecycle rules, and a single-target backend that
follows the track seeded by the initialization box.

State per track is [u, v, s, r, du, dv, ds]: center, area, aspect ratio and
the velocities of the first three.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import iou_matrix
from .assignment import hungarian
from .geometry import BBox
from .metrics import Prediction
from .protocol import DetectionStream, FrameContext, TrackerBackend


@dataclass(frozen=True)
class SortParams:
    """Classic SORT defaults; all gates and noise magnitudes configurable."""

    iou_gate: float = 0.3
    max_age: int = 1
    min_hits: int = 3
    # noise covariances (diagonals) in [u, v, s, r] measurement space and
    # the 7-dim state space: large initial velocity variance, small process
    # noise on velocities
    measurement_noise: tuple = (1.0, 1.0, 10.0, 10.0)
    initial_covariance: tuple = (10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4)
    process_noise: tuple = (1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4)


_F = np.eye(7)
_F[0, 4] = _F[1, 5] = _F[2, 6] = 1.0
_H = np.eye(4, 7)


def box_to_measurement(box: BBox) -> np.ndarray:
    if box.w <= 0 or box.h <= 0:
        raise ValueError(f"measurement must have positive area: {box!r}")
    return np.array([box.x + box.w / 2.0, box.y + box.h / 2.0,
                     box.w * box.h, box.w / box.h])


def measurement_to_box(z) -> BBox:
    u, v, s, r = float(z[0]), float(z[1]), float(z[2]), float(z[3])
    s = max(s, 0.0)
    if s == 0.0 or r <= 0.0:
        return BBox(u, v, 0.0, 0.0)
    w = math.sqrt(s * r)
    h = s / w
    return BBox(u - w / 2.0, v - h / 2.0, w, h)


class KalmanTrack:
    """One constant-velocity track with lifecycle counters."""

    def __init__(self, box: BBox, track_id: int, params: SortParams | None = None):
        params = params or SortParams()
        self.params = params
        self.id = track_id
        self.x = np.zeros(7)
        self.x[:4] = box_to_measurement(box)
        self.P = np.diag(params.initial_covariance).astype(np.float64)
        self.Q = np.diag(params.process_noise).astype(np.float64)
        self.R = np.diag(params.measurement_noise).astype(np.float64)
        self.hits = 1
        self.age = 0
        self.time_since_update = 0

    @property
    def box(self) -> BBox:
        return measurement_to_box(self.x[:4])

    def predict(self, dt: int = 1) -> "KalmanTrack":
        for _ in range(dt):
            if self.x[2] + self.x[6] <= 0:
                self.x[6] = 0.0
            self.x = _F @ self.x
            self.P = _F @ self.P @ _F.T + self.Q
            self.P = (self.P + self.P.T) / 2.0
        self.age += dt
        self.time_since_update += dt
        return self

    def update(self, box: BBox) -> "KalmanTrack":
        z = box_to_measurement(box)
        S = _H @ self.P @ _H.T + self.R
        K = self.P @ _H.T @ np.linalg.inv(S)
        self.x = self.x + K @ (z - _H @ self.x)
        # Joseph form keeps the covariance PSD under repeated cycles
        A = np.eye(7) - K @ _H
        self.P = A @ self.P @ A.T + K @ self.R @ K.T
        self.P = (self.P + self.P.T) / 2.0
        self.hits += 1
        self.time_since_update = 0
        return self


def kalman_predict(track: KalmanTrack, dt: int = 1) -> KalmanTrack:
    return track.predict(dt)


def kalman_update(track: KalmanTrack, box: BBox) -> KalmanTrack:
    return track.update(box)


def sort_step(tracks, detections, iou_gate: float = 0.3, max_age: int = 1,
              min_hits: int = 3, next_id: int | None = None,
              params: SortParams | None = None):
    """One association step over already-predicted tracks.

    Matches by 1 - IoU, rejects matches under ``iou_gate``, updates matched
    tracks, spawns tracks for unmatched detections, drops tracks unseen for
    more than ``max_age`` frames. Returns (tracks, outputs, next_id) where
    outputs are the tracks passing the emission rule.
    """
    tracks = list(tracks)
    detections = list(detections)
    if next_id is None:
        next_id = max((t.id for t in tracks), default=-1) + 1

    if tracks and detections:
        tboxes = np.array([t.box.as_tuple() for t in tracks])
        dboxes = np.array([d.as_tuple() for d in detections])
        overlap = iou_matrix(tboxes, dboxes)
        assignment = hungarian(1.0 - overlap)
        matched = [(ti, di) for ti, di in assignment.matches
                   if overlap[ti, di] >= iou_gate]
    else:
        matched = []
    matched_t = {ti for ti, _ in matched}
    matched_d = {di for _, di in matched}

    for ti, di in matched:
        tracks[ti].update(detections[di])
    for di, det in enumerate(detections):
        if di not in matched_d:
            tracks.append(KalmanTrack(det, next_id, params))
            next_id += 1
    tracks = [t for t in tracks if t.time_since_update <= max_age]
    outputs = [t for t in tracks if t.hits >= min_hits or t.age < min_hits]
    return tracks, outputs, next_id


class SortBackend(TrackerBackend):
    """Single-target view of the multi-track associator: reports the track
    seeded from the initialization box, coasting with decaying confidence."""

    search_area_factor = 5.0

    def __init__(self, stream: DetectionStream, params: SortParams | None = None):
        self.stream = stream
        self.params = params or SortParams()
        self.tracks: list = []
        self.seeded_id: int | None = None
        self._next_id = 0

    def init(self, ctx: FrameContext, box: BBox) -> None:
        self.tracks = []
        seeded = KalmanTrack(box, self._next_id, self.params)
        seeded.hits = self.params.min_hits  # reports immediately
        self.seeded_id = seeded.id
        self._next_id += 1
        self.tracks.append(seeded)

    def update(self, ctx: FrameContext) -> Prediction:
        if self.seeded_id is None:
            raise RuntimeError("update before init")
        for t in self.tracks:
            t.predict()
        detections = [d.box for d in self.stream.at(ctx.t)]
        self.tracks, _, self._next_id = sort_step(
            self.tracks, detections,
            iou_gate=self.params.iou_gate, max_age=self.params.max_age,
            min_hits=self.params.min_hits, next_id=self._next_id,
            params=self.params)
        seeded = next((t for t in self.tracks if t.id == self.seeded_id), None)
        if seeded is None:
            return Prediction(None, 0.0)
        confidence = 1.0 / (1.0 + seeded.time_since_update)
        return Prediction(seeded.box, confidence)


def sort_backend(stream: DetectionStream,
                 params: SortParams | None = None) -> SortBackend:
    return SortBackend(stream, params)
