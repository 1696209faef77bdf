import datetime

import pytest

from ltrack.datamodel import (Discipline, FrameAnnotation, MCVideo, VideoMeta,
                              Visibility, Weather)
from ltrack.geometry import BBox, FrameDims


def make_meta(discipline=Discipline.AL, weather=Weather.SUNNY,
              athlete_id="A001", location="Kitzbuehel",
              date=datetime.date(2023, 1, 21), fps=30.0,
              resolution=FrameDims(1280.0, 720.0), **extra):
    return VideoMeta(discipline=discipline, sub_discipline="slalom",
                     weather=weather, athlete_id=athlete_id,
                     athlete_nationality="ITA", location=location,
                     country="AUT", date=date, fps=fps, resolution=resolution,
                     performance_params=extra)


def make_video(boxes, camera_ids=None, visibility=None, video_id="v000",
               **meta_kw):
    """Build an MCVideo from a list of (x, y, w, h) tuples."""
    n = len(boxes)
    camera_ids = camera_ids or [1] * n
    visibility = visibility or [Visibility.VISIBLE] * n
    frames = tuple(
        FrameAnnotation(t, BBox(*boxes[t]), visibility[t], camera_ids[t])
        for t in range(n))
    return MCVideo(id=video_id, frames=frames, meta=make_meta(**meta_kw))


@pytest.fixture
def simple_video():
    return make_video([(10.0 + 2 * t, 20.0 + t, 40.0, 60.0)
                       for t in range(12)])
