import datetime

import numpy as np
import pytest

from conftest import make_meta, make_video
from ltrack.datamodel import (AttributeSet, Discipline, FrameAnnotation,
                              InvariantError, KeypointPose, MCVideo,
                              ParseError, SplitCondition, Visibility,
                              compute_auto_attributes, generate_splits,
                              keypoints_to_box, parse_annotations,
                              parse_keypoints, segment_clips,
                              serialize_annotations)
from ltrack.geometry import BBox

MINIMAL_DOC = """\
id: v1
discipline: AL
sub_discipline: slalom
weather: Sunny
athlete_id: A1
nationality: ITA
location: Wengen
country: SUI
date: 2023-02-03
fps: 30
width: 1280
height: 720

0,10,20,30,40,V,1
"""


def test_parse_minimal():
    v = parse_annotations(MINIMAL_DOC)
    assert len(v) == 1
    assert v.id == "v1"
    assert v.frames[0].box == BBox(10, 20, 30, 40)
    assert v.meta.date == datetime.date(2023, 2, 3)


def test_parse_multi_camera_then_segment():
    doc = MINIMAL_DOC + "1,10,20,30,40,O,1\n2,50,60,30,40,V,2\n"
    v = parse_annotations(doc)
    clips = segment_clips(v)
    assert [(c.camera_id, c.start, c.end) for c in clips] == [(1, 0, 1), (2, 2, 2)]
    assert v.frames[1].visibility is Visibility.OCCLUDED


def test_parse_frame_gap_rejected():
    doc = MINIMAL_DOC + "2,10,20,30,40,V,1\n"
    with pytest.raises(InvariantError):
        parse_annotations(doc)


def test_parse_bad_row_reports_line():
    doc = MINIMAL_DOC + "1,10,20,30,40,X,1\n"
    with pytest.raises(ParseError) as err:
        parse_annotations(doc)
    assert "line 15" in str(err.value)


def test_parse_missing_header_key():
    doc = MINIMAL_DOC.replace("fps: 30\n", "")
    with pytest.raises(ParseError, match="fps"):
        parse_annotations(doc)


def test_extra_header_keys_to_performance_params():
    doc = MINIMAL_DOC.replace("\n0,", "gate_count: 42\n\n0,")
    v = parse_annotations(doc)
    assert v.meta.performance_params == {"gate_count": "42"}


def test_roundtrip_identity_random():
    rng = np.random.default_rng(17)
    for k in range(25):
        n = int(rng.integers(1, 40))
        boxes = [tuple(np.round(rng.uniform(0, 500, 4), 3)) for _ in range(n)]
        cams = np.sort(rng.integers(1, 4, n)).tolist()
        vis = [Visibility.OCCLUDED if rng.uniform() < 0.2 else
               Visibility.VISIBLE for _ in range(n)]
        v = make_video(boxes, camera_ids=cams, visibility=vis,
                       video_id=f"rv{k}", run_time=f"{rng.uniform():.3f}")
        assert parse_annotations(serialize_annotations(v)) == v


def test_segment_clips_runs():
    v = make_video([(0, 0, 10, 10)] * 6, camera_ids=[1, 1, 2, 2, 2, 1])
    clips = segment_clips(v)
    assert [(c.camera_id, c.start, c.end) for c in clips] == \
        [(1, 0, 1), (2, 2, 4), (1, 5, 5)]
    # disjoint cover of [0, T-1]
    covered = [t for c in clips for t in range(c.start, c.end + 1)]
    assert covered == list(range(len(v)))


def test_segment_clips_single_camera():
    v = make_video([(0, 0, 10, 10)] * 5)
    clips = segment_clips(v)
    assert len(clips) == 1 and clips[0].start == 0 and clips[0].end == 4


def test_segment_clips_26_cameras():
    v = make_video([(0, 0, 10, 10)] * 26, camera_ids=list(range(1, 27)))
    assert len(segment_clips(v)) == 26


# ---------------------------------------------------------------------------
# automatic attributes

def test_attributes_scale_change():
    v = make_video([(0, 0, 20, 20), (0, 0, 30, 30)])
    auto = compute_auto_attributes(v.frames)
    assert auto["SC"] is True  # 400/900 outside [0.5, 2]
    assert auto["ARC"] is False


def test_attributes_constant_box():
    v = make_video([(5, 5, 40, 40)] * 10)
    auto = compute_auto_attributes(v.frames)
    assert auto == {"SC": False, "ARC": False, "FM": False, "LR": False}


def test_attributes_aspect_ratio_change():
    v = make_video([(0, 0, 20, 20), (0, 0, 45, 20)])
    auto = compute_auto_attributes(v.frames)
    assert auto["ARC"] is True  # ratio 1 / 2.25 outside [0.5, 2]
    assert auto["SC"] is True   # 400/900


def test_attributes_low_resolution():
    v = make_video([(0, 0, 40, 40), (0, 0, 30, 30)])
    assert compute_auto_attributes(v.frames)["LR"] is True  # 900 < 1000
    v2 = make_video([(0, 0, 40, 40), (0, 0, 32, 32)])
    assert compute_auto_attributes(v2.frames)["LR"] is False


def test_attributes_fast_motion():
    # displacement 50 > sqrt(40*40) = 40
    v = make_video([(0, 0, 40, 40), (50, 0, 40, 40)])
    assert compute_auto_attributes(v.frames)["FM"] is True
    # displacement 30 <= 40
    v2 = make_video([(0, 0, 40, 40), (30, 0, 40, 40)])
    assert compute_auto_attributes(v2.frames)["FM"] is False


def test_attributes_zero_area_first_box():
    v = make_video([(0, 0, 0, 0), (0, 0, 10, 10)])
    with pytest.raises(InvariantError):
        compute_auto_attributes(v.frames)


def test_attribute_provenance():
    assert AttributeSet.provenance("SC") == "automatic"
    assert AttributeSet.provenance("POC") == "manual"
    with pytest.raises(ValueError):
        AttributeSet.provenance("XX")


# ---------------------------------------------------------------------------
# keypoints

def test_keypoints_to_box():
    pose = KeypointPose({"a": (0.0, 0.0), "b": (10.0, 20.0)})
    assert keypoints_to_box(pose) == BBox(0, 0, 10, 20)
    assert keypoints_to_box(pose, 0.2) == BBox(-1, -2, 12, 24)


def test_keypoints_to_box_single_point():
    pose = KeypointPose({"a": (7.0, 8.0)})
    box = keypoints_to_box(pose)
    assert (box.x, box.y, box.area) == (7.0, 8.0, 0.0)


def test_keypoints_to_box_empty():
    with pytest.raises(ValueError):
        keypoints_to_box(KeypointPose({}))


def test_parse_keypoints():
    csv = "0,head,10,20,1\n0,neck,10,40,1\n0,hip,0,0,0\n1,head,11,21,1\n"
    poses = parse_keypoints(csv)
    assert set(poses) == {0, 1}
    assert poses[0].points == {"head": (10.0, 20.0), "neck": (10.0, 40.0)}
    assert "hip" not in poses[0]


# ---------------------------------------------------------------------------
# splits

def _videos_with(metas):
    out = []
    for i, kw in enumerate(metas):
        out.append(make_video([(0, 0, 50, 50)] * 3, video_id=f"v{i:03d}", **kw))
    return out


def test_split_by_date_chronological():
    videos = _videos_with([{"date": datetime.date(2023, 1, 1 + i)}
                           for i in range(10)])
    train, test = generate_splits(videos, SplitCondition.DATE)
    assert train == [f"v{i:03d}" for i in range(6)]
    assert test == [f"v{i:03d}" for i in range(6, 10)]


def test_split_by_athlete_groups_stay_together():
    metas = [{"athlete_id": "A"} for _ in range(6)] + \
            [{"athlete_id": "B"} for _ in range(4)]
    videos = _videos_with(metas)
    train, test = generate_splits(videos, SplitCondition.ATHLETE)
    assert set(train) == {f"v{i:03d}" for i in range(6)}
    assert set(test) == {f"v{i:03d}" for i in range(6, 10)}


def test_split_disjoint_keys_and_cover():
    rng = np.random.default_rng(5)
    metas = [{"athlete_id": f"A{rng.integers(0, 6)}",
              "discipline": Discipline(["AL", "JP", "FS"][int(rng.integers(0, 3))])}
             for _ in range(30)]
    videos = _videos_with(metas)
    train, test = generate_splits(videos, SplitCondition.ATHLETE)
    assert sorted(train + test) == sorted(v.id for v in videos)
    assert not set(train) & set(test)
    by_id = {v.id: v for v in videos}
    train_keys = {by_id[i].meta.athlete_id for i in train}
    test_keys = {by_id[i].meta.athlete_id for i in test}
    assert not train_keys & test_keys


def test_split_missing_metadata():
    videos = _videos_with([{"location": ""}, {"location": "Wengen"}])
    with pytest.raises(ValueError, match="location"):
        generate_splits(videos, SplitCondition.LOCATION)


def test_split_needs_two_videos():
    videos = _videos_with([{}])
    with pytest.raises(ValueError):
        generate_splits(videos, SplitCondition.DATE)
