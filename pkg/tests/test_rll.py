"""Lobe separation: start point, ray endpoint, polygon fill, frame walk."""

import numpy as np
import pytest

from bronchometer.carina import CarinaResult
from bronchometer.errors import DegenerateAngle
from bronchometer.geometry import BoundingBox
from bronchometer.rll import (
    RllSchedule,
    advance_endpoint,
    build_polygon,
    crop_polygon,
    extract_rll,
    initial_endpoint,
    polygon_mask,
    start_point_from_boxes,
)
from bronchometer.volume_io import ScanManifest, ScanVolume


@pytest.mark.parametrize(
    ("thickness", "expected"),
    [(0.67, (10, 5)), (1.0, (25, 12)), (2.0, (50, 25))],
)
def test_schedule_by_thickness(thickness, expected):
    s = RllSchedule.for_thickness(thickness)
    assert (s.dx, s.dy) == expected
    assert s.angle_deg == 270.0


def test_schedule_rejects_unknown_thickness():
    with pytest.raises(ValueError):
        RllSchedule.for_thickness(5.0)


def test_schedule_validates_fields():
    with pytest.raises(ValueError):
        RllSchedule(dx=0, dy=5)
    with pytest.raises(ValueError):
        RllSchedule(dx=5, dy=5, angle_deg=90.0)


def test_start_point_from_boxes():
    # rightmost box edge, higher (smaller y) of the two box bottoms
    a = BoundingBox(213, 227, 245, 252)
    b = BoundingBox(249, 218, 277, 237)
    assert start_point_from_boxes(a, b) == (277, 237)
    assert start_point_from_boxes(b, a) == (277, 237)


def test_initial_endpoint_straight_down():
    assert initial_endpoint((10, 5), 270.0, 64, 64) == (10, 63)


def test_initial_endpoint_diagonal_exits_left():
    # 225 deg from (10, 5): the x=0 edge is closer than the bottom edge
    assert initial_endpoint((10, 5), 225.0, 64, 64) == (0, 15)


def test_initial_endpoint_degenerate():
    # due west from the left edge reaches neither the left nor bottom edge
    with pytest.raises(DegenerateAngle):
        initial_endpoint((0, 5), 180.0, 64, 64)


def test_advance_endpoint_walks_left_then_up():
    s = RllSchedule(dx=5, dy=3)
    assert advance_endpoint((10, 63), s) == (5, 63)
    assert advance_endpoint((3, 63), s) == (0, 63)  # clamped at the edge
    assert advance_endpoint((0, 63), s) == (0, 60)
    assert advance_endpoint((0, 2), s) == (0, 0)


def test_build_polygon_corners():
    poly = build_polygon((10, 2), (4, 11), 12)
    assert poly.points() == [(10, 2), (4, 11), (0, 11), (10, 11)]
    assert poly.to_json() == {
        "start": [10, 2],
        "end": [4, 11],
        "fourth": [0, 11],
        "right": [10, 11],
    }


def test_polygon_mask_keeps_wedge_right_of_cut():
    poly = build_polygon((10, 2), (4, 11), 12)
    mask = polygon_mask(poly, 12, 12)
    assert all(mask[y, x] for x, y in poly.points())  # vertices always included
    assert mask[8, 7] and not mask[8, 5]  # cut line passes x=6 at y=8
    assert not mask[0, 0] and not mask[2, 0]
    assert mask[11, :11].all() and not mask[11, 11]  # bottom boundary span
    assert mask[2:12, 10].all()  # right boundary column


def test_crop_polygon_blanks_outside():
    poly = build_polygon((10, 2), (4, 11), 12)
    frame = np.full((12, 12), 7, np.uint8)
    out = crop_polygon(frame, poly)
    mask = polygon_mask(poly, 12, 12)
    assert (out[mask] == 7).all()
    assert (out[~mask] == 0).all()


def _volume(frame_count=5, size=64):
    manifest = ScanManifest(
        scan_id="t",
        frame_count=frame_count,
        width=size,
        height=size,
        slice_thickness_mm=1.0,
        pixel_spacing_mm=(0.7, 0.7),
        window="mediastinum",
    )
    return ScanVolume(manifest=manifest, frames=np.full((frame_count, size, size), 7, np.uint8))


def _carina(frame=1):
    return CarinaResult(
        carina_frame=frame,
        gap_px=6,
        box_a=BoundingBox(5, 10, 19, 29),
        box_b=BoundingBox(25, 10, 39, 29),
        candidates=[],
        timings_s=(0.0, 0.0, 0.0),
    )


def test_extract_covers_frames_after_carina():
    out = extract_rll(_volume(), _carina(frame=1), schedule=RllSchedule(5, 3))
    assert [idx for idx, _, _ in out] == [2, 3, 4]


def test_extract_advances_before_first_crop():
    # start (39, 29), ray exits bottom at (39, 63); the first emitted polygon
    # already has the endpoint advanced one step left
    out = extract_rll(_volume(), _carina(frame=1), schedule=RllSchedule(5, 3))
    ends = [poly.end for _, _, poly in out]
    assert ends == [(34, 63), (29, 63), (24, 63)]
    starts = {poly.start for _, _, poly in out}
    assert starts == {(39, 29)}


def test_extract_crops_match_polygons():
    volume = _volume()
    out = extract_rll(volume, _carina(frame=2), schedule=RllSchedule(5, 3))
    assert len(out) == 2
    for idx, cropped, poly in out:
        assert np.array_equal(cropped, crop_polygon(volume.frame(idx), poly))
        mask = polygon_mask(poly, 64, 64)
        assert (cropped[~mask] == 0).all()
        assert (cropped[mask] == 7).all()


def test_extract_at_last_frame_is_empty():
    assert extract_rll(_volume(), _carina(frame=4), schedule=RllSchedule(5, 3)) == []


def test_extract_uses_thickness_schedule_by_default():
    # manifest thickness 1.0 -> dx 25: endpoint walks 39 -> 14 -> 0
    out = extract_rll(_volume(), _carina(frame=2))
    assert [poly.end for _, _, poly in out] == [(14, 63), (0, 63)]
