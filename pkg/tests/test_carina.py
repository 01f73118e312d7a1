"""Carina frame detection: binarization, component boxing, gap picking."""

import json
import logging

import numpy as np
import pytest

from bronchometer.carina import (
    AUTO_DILATE_FRAME_COUNT,
    REF_CROP,
    CarinaResult,
    SearchConfig,
    candidates_csv,
    component_boxes,
    connected_components,
    detect_carina,
    dilate_3x3,
    gap_between,
    preprocess_frame,
    search_range,
)
from bronchometer.errors import CropOutOfBounds, NoCarinaFound, OverlappingBoxes
from bronchometer.geometry import BoundingBox
from bronchometer.reference import GAP_CASES
from bronchometer.volume_io import ScanManifest, ScanVolume


@pytest.mark.parametrize("case", GAP_CASES, ids=lambda c: f"gap{c.expected_gap_px}")
def test_reference_gap_cases(case):
    assert gap_between(case.box_a, case.box_b) == case.expected_gap_px


def test_gap_is_order_independent():
    case = GAP_CASES[0]
    assert gap_between(case.box_b, case.box_a) == case.expected_gap_px


def test_gap_rejects_overlapping_boxes():
    with pytest.raises(OverlappingBoxes):
        gap_between(BoundingBox(0, 0, 10, 10), BoundingBox(10, 0, 20, 10))
    with pytest.raises(OverlappingBoxes):
        gap_between(BoundingBox(0, 0, 10, 10), BoundingBox(5, 0, 20, 10))


@pytest.mark.parametrize(
    ("thickness", "expected"),
    [(0.67, (120, 200)), (1.0, (30, 80)), (2.0, (10, 40))],
)
def test_search_range_by_thickness(thickness, expected):
    assert search_range(thickness) == expected


def test_search_range_fallback_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="bronchometer.carina"):
        assert search_range(5.0, frame_count=42) == (0, 41)
    assert any("no search range" in r.message for r in caplog.records)


def test_search_range_fallback_needs_frame_count():
    with pytest.raises(ValueError):
        search_range(5.0)


def _volume(width=512, height=512, frame_count=1, thickness=1.0):
    manifest = ScanManifest(
        scan_id="t",
        frame_count=frame_count,
        width=width,
        height=height,
        slice_thickness_mm=thickness,
        pixel_spacing_mm=(0.7, 0.7),
        window="mediastinum",
    )
    return ScanVolume(manifest=manifest, frames=np.full((frame_count, height, width), 255, np.uint8))


def test_config_crop_scales_per_axis():
    assert SearchConfig.for_volume(_volume(512, 512)).crop_box == REF_CROP
    assert SearchConfig.for_volume(_volume(256, 256)).crop_box == BoundingBox(60, 100, 175, 150)
    # x follows width, y follows height on non-square frames
    assert SearchConfig.for_volume(_volume(512, 340)).crop_box == BoundingBox(120, 133, 350, 199)


def test_config_dilate_modes():
    vol = _volume()
    assert SearchConfig.for_volume(vol, dilate="on").dilation_enabled
    assert not SearchConfig.for_volume(vol, dilate="off").dilation_enabled
    with pytest.raises(ValueError):
        SearchConfig.for_volume(vol, dilate="maybe")


def test_config_auto_dilate_on_long_scans():
    short = _volume()
    short.manifest.frame_count = AUTO_DILATE_FRAME_COUNT
    assert not SearchConfig.for_volume(short, frame_range=(0, 0)).dilation_enabled
    long = _volume()
    long.manifest.frame_count = AUTO_DILATE_FRAME_COUNT + 1
    assert SearchConfig.for_volume(long, frame_range=(0, 0)).dilation_enabled


def test_preprocess_binarizes_inside_crop_only():
    frame = np.zeros((8, 8), np.uint8)
    frame[3, 3] = 200  # inside crop -> white
    frame[0, 0] = 200  # outside crop -> forced to 0
    out = preprocess_frame(frame, BoundingBox(2, 2, 5, 5))
    expected = np.zeros((8, 8), np.uint8)
    expected[3, 3] = 255
    assert np.array_equal(out, expected)
    assert set(np.unique(out)) <= {0, 255}


def test_preprocess_rejects_crop_outside_frame():
    with pytest.raises(CropOutOfBounds):
        preprocess_frame(np.zeros((8, 8), np.uint8), BoundingBox(0, 0, 8, 7))


def test_dilate_grows_black_by_one():
    binary = np.full((5, 5), 255, np.uint8)
    binary[2, 2] = 0
    out = dilate_3x3(binary)
    expected = np.full((5, 5), 255, np.uint8)
    expected[1:4, 1:4] = 0
    assert np.array_equal(out, expected)


def test_components_first_raster_order_and_8_connectivity():
    binary = np.full((6, 8), 255, np.uint8)
    binary[4, 1] = 0  # second component (later first-raster pixel)
    binary[1, 5] = 0  # first component, with a diagonal neighbor
    binary[2, 6] = 0
    comps = connected_components(binary)
    assert len(comps) == 2
    assert [tuple(c[0]) for c in comps] == [(1, 5), (4, 1)]
    assert len(comps[0]) == 2  # diagonal pixels join via 8-connectivity


def test_component_boxes_area_bounds():
    # Boxes measure extent products; (200, 1500] drops 200, keeps 210 and 1500, drops 1550.
    def blob(h, w):
        binary = np.full((60, 60), 255, np.uint8)
        binary[1 : 1 + h, 1 : 1 + w] = 0
        return connected_components(binary)

    assert component_boxes(blob(21, 11)) == []  # 10*20 = 200, min is exclusive
    assert component_boxes(blob(22, 11)) == [BoundingBox(1, 1, 11, 22)]  # 10*21 = 210
    assert component_boxes(blob(51, 31)) == [BoundingBox(1, 1, 31, 51)]  # 30*50 = 1500, max inclusive
    assert component_boxes(blob(52, 32)) == []  # 31*51 = 1581
    assert component_boxes(blob(21, 11), area_range=(199, 1500)) == [BoundingBox(1, 1, 11, 21)]


def _synthetic_volume(frames_spec, size=64):
    """frames_spec: list of lists of (x0, x1) column spans; each span becomes a
    black rectangle over rows 10..29 (box extent 19 high)."""
    frames = np.full((len(frames_spec), size, size), 255, np.uint8)
    for i, spans in enumerate(frames_spec):
        for x0, x1 in spans:
            frames[i, 10:30, x0 : x1 + 1] = 0
    manifest = ScanManifest(
        scan_id="synth",
        frame_count=len(frames_spec),
        width=size,
        height=size,
        slice_thickness_mm=1.0,
        pixel_spacing_mm=(0.7, 0.7),
        window="mediastinum",
    )
    return ScanVolume(manifest=manifest, frames=frames)


def _config(volume, **kwargs):
    return SearchConfig.for_volume(
        volume, frame_range=(0, volume.frame_count - 1), crop_box=BoundingBox(0, 0, 63, 63), **kwargs
    )


def test_detect_picks_smallest_gap():
    # frame 0: single box; frame 1: gap 6; frame 2: gap 4 -> frame 2 wins
    vol = _synthetic_volume(
        [
            [(5, 19)],
            [(5, 19), (25, 39)],
            [(5, 19), (23, 37)],
        ]
    )
    res = detect_carina(vol, _config(vol))
    assert (res.carina_frame, res.gap_px) == (2, 4)
    assert [c.frame_index for c in res.candidates] == [1, 2]
    assert res.box_a == BoundingBox(5, 10, 19, 29)
    assert res.box_b == BoundingBox(23, 10, 37, 29)


def test_detect_gap_tie_goes_to_earlier_frame():
    vol = _synthetic_volume(
        [
            [(5, 19), (24, 38)],
            [(5, 19), (24, 38)],
        ]
    )
    assert detect_carina(vol, _config(vol)).carina_frame == 0


def test_detect_requires_exactly_two_boxes():
    vol = _synthetic_volume([[(2, 16), (20, 34), (38, 52)]])
    with pytest.raises(NoCarinaFound):
        detect_carina(vol, _config(vol))


def test_detect_gap_bounds_are_exclusive_inclusive():
    # gap 3 is out ((3, 7]), gap 7 is in
    vol3 = _synthetic_volume([[(5, 19), (22, 36)]])
    with pytest.raises(NoCarinaFound):
        detect_carina(vol3, _config(vol3))
    vol7 = _synthetic_volume([[(5, 19), (26, 40)]])
    assert detect_carina(vol7, _config(vol7)).gap_px == 7


def test_detect_dilation_closes_wide_gaps():
    # gap 8 is out of range until dilation grows each box by one pixel
    vol = _synthetic_volume([[(5, 19), (27, 41)]])
    with pytest.raises(NoCarinaFound):
        detect_carina(vol, _config(vol))
    res = detect_carina(vol, _config(vol, dilate="on"))
    assert (res.carina_frame, res.gap_px) == (0, 6)


def test_detect_respects_frame_range():
    vol = _synthetic_volume(
        [
            [(5, 19), (25, 39)],
            [(5, 19), (25, 39)],
        ]
    )
    cfg = _config(vol)
    cfg.frame_range = (1, 1)
    assert detect_carina(vol, cfg).carina_frame == 1


def test_result_json_round_trip_excludes_timings():
    vol = _synthetic_volume([[(5, 19), (25, 39)]])
    res = detect_carina(vol, _config(vol))
    data = json.loads(json.dumps(res.to_json()))
    assert set(data.keys()) == {"carina_frame", "gap_px", "box_a", "box_b", "candidates"}
    back = CarinaResult.from_json(data)
    assert back.carina_frame == res.carina_frame
    assert back.box_a == res.box_a and back.box_b == res.box_b
    assert [c.gap_px for c in back.candidates] == [c.gap_px for c in res.candidates]


def test_candidates_csv_shape():
    vol = _synthetic_volume([[(5, 19), (25, 39)]])
    text = candidates_csv(detect_carina(vol, _config(vol)))
    lines = text.splitlines()
    assert lines[0] == "frame_index,box_a,box_b,gap_px"
    assert lines[1] == '0,"(5, 10, 19, 29)","(25, 10, 39, 29)",6'
    assert text.endswith("\n")


def test_detect_on_trachea_phantom(trachea_small):
    volume, split = trachea_small
    res = detect_carina(volume, SearchConfig.for_volume(volume))
    assert res.carina_frame == split == 40
    assert res.gap_px == 5
    # the gap grows by one per frame past the split
    assert [(c.frame_index, c.gap_px) for c in res.candidates] == [(40, 5), (41, 6), (42, 7)]
    assert res.box_a == BoundingBox(213, 237, 233, 253)
    assert res.box_b == BoundingBox(238, 237, 258, 253)
