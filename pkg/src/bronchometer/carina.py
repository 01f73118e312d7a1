"""Carina (tracheal bifurcation) frame detection.

The trachea shows up as one dark component in the upper mediastinum; at the
carina it splits into two. Each frame in the search window is cropped to a
fixed box, binarized (any non-zero -> white, so air stays black), and the
black components are boxed. A frame whose qualifying boxes are exactly two,
non-overlapping, with a small horizontal gap between them, is a candidate;
the frame with the smallest gap wins.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import CropOutOfBounds, NoCarinaFound, OverlappingBoxes
from .geometry import BoundingBox
from .volume_io import ScanVolume, scale_rect

log = logging.getLogger(__name__)

# Crop box that brackets the trachea/carina region on a 512x512 frame;
# scaled proportionally for other frame sizes.
REF_CROP = BoundingBox(120, 200, 350, 300)
REF_SIZE = 512

# Frames worth searching, by slice thickness. Thinner slices mean more
# frames before the carina shows up.
SEARCH_RANGES = {
    0.67: (120, 200),
    1.0: (30, 80),
    2.0: (10, 40),
}

# Which window set the detector is normally run on, by slice thickness.
DEFAULT_WINDOW_BY_THICKNESS = {0.67: "mediastinum", 1.0: "mediastinum", 2.0: "lung"}

# Scans longer than this get the 3x3 black dilation by default; thin-slice
# volumes render the bronchi walls faintly enough to need it.
AUTO_DILATE_FRAME_COUNT = 500


def search_range(slice_thickness_mm: float, frame_count: int | None = None) -> tuple[int, int]:
    """Frame index range (inclusive) to scan for the carina.

    Unlisted thicknesses fall back to the full scan range with a warning;
    frame_count is required in that case.
    """
    for thickness, rng in SEARCH_RANGES.items():
        if abs(slice_thickness_mm - thickness) < 1e-9:
            return rng
    if frame_count is None:
        raise ValueError(
            f"no search range for slice thickness {slice_thickness_mm} mm "
            "and no frame_count to fall back to"
        )
    log.warning(
        "no search range for slice thickness %s mm; scanning all %d frames",
        slice_thickness_mm,
        frame_count,
    )
    return (0, frame_count - 1)


@dataclass
class SearchConfig:
    frame_range: tuple[int, int]
    crop_box: BoundingBox
    area_range: tuple[int, int] = (200, 1500)  # (min exclusive, max inclusive)
    gap_range: tuple[int, int] = (3, 7)  # (min exclusive, max inclusive)
    dilation_enabled: bool = False

    @classmethod
    def for_volume(
        cls,
        volume: ScanVolume,
        frame_range: tuple[int, int] | None = None,
        crop_box: BoundingBox | None = None,
        area_range: tuple[int, int] = (200, 1500),
        gap_range: tuple[int, int] = (3, 7),
        dilate: str = "auto",
    ) -> "SearchConfig":
        m = volume.manifest
        if frame_range is None:
            frame_range = search_range(m.slice_thickness_mm, m.frame_count)
        if crop_box is None:
            # x and y scale independently so non-square frames stay covered
            sx = scale_rect(REF_CROP, REF_SIZE, m.width)
            sy = scale_rect(REF_CROP, REF_SIZE, m.height)
            crop_box = BoundingBox(sx.x_min, sy.y_min, sx.x_max, sy.y_max)
        if dilate == "auto":
            enabled = m.frame_count > AUTO_DILATE_FRAME_COUNT
        elif dilate == "on":
            enabled = True
        elif dilate == "off":
            enabled = False
        else:
            raise ValueError(f"dilate must be auto|on|off, got {dilate!r}")
        return cls(
            frame_range=frame_range,
            crop_box=crop_box,
            area_range=area_range,
            gap_range=gap_range,
            dilation_enabled=enabled,
        )


@dataclass
class CarinaCandidate:
    frame_index: int
    boxes: tuple[BoundingBox, BoundingBox]
    gap_px: int

    def to_json(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "boxes": [list(b.as_tuple()) for b in self.boxes],
            "gap_px": self.gap_px,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CarinaCandidate":
        a, b = data["boxes"]
        return cls(
            frame_index=int(data["frame_index"]),
            boxes=(BoundingBox(*map(int, a)), BoundingBox(*map(int, b))),
            gap_px=int(data["gap_px"]),
        )


@dataclass
class CarinaResult:
    carina_frame: int
    gap_px: int
    box_a: BoundingBox
    box_b: BoundingBox
    candidates: list[CarinaCandidate]
    timings_s: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0), compare=False)

    def to_json(self) -> dict:
        # Timings are reported separately (run report); keeping them out of
        # this payload keeps repeated runs byte-identical.
        return {
            "carina_frame": self.carina_frame,
            "gap_px": self.gap_px,
            "box_a": list(self.box_a.as_tuple()),
            "box_b": list(self.box_b.as_tuple()),
            "candidates": [c.to_json() for c in self.candidates],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CarinaResult":
        return cls(
            carina_frame=int(data["carina_frame"]),
            gap_px=int(data["gap_px"]),
            box_a=BoundingBox(*map(int, data["box_a"])),
            box_b=BoundingBox(*map(int, data["box_b"])),
            candidates=[CarinaCandidate.from_json(c) for c in data.get("candidates", [])],
        )


def preprocess_frame(frame: np.ndarray, crop_box: BoundingBox) -> np.ndarray:
    """Binarize a frame for component boxing.

    Pixels outside the crop box become 0; inside, zero stays 0 (black) and
    anything non-zero becomes 255. The output is bi-level.
    """
    h, w = frame.shape
    if (
        crop_box.x_min < 0
        or crop_box.y_min < 0
        or crop_box.x_max >= w
        or crop_box.y_max >= h
    ):
        raise CropOutOfBounds(f"crop {crop_box.as_tuple()} outside {w}x{h} frame")
    out = np.zeros_like(frame)
    sub = frame[crop_box.y_min : crop_box.y_max + 1, crop_box.x_min : crop_box.x_max + 1]
    out[crop_box.y_min : crop_box.y_max + 1, crop_box.x_min : crop_box.x_max + 1] = np.where(
        sub > 0, 255, 0
    )
    return out


_SQUARE_3X3 = np.ones((3, 3), dtype=bool)


def dilate_3x3(binary: np.ndarray) -> np.ndarray:
    """Grow the black foreground by one pixel in every direction (8-neighborhood)."""
    black = binary == 0
    grown = ndimage.binary_dilation(black, structure=_SQUARE_3X3)
    return np.where(grown, 0, 255).astype(binary.dtype)


def connected_components(binary: np.ndarray) -> list[np.ndarray]:
    """8-connected components of the black (0) pixels.

    Returns one (n, 2) array of (row, col) coordinates per component, in
    raster-scan order of each component's first pixel.
    """
    black = binary == 0
    labeled, count = ndimage.label(black, structure=_SQUARE_3X3)
    if count == 0:
        return []
    flat = labeled.ravel()
    nonzero = np.flatnonzero(flat)
    labels_at = flat[nonzero]
    # order labels by first raster appearance
    uniq, first_idx = np.unique(labels_at, return_index=True)
    order = uniq[np.argsort(first_idx)]
    slices = ndimage.find_objects(labeled)
    components = []
    for lab in order:
        sl = slices[lab - 1]
        rows, cols = np.nonzero(labeled[sl] == lab)
        components.append(
            np.column_stack([rows + sl[0].start, cols + sl[1].start]).astype(np.int64)
        )
    return components


def component_boxes(
    components: list[np.ndarray], area_range: tuple[int, int] = (200, 1500)
) -> list[BoundingBox]:
    """Bounding boxes of components whose box area falls inside area_range.

    Area is box width times height ((min exclusive, max inclusive]); tiny
    speckle and the large background component both get dropped here.
    """
    lo, hi = area_range
    boxes = []
    for comp in components:
        y_min, x_min = comp.min(axis=0)
        y_max, x_max = comp.max(axis=0)
        box = BoundingBox(int(x_min), int(y_min), int(x_max), int(y_max))
        if lo < box.area <= hi:
            boxes.append(box)
    return boxes


def gap_between(box_a: BoundingBox, box_b: BoundingBox) -> int:
    """Horizontal pixel gap between two boxes (right box x_min - left box x_max)."""
    left, right = (box_a, box_b) if box_a.x_max <= box_b.x_max else (box_b, box_a)
    gap = right.x_min - left.x_max
    if gap <= 0:
        raise OverlappingBoxes(
            f"boxes {box_a.as_tuple()} and {box_b.as_tuple()} overlap horizontally"
        )
    return gap


def detect_carina(volume: ScanVolume, cfg: SearchConfig) -> CarinaResult:
    """Scan cfg.frame_range for the bifurcation frame.

    A frame qualifies when exactly two boxes survive the area filter, the
    boxes do not overlap, and their horizontal gap falls in cfg.gap_range.
    The candidate with the smallest gap wins; ties go to the earlier frame.
    """
    lo = max(0, cfg.frame_range[0])
    hi = min(volume.frame_count - 1, cfg.frame_range[1])
    gap_lo, gap_hi = cfg.gap_range
    candidates: list[CarinaCandidate] = []
    t_pre = t_box = t_pick = 0.0

    for idx in range(lo, hi + 1):
        t0 = time.perf_counter()
        binary = preprocess_frame(volume.frame(idx), cfg.crop_box)
        if cfg.dilation_enabled:
            binary = dilate_3x3(binary)
        t1 = time.perf_counter()
        t_pre += t1 - t0

        boxes = component_boxes(connected_components(binary), cfg.area_range)
        t2 = time.perf_counter()
        t_box += t2 - t1

        if len(boxes) != 2:
            continue
        a, b = boxes
        if a.overlaps(b):
            continue
        try:
            gap = gap_between(a, b)
        except OverlappingBoxes:
            continue
        if gap_lo < gap <= gap_hi:
            candidates.append(CarinaCandidate(idx, (a, b), gap))
        t_pick += time.perf_counter() - t2

    t3 = time.perf_counter()
    if not candidates:
        raise NoCarinaFound(
            f"no frame in [{lo}, {hi}] shows two boxed components with gap in "
            f"({gap_lo}, {gap_hi}]"
        )
    best = min(candidates, key=lambda c: (c.gap_px, c.frame_index))
    t_pick += time.perf_counter() - t3

    return CarinaResult(
        carina_frame=best.frame_index,
        gap_px=best.gap_px,
        box_a=best.boxes[0],
        box_b=best.boxes[1],
        candidates=candidates,
        timings_s=(t_pre, t_box, t_pick),
    )


def candidates_csv(result: CarinaResult) -> str:
    """Candidate table as CSV text (frame, boxes, gap per row)."""
    lines = ["frame_index,box_a,box_b,gap_px"]
    for c in result.candidates:
        a, b = c.boxes
        lines.append(
            f'{c.frame_index},"{a.as_tuple()}","{b.as_tuple()}",{c.gap_px}'
        )
    return "\n".join(lines) + "\n"
