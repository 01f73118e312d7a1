"""Right lower lobe extraction.

From the carina frame onward, a separating line is drawn from a fixed start
point (derived from the two carina boxes) toward the lower-left of the
frame; everything on the lobe side of that line down to the bottom edge is
kept and the rest of the frame is blanked. The line's far endpoint walks
left (then up) on each subsequent frame so the cut follows the oblique
fissure through the stack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAngle
from .geometry import BoundingBox, round_half_up
from .carina import CarinaResult
from .volume_io import ScanVolume

# Per-frame endpoint decrements by slice thickness: thinner slices move the
# fissure less per frame, so the endpoint walks in smaller steps.
ENDPOINT_SCHEDULES = {
    0.67: (10, 5),
    1.0: (25, 12),
    2.0: (50, 25),
}

_EPS = 1e-9


@dataclass(frozen=True)
class RllSchedule:
    dx: int
    dy: int
    angle_deg: float = 270.0

    def __post_init__(self):
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError(f"schedule steps must be positive, got dx={self.dx} dy={self.dy}")
        if not (180.0 <= self.angle_deg < 360.0):
            raise ValueError(f"angle must lie in [180, 360), got {self.angle_deg}")

    @classmethod
    def for_thickness(cls, slice_thickness_mm: float) -> "RllSchedule":
        for thickness, (dx, dy) in ENDPOINT_SCHEDULES.items():
            if abs(slice_thickness_mm - thickness) < 1e-9:
                return cls(dx=dx, dy=dy)
        raise ValueError(f"no endpoint schedule for slice thickness {slice_thickness_mm} mm")


@dataclass(frozen=True)
class RllPolygon:
    start: tuple[int, int]
    end: tuple[int, int]
    fourth: tuple[int, int]
    right: tuple[int, int]

    def points(self) -> list[tuple[int, int]]:
        return [self.start, self.end, self.fourth, self.right]

    def to_json(self) -> dict:
        return {
            "start": list(self.start),
            "end": list(self.end),
            "fourth": list(self.fourth),
            "right": list(self.right),
        }


def start_point_from_boxes(box_a: BoundingBox, box_b: BoundingBox) -> tuple[int, int]:
    """Anchor for the separating line: rightmost box edge, higher of the two
    box bottoms."""
    return (max(box_a.x_max, box_b.x_max), min(box_a.y_max, box_b.y_max))


def initial_endpoint(
    start: tuple[int, int], angle_deg: float, frame_w: int, frame_h: int
) -> tuple[int, int]:
    """Cast a ray from start at angle_deg (degrees, 270 = straight down) and
    return where it exits through the left or bottom frame edge.

    The ray length is the smaller of the distances to the x=0 edge and the
    y=frame_h edge; a cosine or sine below 1e-9 in magnitude makes that
    candidate infinite. Both infinite means the angle cannot reach either
    edge.
    """
    theta = math.radians(angle_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    candidates = []
    if abs(cos_t) >= _EPS:
        dist_x = -start[0] / cos_t
        if dist_x > 0 and math.isfinite(dist_x):
            candidates.append(dist_x)
    if abs(sin_t) >= _EPS:
        dist_y = (frame_h - start[1]) / (-sin_t)
        if dist_y > 0 and math.isfinite(dist_y):
            candidates.append(dist_y)
    if not candidates:
        raise DegenerateAngle(
            f"ray at {angle_deg} deg from {start} reaches neither the left nor bottom edge"
        )
    length = min(candidates)
    x = round_half_up(start[0] + length * cos_t)
    y = round_half_up(start[1] - length * sin_t)
    return (min(max(x, 0), frame_w - 1), min(max(y, 0), frame_h - 1))


def advance_endpoint(endpoint: tuple[int, int], schedule: RllSchedule) -> tuple[int, int]:
    """Walk the endpoint left by dx until it hits x=0, then up by dy."""
    x, y = endpoint
    if x > 0:
        return (max(0, x - schedule.dx), y)
    return (0, max(0, y - schedule.dy))


def build_polygon(start: tuple[int, int], end: tuple[int, int], frame_h: int) -> RllPolygon:
    return RllPolygon(
        start=start,
        end=end,
        fourth=(0, frame_h - 1),
        right=(start[0], frame_h - 1),
    )


def _bresenham(p0: tuple[int, int], p1: tuple[int, int]) -> list[tuple[int, int]]:
    x0, y0 = p0
    x1, y1 = p1
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    pts = []
    while True:
        pts.append((x0, y0))
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy
    return pts


def polygon_mask(polygon: RllPolygon, frame_w: int, frame_h: int) -> np.ndarray:
    """Boolean mask of the polygon: even-odd fill at pixel centers, with
    every edge's Bresenham rasterization included (boundary inclusive)."""
    pts = polygon.points()
    xs = np.arange(frame_w, dtype=np.float64)
    ys = np.arange(frame_h, dtype=np.float64)
    grid_x, grid_y = np.meshgrid(xs, ys)
    inside = np.zeros((frame_h, frame_w), dtype=bool)
    n = len(pts)
    for k in range(n):
        x1, y1 = pts[k]
        x2, y2 = pts[(k + 1) % n]
        if y1 == y2:
            continue  # horizontal edges never toggle an even-odd ray cast
        straddles = (grid_y >= min(y1, y2)) & (grid_y < max(y1, y2))
        x_at = x1 + (grid_y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddles & (grid_x < x_at)
    for k in range(n):
        for x, y in _bresenham(pts[k], pts[(k + 1) % n]):
            if 0 <= x < frame_w and 0 <= y < frame_h:
                inside[y, x] = True
    return inside


def crop_polygon(frame: np.ndarray, polygon: RllPolygon) -> np.ndarray:
    """Keep pixels inside the polygon, blank everything else to 0."""
    h, w = frame.shape
    mask = polygon_mask(polygon, w, h)
    out = np.zeros_like(frame)
    out[mask] = frame[mask]
    return out


def extract_rll(
    volume: ScanVolume,
    carina: CarinaResult,
    schedule: RllSchedule | None = None,
) -> list[tuple[int, np.ndarray, RllPolygon]]:
    """Crop the right lower lobe out of every frame after the carina frame.

    Returns (frame_index, cropped_frame, polygon) for indices in
    (carina_frame, last]. The endpoint advances by the schedule before each
    emitted frame, starting from the ray endpoint computed on the carina
    frame itself.
    """
    m = volume.manifest
    if schedule is None:
        schedule = RllSchedule.for_thickness(m.slice_thickness_mm)
    start = start_point_from_boxes(carina.box_a, carina.box_b)
    endpoint = initial_endpoint(start, schedule.angle_deg, m.width, m.height)
    out = []
    for idx in range(carina.carina_frame + 1, volume.frame_count):
        endpoint = advance_endpoint(endpoint, schedule)
        poly = build_polygon(start, endpoint, m.height)
        out.append((idx, crop_polygon(volume.frame(idx), poly), poly))
    return out
