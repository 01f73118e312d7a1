"""Airway wall thickness from the same ROI as the ratio measurement.

The wall is the gray band hugging the inner airway boundary: relabel the
ROI (<= 20 -> black, else gray), keep gray pixels within a few pixels of
the traced lumen boundary, and trace that band's outer contour. Thickness
is sampled at four roughly cardinal points as the distance from a lumen
boundary pixel to the farthest outer-contour pixel in the same narrow
angular sector, then averaged.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import EmptyBand, NegativeWall
from .measure_bar import RegionPerimeter, mean_spacing_mm, trace_perimeter

log = logging.getLogger(__name__)

LABEL_WALL_B = 0
LABEL_WALL_G = 80

DEFAULT_BAND_THRESHOLD_PX = 4
# Half-width of the angular sector searched for the outer point. Narrow on
# purpose: with a wide sector the farthest candidate sits at the sector
# edge and systematically overshoots the true thickness.
DEFAULT_SECTOR_HALF_DEG = 15.0

_DIRECTIONS = ("north", "west", "south", "east")
_ARC_BOUNDS = {
    "north": (45.0, 135.0),
    "west": (135.0, 225.0),
    "south": (225.0, 315.0),
}
_ARC_CENTERS = {"north": 90.0, "west": 180.0, "south": 270.0, "east": 0.0}


def label_wall(roi: np.ndarray) -> np.ndarray:
    return np.where(roi <= 20, LABEL_WALL_B, LABEL_WALL_G).astype(np.uint8)


@dataclass
class WallBand:
    gray_mask: np.ndarray = field(repr=False)
    band_mask: np.ndarray = field(repr=False)
    outer_perimeter: RegionPerimeter
    threshold_px: int

    def band_coords(self) -> list[tuple[int, int]]:
        return [(int(c), int(r)) for r, c in np.argwhere(self.band_mask)]


@dataclass
class WallSample:
    direction: str
    inner_pt: tuple[int, int]
    outer_pt: tuple[int, int]
    dist_px: float

    def to_json(self) -> dict:
        return {
            "direction": self.direction,
            "inner_pt": list(self.inner_pt),
            "outer_pt": list(self.outer_pt),
            "dist_px": self.dist_px,
        }

    def shifted(self, dx: int, dy: int) -> "WallSample":
        return WallSample(
            self.direction,
            (self.inner_pt[0] + dx, self.inner_pt[1] + dy),
            (self.outer_pt[0] + dx, self.outer_pt[1] + dy),
            self.dist_px,
        )


def wall_band(
    gray_mask: np.ndarray,
    inner_perimeter: RegionPerimeter,
    threshold_px: int = DEFAULT_BAND_THRESHOLD_PX,
) -> WallBand:
    """Gray pixels within threshold_px (Euclidean) of the lumen boundary.

    The band's largest 8-connected component is kept and its outer contour
    traced; that contour stands in for the outer airway boundary.
    """
    perim_mask = np.zeros_like(gray_mask, dtype=bool)
    for x, y in inner_perimeter.coords:
        perim_mask[y, x] = True
    dist = ndimage.distance_transform_edt(~perim_mask)
    band = gray_mask & (dist <= threshold_px)
    if not band.any():
        raise EmptyBand(f"no gray pixels within {threshold_px} px of the lumen boundary")
    labeled, count = ndimage.label(band, structure=np.ones((3, 3), dtype=bool))
    if count > 1:
        sizes = ndimage.sum_labels(band, labeled, index=np.arange(1, count + 1))
        band = labeled == (int(np.argmax(sizes)) + 1)
    outer = trace_perimeter(band, kind="outer_airway")
    return WallBand(
        gray_mask=gray_mask, band_mask=band, outer_perimeter=outer, threshold_px=threshold_px
    )


def _centroid(mask: np.ndarray) -> tuple[float, float]:
    rows, cols = np.nonzero(mask)
    return (float(cols.mean()), float(rows.mean()))


def _angle_deg(pt: tuple[int, int], centroid: tuple[float, float]) -> float:
    # Image-up is north: flip y so 90 deg points to the top of the frame.
    return math.degrees(math.atan2(centroid[1] - pt[1], pt[0] - centroid[0])) % 360.0


def _circ_dist(a: float, b: float) -> float:
    return abs(((a - b + 180.0) % 360.0) - 180.0)


def cardinal_points(inner_perimeter: RegionPerimeter, seed: int) -> dict[str, tuple[int, int]]:
    """One seeded-uniform boundary point per cardinal arc.

    Arcs are measured about the region centroid (north [45, 135), west
    [135, 225), south [225, 315), east the rest). An empty arc falls back
    to the boundary point nearest the arc's center angle.
    """
    centroid = _centroid(inner_perimeter.mask)
    coords = inner_perimeter.coords
    angles = [_angle_deg(p, centroid) for p in coords]
    rng = np.random.default_rng(seed)
    picks: dict[str, tuple[int, int]] = {}
    for direction in _DIRECTIONS:
        if direction == "east":
            members = [
                i for i, a in enumerate(angles) if a >= 315.0 or a < 45.0
            ]
        else:
            lo, hi = _ARC_BOUNDS[direction]
            members = [i for i, a in enumerate(angles) if lo <= a < hi]
        if members:
            picks[direction] = coords[members[int(rng.integers(len(members)))]]
        else:
            center = _ARC_CENTERS[direction]
            best = min(range(len(coords)), key=lambda i: (_circ_dist(angles[i], center), i))
            picks[direction] = coords[best]
    return picks


def wall_thickness(
    roi_pixels: np.ndarray,
    inner_perimeter: RegionPerimeter,
    pixel_spacing_mm: tuple[float, float],
    seed: int,
    threshold_px: int = DEFAULT_BAND_THRESHOLD_PX,
    sector_half_deg: float = DEFAULT_SECTOR_HALF_DEG,
) -> tuple[float, float, list[WallSample], WallBand]:
    """Mean wall thickness at four seeded cardinal samples.

    Returns (wt_mm, wt_px, samples, band). For each cardinal inner point
    the outer candidates are the band-contour pixels within
    sector_half_deg of the inner point's centroid angle; the farthest one
    is taken. An empty sector falls back to the nearest-angle contour
    pixel.
    """
    gray = label_wall(roi_pixels) == LABEL_WALL_G
    band = wall_band(gray, inner_perimeter, threshold_px)
    centroid = _centroid(inner_perimeter.mask)
    outer_coords = band.outer_perimeter.coords
    outer_angles = [_angle_deg(p, centroid) for p in outer_coords]
    picks = cardinal_points(inner_perimeter, seed)

    samples = []
    for direction in _DIRECTIONS:
        inner_pt = picks[direction]
        alpha = _angle_deg(inner_pt, centroid)
        members = [
            i for i, a in enumerate(outer_angles) if _circ_dist(a, alpha) <= sector_half_deg
        ]
        if not members:
            # No contour pixel in the sector; take the nearest-angle one.
            members = [
                min(
                    range(len(outer_coords)),
                    key=lambda i: (_circ_dist(outer_angles[i], alpha), i),
                )
            ]
        chosen = max(
            (outer_coords[i] for i in members),
            key=lambda p: (math.dist(p, inner_pt), (-p[0], -p[1])),
        )
        samples.append(
            WallSample(direction, inner_pt, chosen, math.dist(chosen, inner_pt))
        )

    wt_px = float(np.mean([s.dist_px for s in samples]))
    if wt_px >= threshold_px:
        log.warning(
            "wall thickness %.2f px reaches the band threshold %d px; "
            "thicker walls are clipped",
            wt_px,
            threshold_px,
        )
    return wt_px * mean_spacing_mm(pixel_spacing_mm), wt_px, samples, band


def wt_symmetric(oad_mm: float, iad_mm: float) -> float:
    """Symmetric wall estimate from outer and inner diameters: (OAD - IAD) / 2."""
    if oad_mm < iad_mm:
        raise NegativeWall(f"outer diameter {oad_mm} smaller than inner {iad_mm}")
    return (oad_mm - iad_mm) / 2.0
