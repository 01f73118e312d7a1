"""Broncho-arterial ratio measurement inside an operator-drawn ROI.

The ROI (taken from a lung-window frame) is relabeled twice into coarse
intensity classes, once for the airway and once for the artery:

    airway:  <= 25 -> B (black),  > 25 -> G (gray)
    artery:  <= 25 -> B,  (25, 45] -> M (marker),  > 45 -> G

Rows are then scanned for the characteristic value sequences: an airway
lumen reads G B...B G (dark air between wall pixels) and an artery reads
M G...G M (a partial-volume rim around a brighter core). Matched pixels
are collected into a region, its boundary is traced, and the diameter is
estimated as the mean of the maximum chord plus a small fan of chords
rotated around it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    AirwayNotFound,
    AnisotropicSpacing,
    ArteryNotFound,
    EmptyRegion,
    RoiOutOfBounds,
)
from .geometry import BoundingBox

METHOD_VERSION = "0.1.0"

LABEL_B = 0
LABEL_G = 80
LABEL_M = 255


@dataclass(frozen=True)
class RowFamily:
    name: str
    boundary: int
    interior: int
    k_min: int
    k_max: int
    fill_boundary: bool  # whether the boundary columns belong to the region


# Airway: the measured object is the lumen (interior run only, the flanking
# G pixels are wall). Artery: the measured object is the whole vessel cross
# section, rim included, since the clinically used quantity is the outer
# artery diameter.
AIRWAY_FAMILY = RowFamily("airway", LABEL_G, LABEL_B, k_min=1, k_max=13, fill_boundary=False)
ARTERY_FAMILY = RowFamily("artery", LABEL_M, LABEL_G, k_min=7, k_max=22, fill_boundary=True)


def label_airway(roi: np.ndarray) -> np.ndarray:
    return np.where(roi <= 25, LABEL_B, LABEL_G).astype(np.uint8)


def label_artery(roi: np.ndarray) -> np.ndarray:
    out = np.full(roi.shape, LABEL_G, dtype=np.uint8)
    out[roi <= 45] = LABEL_M
    out[roi <= 25] = LABEL_B
    return out


def _interior_runs(row: np.ndarray, interior: int) -> list[tuple[int, int]]:
    hits = (row == interior).astype(np.int8)
    if not hits.any():
        return []
    edges = np.diff(np.concatenate([[0], hits, [0]]))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return list(zip(starts.tolist(), ends.tolist()))


def match_row_sequences(raster: np.ndarray, family: RowFamily) -> list[tuple[int, int, int]]:
    """Find boundary-interior-boundary runs row by row.

    Returns (row, col_start, col_end) per match, the inclusive column range
    covering the full pattern (boundary pixels included). Only maximal
    interior runs count, so a run longer than family.k_max matches nothing.
    Overlapping candidates within a row are resolved longest-run-first,
    then leftmost.
    """
    h, w = raster.shape
    out = []
    for r in range(h):
        row = raster[r]
        cands = []
        for s, e in _interior_runs(row, family.interior):
            k = e - s + 1
            if not (family.k_min <= k <= family.k_max):
                continue
            if s - 1 < 0 or e + 1 >= w:
                continue
            if row[s - 1] == family.boundary and row[e + 1] == family.boundary:
                cands.append((s - 1, e + 1, k))
        kept: list[tuple[int, int, int]] = []
        for c0, c1, k in sorted(cands, key=lambda t: (-t[2], t[0])):
            if all(c1 < k0 or c0 > k1 for k0, k1, _ in kept):
                kept.append((c0, c1, k))
        kept.sort(key=lambda t: t[0])
        out.extend((r, c0, c1) for c0, c1, _ in kept)
    return out


_SQUARE_2X2 = np.ones((2, 2), dtype=bool)
_SQUARE_3X3 = np.ones((3, 3), dtype=bool)


def build_region_mask(
    matches: list[tuple[int, int, int]], shape: tuple[int, int], family: RowFamily
) -> np.ndarray:
    """Rasterize row matches, close small gaps, keep the largest region.

    The 2x2 closing (dilation then erosion) bridges single-row dropouts
    where neighboring rows overlap in columns; the largest 8-connected
    component is kept so stray matches elsewhere in the ROI drop out.
    """
    mask = np.zeros(shape, dtype=bool)
    for r, c0, c1 in matches:
        if family.fill_boundary:
            mask[r, c0 : c1 + 1] = True
        else:
            mask[r, c0 + 1 : c1] = True
    if not mask.any():
        raise EmptyRegion(f"no {family.name} rows matched")
    dilated = ndimage.binary_dilation(mask, structure=_SQUARE_2X2)
    closed = ndimage.binary_erosion(dilated, structure=_SQUARE_2X2, border_value=1)
    labeled, count = ndimage.label(closed, structure=_SQUARE_3X3)
    if count == 0:
        raise EmptyRegion(f"{family.name} region vanished")
    sizes = ndimage.sum_labels(closed, labeled, index=np.arange(1, count + 1))
    best = int(np.argmax(sizes)) + 1  # argmax takes the first on ties
    return labeled == best


@dataclass
class RegionPerimeter:
    kind: str  # inner_airway | artery | outer_airway
    coords: list[tuple[int, int]]  # (x, y), clockwise from topmost-then-leftmost
    mask: np.ndarray = field(repr=False)


# Clockwise neighbor ring in image coordinates (y grows downward),
# starting at West: W, NW, N, NE, E, SE, S, SW.
_RING = [(0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1)]


def trace_perimeter(mask: np.ndarray, kind: str = "region") -> RegionPerimeter:
    """Moore-neighbor boundary trace, clockwise, outer contour only.

    Starts at the topmost-then-leftmost region pixel and stops on
    re-entering the start pixel with the same first move. Revisited pixels
    (one-pixel-wide protrusions) are reported once; interior holes are not
    traced.
    """
    pts = np.argwhere(mask)
    if pts.size == 0:
        raise EmptyRegion("cannot trace an empty mask")
    h, w = mask.shape
    start = (int(pts[0][0]), int(pts[0][1]))

    def is_set(r: int, c: int) -> bool:
        return 0 <= r < h and 0 <= c < w and bool(mask[r, c])

    trail = [start]
    cur = start
    back = (start[0], start[1] - 1)  # west of start is outside by construction
    first_next = None
    limit = 8 * int(pts.shape[0]) + 8
    for _ in range(limit):
        d = (back[0] - cur[0], back[1] - cur[1])
        bidx = _RING.index(d)
        found = None
        for step in range(1, 9):
            nd = _RING[(bidx + step) % 8]
            cand = (cur[0] + nd[0], cur[1] + nd[1])
            if is_set(*cand):
                found = cand
                prev = _RING[(bidx + step - 1) % 8]
                back = (cur[0] + prev[0], cur[1] + prev[1])
                break
        if found is None:
            break  # isolated pixel
        if cur == start:
            if first_next is None:
                first_next = found
            elif found == first_next:
                break
        trail.append(found)
        cur = found
    ordered = list(dict.fromkeys(trail))
    coords = [(c, r) for r, c in ordered]
    return RegionPerimeter(kind=kind, coords=coords, mask=mask)


@dataclass(frozen=True)
class Chord:
    p1: tuple[int, int]
    p2: tuple[int, int]
    length_px: float

    def to_json(self) -> dict:
        return {"p1": list(self.p1), "p2": list(self.p2), "length_px": self.length_px}

    def shifted(self, dx: int, dy: int) -> "Chord":
        return Chord(
            (self.p1[0] + dx, self.p1[1] + dy),
            (self.p2[0] + dx, self.p2[1] + dy),
            self.length_px,
        )


def max_chord(perimeter: RegionPerimeter) -> Chord:
    """Exhaustive farthest pair over the boundary pixels.

    Ties break to the lexicographically smallest ordered pair, so the
    result never depends on trace order.
    """
    pts = np.asarray(perimeter.coords, dtype=np.float64)
    if len(pts) == 1:
        p = perimeter.coords[0]
        return Chord(p, p, 0.0)
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = (diff**2).sum(axis=-1)
    best = d2.max()
    ii, jj = np.nonzero(d2 == best)
    pairs = []
    for i, j in zip(ii.tolist(), jj.tolist()):
        if i == j:
            continue
        a, b = perimeter.coords[i], perimeter.coords[j]
        pairs.append((a, b) if a <= b else (b, a))
    p1, p2 = min(pairs)
    return Chord(p1, p2, math.sqrt(float(best)))


FAN_SMALL_OFFSETS = (4, 8)
FAN_LARGE_OFFSETS = (4, 8, 12)
FAN_LARGE_THRESHOLD_PX = 20.0


def chord_fan(perimeter: RegionPerimeter, major: Chord) -> list[Chord]:
    """Major chord plus near-diametral companions.

    The major endpoints are slid the same number of steps along the
    perimeter ring (both +o, then both -o), which rotates the chord about
    the region center and keeps it near full length. Small regions get
    offsets {4, 8} (five chords total), larger ones also {12} (seven).
    Falls back to the major chord alone when the ring is too short.
    """
    offsets = (
        FAN_SMALL_OFFSETS if major.length_px <= FAN_LARGE_THRESHOLD_PX else FAN_LARGE_OFFSETS
    )
    coords = perimeter.coords
    n = len(coords)
    if n < 2 * max(offsets) + 2:
        return [major]
    try:
        i = coords.index(major.p1)
        j = coords.index(major.p2)
    except ValueError:
        return [major]
    chords = [major]
    for o in offsets:
        for sign in (1, -1):
            a = coords[(i + sign * o) % n]
            b = coords[(j + sign * o) % n]
            chords.append(Chord(a, b, math.dist(a, b)))
    return chords


def mean_spacing_mm(pixel_spacing_mm: tuple[float, float]) -> float:
    """Isotropic pixel pitch; rejects spacing that differs beyond 1%."""
    row_s, col_s = pixel_spacing_mm
    mean_s = (row_s + col_s) / 2.0
    if abs(row_s - col_s) > 0.01 * mean_s:
        raise AnisotropicSpacing(f"row/col spacing differ beyond 1%: {row_s} vs {col_s} mm")
    return mean_s


def mean_diameter(chords: list[Chord], pixel_spacing_mm: tuple[float, float]) -> "DiameterEstimate":
    mean_s = mean_spacing_mm(pixel_spacing_mm)
    mean_px = float(np.mean([c.length_px for c in chords]))
    return DiameterEstimate(chords=list(chords), mean_px=mean_px, mean_mm=mean_px * mean_s)


@dataclass
class DiameterEstimate:
    chords: list[Chord]
    mean_px: float
    mean_mm: float

    def to_json(self) -> dict:
        return {
            "chords": [c.to_json() for c in self.chords],
            "mean_px": self.mean_px,
            "mean_mm": self.mean_mm,
        }

    def shifted(self, dx: int, dy: int) -> "DiameterEstimate":
        return DiameterEstimate(
            chords=[c.shifted(dx, dy) for c in self.chords],
            mean_px=self.mean_px,
            mean_mm=self.mean_mm,
        )


@dataclass
class Roi:
    scan_id: str
    frame_index: int
    rect: BoundingBox
    label: str = ""

    def to_json(self) -> dict:
        return {
            "scan_id": self.scan_id,
            "frame_index": self.frame_index,
            "rect": list(self.rect.as_tuple()),
            "label": self.label,
        }

    @classmethod
    def from_json(cls, data: dict, scan_id: str = "") -> "Roi":
        rect = data["rect"]
        return cls(
            scan_id=str(data.get("scan_id", scan_id)),
            frame_index=int(data["frame_index"]),
            rect=BoundingBox(int(rect[0]), int(rect[1]), int(rect[2]), int(rect[3])),
            label=str(data.get("label", "")),
        )


@dataclass
class Measurement:
    roi: Roi
    iad: DiameterEstimate
    ard: DiameterEstimate
    bar: float
    wt_mm: float | None = None
    wt_px: float | None = None
    wt_samples: list | None = None
    wt_seed: int | None = None
    airway_perimeter: list[tuple[int, int]] | None = None
    artery_perimeter: list[tuple[int, int]] | None = None
    outer_perimeter: list[tuple[int, int]] | None = None
    method_version: str = METHOD_VERSION

    def to_json(self) -> dict:
        return {
            "roi": self.roi.to_json(),
            "iad": self.iad.to_json(),
            "ard": self.ard.to_json(),
            "bar": self.bar,
            "wt_mm": self.wt_mm,
            "wt_px": self.wt_px,
            "wt_samples": [s.to_json() for s in self.wt_samples] if self.wt_samples else None,
            "wt_seed": self.wt_seed,
            "airway_perimeter": [list(p) for p in self.airway_perimeter]
            if self.airway_perimeter
            else None,
            "artery_perimeter": [list(p) for p in self.artery_perimeter]
            if self.artery_perimeter
            else None,
            "outer_perimeter": [list(p) for p in self.outer_perimeter]
            if self.outer_perimeter
            else None,
            "method_version": self.method_version,
        }


def clip_roi(roi: Roi, frame: np.ndarray) -> np.ndarray:
    h, w = frame.shape
    r = roi.rect
    if r.x_min < 0 or r.y_min < 0 or r.x_max >= w or r.y_max >= h:
        raise RoiOutOfBounds(f"roi {r.as_tuple()} outside {w}x{h} frame")
    if r.area < 9:
        raise RoiOutOfBounds(f"roi {r.as_tuple()} smaller than 3x3 px")
    return frame[r.y_min : r.y_max + 1, r.x_min : r.x_max + 1]


def estimate_region_diameter(
    roi_pixels: np.ndarray, family: RowFamily, pixel_spacing_mm: tuple[float, float]
) -> tuple[DiameterEstimate, RegionPerimeter]:
    """Label, match, trace and measure one family inside a ROI raster.

    Coordinates in the returned estimate and perimeter are ROI-local.
    """
    raster = label_airway(roi_pixels) if family is AIRWAY_FAMILY else label_artery(roi_pixels)
    matches = match_row_sequences(raster, family)
    kind = "inner_airway" if family is AIRWAY_FAMILY else "artery"
    mask = build_region_mask(matches, roi_pixels.shape, family)
    perimeter = trace_perimeter(mask, kind=kind)
    major = max_chord(perimeter)
    chords = chord_fan(perimeter, major)
    return mean_diameter(chords, pixel_spacing_mm), perimeter


def measure_bar(
    roi: Roi, frame: np.ndarray, pixel_spacing_mm: tuple[float, float]
) -> Measurement:
    """Measure inner airway and artery diameters in the ROI and their ratio.

    All geometry in the result is in frame coordinates.
    """
    roi_pixels = clip_roi(roi, frame)
    try:
        iad, airway_perim = estimate_region_diameter(roi_pixels, AIRWAY_FAMILY, pixel_spacing_mm)
    except EmptyRegion as exc:
        raise AirwayNotFound(str(exc)) from exc
    try:
        ard, artery_perim = estimate_region_diameter(roi_pixels, ARTERY_FAMILY, pixel_spacing_mm)
    except EmptyRegion as exc:
        raise ArteryNotFound(str(exc)) from exc
    if ard.mean_mm <= 0:
        raise ArteryNotFound("artery region degenerate (zero diameter)")
    dx, dy = roi.rect.x_min, roi.rect.y_min
    return Measurement(
        roi=roi,
        iad=iad.shifted(dx, dy),
        ard=ard.shifted(dx, dy),
        bar=iad.mean_mm / ard.mean_mm,
        airway_perimeter=[(x + dx, y + dy) for x, y in airway_perim.coords],
        artery_perimeter=[(x + dx, y + dy) for x, y in artery_perim.coords],
    )
