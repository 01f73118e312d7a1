"""Synthetic phantoms with exact ground truth.

Two generators: a single-frame broncho-arterial pair (annulus airway next
to a rimmed artery disc) for measurement tests, and a multi-frame trachea
volume (one dark ellipse splitting into two) for carina detection tests.
Intensities sit safely inside the labeling bands so the expected label of
every pixel is known by construction.

oracle_max_diameter is the independent cross-check for the chord pipeline:
a brute-force farthest-pair over every region pixel, no perimeter tracing
involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyRegion, SpecOverflow
from .geometry import BoundingBox
from .volume_io import ScanManifest, ScanVolume

_MARGIN = 6


@dataclass
class BaPhantomSpec:
    lumen_d_px: int = 10
    wall_t_px: int = 3
    artery_d_px: int = 12
    separation_px: int = 16
    width: int = 128
    height: int = 128
    # Intensity plan, one value per structure. Lumen and parenchyma must
    # stay <= 20 (black for both the airway and wall labelings), the wall
    # must clear 45 so it never reads as an artery rim, and the rim/core
    # must sit inside (25, 45] and (45, 100].
    lumen_intensity: int = 0
    wall_intensity: int = 150
    parenchyma_intensity: int = 10
    artery_edge_intensity: int = 35
    artery_core_intensity: int = 70
    artery_edge_w_px: int = 1
    noise_sigma: float = 0.0

    def validate(self):
        if min(self.lumen_d_px, self.wall_t_px, self.artery_d_px) < 1:
            raise SpecOverflow("diameters and wall thickness must be >= 1 px")
        if self.artery_edge_w_px < 1 or self.artery_edge_w_px * 2 >= self.artery_d_px:
            raise SpecOverflow("artery rim must be >= 1 px and leave a core")
        outer = self.lumen_d_px + 2 * self.wall_t_px
        need_w = 2 * _MARGIN + outer + self.separation_px + self.artery_d_px
        need_h = 2 * _MARGIN + max(outer, self.artery_d_px)
        if need_w > self.width or need_h > self.height:
            raise SpecOverflow(
                f"shapes need {need_w}x{need_h} px, frame is {self.width}x{self.height}"
            )
        if not (0 <= self.lumen_intensity <= 20 and 0 <= self.parenchyma_intensity <= 20):
            raise ValueError("lumen and parenchyma intensities must lie in [0, 20]")
        if not (45 < self.wall_intensity <= 255):
            raise ValueError("wall intensity must lie in (45, 255]")
        if not (25 < self.artery_edge_intensity <= 45):
            raise ValueError("artery rim intensity must lie in (25, 45]")
        if not (45 < self.artery_core_intensity <= 100):
            raise ValueError("artery core intensity must lie in (45, 100]")


def _disc(h: int, w: int, cx: float, cy: float, r: float) -> np.ndarray:
    yy, xx = np.ogrid[:h, :w]
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r


# Per-structure clip ranges that keep noisy pixels inside their label band.
_NOISE_BANDS = {
    "lumen": (0, 20),
    "parenchyma": (0, 20),
    "wall": (46, 255),
    "artery_edge": (26, 45),
    "artery_core": (46, 100),
}


def gen_ba_pair(spec: BaPhantomSpec, seed: int = 0) -> tuple[np.ndarray, dict]:
    """Render one airway/artery pair; returns (frame, ground_truth).

    Ground truth carries the constructed diameters in pixels plus the
    region masks' centers and a suggested ROI covering both structures.
    """
    spec.validate()
    h, w = spec.height, spec.width
    outer_d = spec.lumen_d_px + 2 * spec.wall_t_px
    cy = (h - 1) / 2.0
    ax = _MARGIN + (outer_d - 1) / 2.0
    artery_x0 = _MARGIN + outer_d + spec.separation_px
    bx = artery_x0 + (spec.artery_d_px - 1) / 2.0

    r_lumen = spec.lumen_d_px / 2.0
    r_outer = outer_d / 2.0
    r_artery = spec.artery_d_px / 2.0
    r_core = r_artery - spec.artery_edge_w_px

    lumen = _disc(h, w, ax, cy, r_lumen)
    wall = _disc(h, w, ax, cy, r_outer) & ~lumen
    artery = _disc(h, w, bx, cy, r_artery)
    core = _disc(h, w, bx, cy, r_core)
    edge = artery & ~core
    parenchyma = ~(lumen | wall | artery)

    frame = np.full((h, w), spec.parenchyma_intensity, dtype=np.uint8)
    frame[lumen] = spec.lumen_intensity
    frame[wall] = spec.wall_intensity
    frame[edge] = spec.artery_edge_intensity
    frame[core] = spec.artery_core_intensity

    if spec.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        regions = {
            "lumen": lumen,
            "parenchyma": parenchyma,
            "wall": wall,
            "artery_edge": edge,
            "artery_core": core,
        }
        noisy = frame.astype(np.float64)
        for name, mask in regions.items():
            lo, hi = _NOISE_BANDS[name]
            vals = noisy[mask] + rng.normal(0.0, spec.noise_sigma, size=int(mask.sum()))
            noisy[mask] = np.clip(np.rint(vals), lo, hi)
        frame = noisy.astype(np.uint8)

    span = max(outer_d, spec.artery_d_px)
    roi = BoundingBox(
        max(0, _MARGIN - 4),
        max(0, int(cy - span / 2) - 4),
        min(w - 1, artery_x0 + spec.artery_d_px + 3),
        min(h - 1, int(cy + span / 2) + 4),
    )
    ground_truth = {
        "iad_px": spec.lumen_d_px,
        "oad_px": outer_d,
        "ard_px": spec.artery_d_px,
        "wt_px": spec.wall_t_px,
        "airway_center": [ax, cy],
        "artery_center": [bx, cy],
        "suggested_roi": list(roi.as_tuple()),
    }
    return frame, ground_truth


def ba_scan_volume(
    spec: BaPhantomSpec, seed: int = 0, pixel_spacing_mm: float = 0.33
) -> tuple[ScanVolume, dict]:
    """Wrap a BA-pair frame as a one-frame scan volume (lung window)."""
    frame, ground_truth = gen_ba_pair(spec, seed)
    manifest = ScanManifest(
        scan_id=f"phantom-ba-l{spec.lumen_d_px}-w{spec.wall_t_px}-a{spec.artery_d_px}",
        frame_count=1,
        width=spec.width,
        height=spec.height,
        slice_thickness_mm=1.0,
        pixel_spacing_mm=(pixel_spacing_mm, pixel_spacing_mm),
        window="lung",
    )
    return ScanVolume(manifest=manifest, frames=frame[None, :, :]), ground_truth


@dataclass
class TracheaPhantomSpec:
    n_frames: int = 100
    split_frame: int = 50
    bronchi_gap_px: int = 5  # detector wants (3, 7]; other values are allowed
    frame_size: int = 512
    slice_thickness_mm: float = 1.0
    pixel_spacing_mm: float = 0.7

    def validate(self):
        if self.n_frames < 2:
            raise SpecOverflow("need at least 2 frames")
        if not (0 < self.split_frame < self.n_frames):
            raise SpecOverflow(
                f"split_frame {self.split_frame} outside (0, {self.n_frames})"
            )
        if self.frame_size < 128:
            raise SpecOverflow("frame_size must be >= 128")
        if self.bronchi_gap_px < 1:
            raise SpecOverflow("bronchi gap must be >= 1 px")


def _ellipse(h: int, w: int, cx: int, cy: int, a: int, b: int) -> np.ndarray:
    yy, xx = np.ogrid[:h, :w]
    return ((xx - cx) / a) ** 2 + ((yy - cy) / b) ** 2 <= 1.0


_BODY_INTENSITY = 120
_LUNG_FIELD_INTENSITY = 3
_CLUTTER_FRAMES_BEFORE_SPLIT = 8


def gen_trachea_volume(
    spec: TracheaPhantomSpec, window: str = "mediastinum"
) -> tuple[ScanVolume, int]:
    """Body slab with a dark trachea that splits into two bronchi.

    Frames before split_frame hold one ellipse; from split_frame on, two
    ellipses whose bounding-box gap starts at bronchi_gap_px and widens by
    one pixel per frame. The "lung" rendering adds dark parenchyma fields
    and, in the frames just before the split, clutter pairs plus a bridge
    that merges the trachea into the field, which mimics the extra
    candidate frames a lung windowing produces.
    """
    spec.validate()
    s = spec.frame_size
    f = s / 512.0
    cx = int(round(235 * f))
    cy = int(round(245 * f))
    body_cx = body_cy = s // 2
    body = _ellipse(s, s, body_cx, body_cy, int(215 * f), int(235 * f))

    frames = np.zeros((spec.n_frames, s, s), dtype=np.uint8)
    trachea_a, trachea_b = max(4, int(12 * f)), max(3, int(9 * f))
    bronchus_a, bronchus_b = max(3, int(10 * f)), max(3, int(8 * f))

    lung_fields = None
    if window == "lung":
        lung_fields = _ellipse(s, s, int(150 * f), body_cy, int(55 * f), int(140 * f)) | _ellipse(
            s, s, int(362 * f), body_cy, int(55 * f), int(140 * f)
        )

    for idx in range(spec.n_frames):
        frame = np.zeros((s, s), dtype=np.uint8)
        frame[body] = _BODY_INTENSITY
        if lung_fields is not None:
            frame[lung_fields] = _LUNG_FIELD_INTENSITY
        if idx < spec.split_frame:
            frame[_ellipse(s, s, cx, cy, trachea_a, trachea_b)] = 0
            if (
                lung_fields is not None
                and spec.split_frame - _CLUTTER_FRAMES_BEFORE_SPLIT <= idx
            ):
                # A long dark streak off the trachea pushes the combined
                # bounding box past the area ceiling, so the trachea is
                # filtered out and the clutter pair below becomes the only
                # qualifying box pair in these frames.
                frame[cy - 2 : cy + 3, int(150 * f) : cx] = 0
                ca, cb = max(3, int(9 * f)), max(2, int(7 * f))
                c1 = int(290 * f)
                c2 = c1 + 2 * ca + 6
                clutter_cy = int(275 * f)
                frame[_ellipse(s, s, c1, clutter_cy, ca, cb)] = 0
                frame[_ellipse(s, s, c2, clutter_cy, ca, cb)] = 0
        else:
            gap = min(spec.bronchi_gap_px + (idx - spec.split_frame), 30)
            total = 2 * bronchus_a + gap
            cx_left = cx - total // 2
            cx_right = cx_left + total
            frame[_ellipse(s, s, cx_left, cy, bronchus_a, bronchus_b)] = 0
            frame[_ellipse(s, s, cx_right, cy, bronchus_a, bronchus_b)] = 0
        frames[idx] = frame

    manifest = ScanManifest(
        scan_id=f"phantom-trachea-{window}-s{spec.split_frame}-g{spec.bronchi_gap_px}",
        frame_count=spec.n_frames,
        width=s,
        height=s,
        slice_thickness_mm=spec.slice_thickness_mm,
        pixel_spacing_mm=(spec.pixel_spacing_mm, spec.pixel_spacing_mm),
        window=window,
    )
    return ScanVolume(manifest=manifest, frames=frames), spec.split_frame


def disc_mask(diameter_px: int, pad: int = 6) -> np.ndarray:
    """Rasterized disc of the given pixel diameter on a padded canvas."""
    if diameter_px < 1:
        raise SpecOverflow("diameter must be >= 1 px")
    size = diameter_px + 2 * pad
    c = pad + (diameter_px - 1) / 2.0
    return _disc(size, size, c, c, diameter_px / 2.0)


def oracle_max_diameter(mask: np.ndarray) -> float:
    """Brute-force farthest pair over all region pixels (x, y distances).

    Deliberately independent of the perimeter-tracing code path.
    """
    pts = np.argwhere(mask).astype(np.float64)
    if pts.shape[0] == 0:
        raise EmptyRegion("empty mask has no diameter")
    if pts.shape[0] == 1:
        return 0.0
    best = 0.0
    for i in range(0, pts.shape[0], 1024):
        chunk = pts[i : i + 1024]
        diff = chunk[:, None, :] - pts[None, :, :]
        d2 = (diff**2).sum(axis=-1)
        best = max(best, float(d2.max()))
    return math.sqrt(best)
