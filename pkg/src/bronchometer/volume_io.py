"""Scan directory loading, HU windowing, and coordinate scaling.

A scan directory holds one manifest.json plus one file per frame, either
pre-windowed 8-bit grayscale PNGs (frame_0000.png, frame_0001.png, ...) or
raw 16-bit signed HU dumps (frame_0000.raw16, little-endian, row-major).

Window presets (width / level):
    mediastinum   300 /   50     soft tissue bright, air black
    lung         1500 / -500     parenchyma detail, vessels bright
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    CorruptFrame,
    FrameCountMismatch,
    InvalidManifest,
    MissingManifest,
    UnsupportedBitDepth,
)
from .geometry import BoundingBox, round_half_up


@dataclass(frozen=True)
class WindowPreset:
    ww: int
    wl: int


WINDOW_PRESETS = {
    "mediastinum": WindowPreset(ww=300, wl=50),
    "lung": WindowPreset(ww=1500, wl=-500),
}

_WINDOW_NAMES = ("mediastinum", "lung", "none")


@dataclass
class ScanManifest:
    scan_id: str
    frame_count: int
    width: int
    height: int
    slice_thickness_mm: float
    pixel_spacing_mm: tuple[float, float]  # (row, col)
    window: str = "none"

    def validate(self):
        if not self.scan_id:
            raise InvalidManifest("scan_id must be non-empty")
        if self.frame_count < 1:
            raise InvalidManifest(f"frame_count must be >= 1, got {self.frame_count}")
        if self.width < 1 or self.height < 1:
            raise InvalidManifest(f"bad frame size {self.width}x{self.height}")
        if self.slice_thickness_mm <= 0:
            raise InvalidManifest(f"slice_thickness_mm must be > 0, got {self.slice_thickness_mm}")
        if len(self.pixel_spacing_mm) != 2 or any(s <= 0 for s in self.pixel_spacing_mm):
            raise InvalidManifest(f"bad pixel_spacing_mm {self.pixel_spacing_mm}")
        if self.window not in _WINDOW_NAMES:
            raise InvalidManifest(f"window must be one of {_WINDOW_NAMES}, got {self.window!r}")

    def to_json(self) -> dict:
        return {
            "scan_id": self.scan_id,
            "frame_count": self.frame_count,
            "width": self.width,
            "height": self.height,
            "slice_thickness_mm": self.slice_thickness_mm,
            "pixel_spacing_mm": list(self.pixel_spacing_mm),
            "window": self.window,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ScanManifest":
        try:
            manifest = cls(
                scan_id=str(data["scan_id"]),
                frame_count=int(data["frame_count"]),
                width=int(data["width"]),
                height=int(data["height"]),
                slice_thickness_mm=float(data["slice_thickness_mm"]),
                pixel_spacing_mm=tuple(float(s) for s in data["pixel_spacing_mm"]),
                window=str(data.get("window", "none")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidManifest(f"manifest field error: {exc}") from exc
        manifest.validate()
        return manifest


@dataclass
class ScanVolume:
    manifest: ScanManifest
    frames: np.ndarray = field(repr=False)  # (n, h, w) uint8

    def frame(self, index: int) -> np.ndarray:
        return self.frames[index]

    @property
    def frame_count(self) -> int:
        return self.manifest.frame_count


def apply_window(raw_hu: np.ndarray, preset: WindowPreset) -> np.ndarray:
    """Map HU values to 8-bit via the linear window transfer.

    out = clamp(round((hu - (wl - ww/2)) / ww * 255), 0, 255), rounding
    half-up, so the level itself maps to 128.
    """
    lo = preset.wl - preset.ww / 2.0
    t = (raw_hu.astype(np.float64) - lo) * 255.0 / preset.ww
    return np.clip(np.floor(t + 0.5), 0, 255).astype(np.uint8)


def scale_rect(rect: BoundingBox, from_size: int, to_size: int) -> BoundingBox:
    """Rescale box coordinates between frame sizes, rounding half-up."""
    if from_size <= 0 or to_size <= 0:
        raise ValueError("frame sizes must be positive")
    f = to_size / from_size
    return BoundingBox(
        round_half_up(rect.x_min * f),
        round_half_up(rect.y_min * f),
        round_half_up(rect.x_max * f),
        round_half_up(rect.y_max * f),
    )


def _frame_name(index: int, ext: str) -> str:
    return f"frame_{index:04d}.{ext}"


def _load_png_frame(path: Path, manifest: ScanManifest) -> np.ndarray:
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise CorruptFrame(f"{path.name}: {exc}") from exc
    if img.mode == "L":
        arr = np.asarray(img, dtype=np.uint8)
    elif img.mode == "RGB":
        # Some exports store gray as RGB triplets; the red channel carries it.
        arr = np.asarray(img, dtype=np.uint8)[:, :, 0]
    elif img.mode in ("I", "I;16", "I;16B", "F", "RGBA", "P"):
        raise UnsupportedBitDepth(f"{path.name}: mode {img.mode} is not 8-bit grayscale")
    else:
        raise UnsupportedBitDepth(f"{path.name}: mode {img.mode} is not 8-bit grayscale")
    if arr.shape != (manifest.height, manifest.width):
        raise CorruptFrame(
            f"{path.name}: size {arr.shape[1]}x{arr.shape[0]} does not match "
            f"manifest {manifest.width}x{manifest.height}"
        )
    return arr


def _load_raw_frame(path: Path, manifest: ScanManifest, preset: WindowPreset) -> np.ndarray:
    expected = manifest.width * manifest.height * 2
    data = path.read_bytes()
    if len(data) != expected:
        raise CorruptFrame(f"{path.name}: {len(data)} bytes, expected {expected}")
    hu = np.frombuffer(data, dtype="<i2").reshape(manifest.height, manifest.width)
    return apply_window(hu, preset)


def load_volume(path, window_override: str | None = None) -> ScanVolume:
    """Load a scan directory into memory.

    Raw 16-bit frames are windowed on load; window_override picks the preset
    when the manifest's window is "none" (or to re-window raw data).
    Loading is pure: the same directory always yields identical arrays.
    """
    scan_dir = Path(path)
    manifest_path = scan_dir / "manifest.json"
    if not manifest_path.is_file():
        raise MissingManifest(f"no manifest.json in {scan_dir}")
    try:
        data = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidManifest(f"manifest.json is not valid JSON: {exc}") from exc
    manifest = ScanManifest.from_json(data)

    pngs = sorted(scan_dir.glob("frame_*.png"))
    raws = sorted(scan_dir.glob("frame_*.raw16"))
    if pngs and raws:
        raise InvalidManifest(f"{scan_dir} mixes PNG and raw16 frames")
    files = pngs or raws
    if len(files) != manifest.frame_count:
        raise FrameCountMismatch(
            f"{scan_dir}: manifest says {manifest.frame_count} frames, found {len(files)}"
        )

    preset = None
    if raws:
        window = window_override or manifest.window
        if window not in WINDOW_PRESETS:
            raise UnsupportedBitDepth(
                "raw 16-bit frames need a window preset (mediastinum or lung)"
            )
        preset = WINDOW_PRESETS[window]

    ext = "png" if pngs else "raw16"
    frames = np.empty((manifest.frame_count, manifest.height, manifest.width), dtype=np.uint8)
    for i in range(manifest.frame_count):
        frame_path = scan_dir / _frame_name(i, ext)
        if not frame_path.is_file():
            raise FrameCountMismatch(f"{scan_dir}: missing {frame_path.name}")
        if ext == "png":
            frames[i] = _load_png_frame(frame_path, manifest)
        else:
            frames[i] = _load_raw_frame(frame_path, manifest, preset)
    return ScanVolume(manifest=manifest, frames=frames)


def save_scan(volume: ScanVolume, path) -> Path:
    """Write a scan directory (manifest.json + 8-bit PNG frames)."""
    scan_dir = Path(path)
    scan_dir.mkdir(parents=True, exist_ok=True)
    volume.manifest.validate()
    if volume.frames.shape != (
        volume.manifest.frame_count,
        volume.manifest.height,
        volume.manifest.width,
    ):
        raise InvalidManifest(
            f"frame stack {volume.frames.shape} does not match manifest"
        )
    (scan_dir / "manifest.json").write_text(
        json.dumps(volume.manifest.to_json(), indent=2, sort_keys=True) + "\n"
    )
    for i in range(volume.manifest.frame_count):
        Image.fromarray(volume.frames[i], mode="L").save(scan_dir / _frame_name(i, "png"))
    return scan_dir
