"""Measurement sessions: one JSON file per session, CSV export.

A session records the ROIs an operator drew over one scan and the
measurements computed for them, in order. Persistence is a flat JSON
file per session under a sessions directory; writes go through a
per-session lock and an atomic replace, so a failed measurement never
corrupts or half-updates the file.

Measurements are stored in their wire (JSON) form. The file is the
source of truth for the UI and for CSV export; nothing downstream needs
the geometry rehydrated into objects.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .errors import (
    AirwayNotFound,
    ArteryNotFound,
    EmptyRegion,
    RoiOutOfBounds,
    SessionNotFound,
)
from .measure_bar import (
    AIRWAY_FAMILY,
    ARTERY_FAMILY,
    Measurement,
    Roi,
    clip_roi,
    estimate_region_diameter,
)
from .measure_wt import (
    DEFAULT_BAND_THRESHOLD_PX,
    DEFAULT_SECTOR_HALF_DEG,
    wall_thickness,
)
from .volume_io import ScanVolume

CSV_HEADER = "dbap_id,iad_mm,ard_mm,bar,wt_mm"


def measure_full(
    roi: Roi,
    frame: np.ndarray,
    pixel_spacing_mm: tuple[float, float],
    wt_seed: int,
    wt_threshold_px: int = DEFAULT_BAND_THRESHOLD_PX,
    sector_half_deg: float = DEFAULT_SECTOR_HALF_DEG,
) -> Measurement:
    """Full per-ROI measurement: diameters, ratio and wall thickness.

    Same flow as measure_bar plus the wall estimate, composed here so the
    wall sampler sees the ROI-local inner perimeter before anything is
    shifted to frame coordinates.
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
    wt_mm, wt_px, samples, band = wall_thickness(
        roi_pixels,
        airway_perim,
        pixel_spacing_mm,
        seed=wt_seed,
        threshold_px=wt_threshold_px,
        sector_half_deg=sector_half_deg,
    )
    dx, dy = roi.rect.x_min, roi.rect.y_min
    return Measurement(
        roi=roi,
        iad=iad.shifted(dx, dy),
        ard=ard.shifted(dx, dy),
        bar=iad.mean_mm / ard.mean_mm,
        wt_mm=wt_mm,
        wt_px=wt_px,
        wt_samples=[s.shifted(dx, dy) for s in samples],
        wt_seed=wt_seed,
        airway_perimeter=[(x + dx, y + dy) for x, y in airway_perim.coords],
        artery_perimeter=[(x + dx, y + dy) for x, y in artery_perim.coords],
        outer_perimeter=[(x + dx, y + dy) for x, y in band.outer_perimeter.coords],
    )


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class Session:
    session_id: str
    scan_id: str
    wt_seed: int
    carina: dict | None = None
    rois: list[dict] = field(default_factory=list)
    measurements: list[dict] = field(default_factory=list)
    created_at: str = field(default_factory=_utc_now)
    updated_at: str = field(default_factory=_utc_now)

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "scan_id": self.scan_id,
            "wt_seed": self.wt_seed,
            "carina": self.carina,
            "rois": self.rois,
            "measurements": self.measurements,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Session":
        return cls(
            session_id=str(data["session_id"]),
            scan_id=str(data["scan_id"]),
            wt_seed=int(data["wt_seed"]),
            carina=data.get("carina"),
            rois=list(data.get("rois", [])),
            measurements=list(data.get("measurements", [])),
            created_at=str(data["created_at"]),
            updated_at=str(data["updated_at"]),
        )

    def append_measurement(self, measurement: Measurement):
        self.rois.append(measurement.roi.to_json())
        self.measurements.append(measurement.to_json())
        self.updated_at = _utc_now()


def session_to_bytes(session: Session) -> bytes:
    return (json.dumps(session.to_json(), sort_keys=True, indent=2) + "\n").encode("utf-8")


def _fmt2(value: float | None) -> str:
    if value is None:
        return ""
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def export_csv(session: Session) -> bytes:
    """Header plus one row per measurement, values to 2 decimals half-up."""
    lines = [CSV_HEADER]
    for i, m in enumerate(session.measurements, start=1):
        lines.append(
            ",".join(
                (
                    str(i),
                    _fmt2(m["iad"]["mean_mm"]),
                    _fmt2(m["ard"]["mean_mm"]),
                    _fmt2(m["bar"]),
                    _fmt2(m["wt_mm"]),
                )
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


class SessionStore:
    """One JSON file per session; per-session write lock; atomic replace."""

    def __init__(self, sessions_dir: str | Path):
        self.sessions_dir = Path(sessions_dir)
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.json"

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def create(self, scan_id: str, wt_seed: int) -> Session:
        session = Session(session_id=uuid.uuid4().hex[:12], scan_id=scan_id, wt_seed=wt_seed)
        self.save(session)
        return session

    def load(self, session_id: str) -> Session:
        path = self._path(session_id)
        if not path.is_file():
            raise SessionNotFound(f"no session {session_id!r} in {self.sessions_dir}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            return Session.from_json(data)
        except (ValueError, KeyError) as exc:
            raise SessionNotFound(f"session file {path.name} is unreadable: {exc}") from exc

    def save(self, session: Session):
        path = self._path(session.session_id)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(session_to_bytes(session))
        os.replace(tmp, path)

    def measure(
        self,
        session_id: str,
        roi: Roi,
        volume: ScanVolume,
        wt_threshold_px: int = DEFAULT_BAND_THRESHOLD_PX,
        sector_half_deg: float = DEFAULT_SECTOR_HALF_DEG,
    ) -> Measurement:
        """Load, measure, append, persist; the file is untouched on error.

        The per-measurement seed is the session seed plus the measurement
        index, so remeasuring an identical ROI later stays reproducible
        even though each entry samples independently.
        """
        with self.lock_for(session_id):
            session = self.load(session_id)
            if not (0 <= roi.frame_index < volume.frame_count):
                raise RoiOutOfBounds(
                    f"frame_index {roi.frame_index} outside 0..{volume.frame_count - 1}"
                )
            frame = volume.frame(roi.frame_index)
            measurement = measure_full(
                roi,
                frame,
                volume.manifest.pixel_spacing_mm,
                wt_seed=session.wt_seed + len(session.measurements),
                wt_threshold_px=wt_threshold_px,
                sector_half_deg=sector_half_deg,
            )
            session.append_measurement(measurement)
            self.save(session)
            return measurement

    def attach_carina(self, session_id: str, carina: dict):
        with self.lock_for(session_id):
            session = self.load(session_id)
            session.carina = carina
            session.updated_at = _utc_now()
            self.save(session)
