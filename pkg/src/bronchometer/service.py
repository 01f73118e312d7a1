"""HTTP/JSON service for the annotation workstation.

Serves scan frames as PNG, runs carina/RLL on demand, and owns the
measurement sessions. All state lives on disk (scan dirs, session files,
an RLL artifact cache); the process itself only caches decoded volumes.

Endpoints (JSON unless noted):
  GET  /api/scans
  GET  /api/scans/{scan_id}/frames/{n}        PNG, ETag/304
  POST /api/scans/{scan_id}/carina
  POST /api/scans/{scan_id}/rll
  GET  /api/scans/{scan_id}/rll/{n}           PNG
  POST /api/sessions
  GET  /api/sessions/{session_id}
  POST /api/sessions/{session_id}/measure
  GET  /api/sessions/{session_id}/export.csv  text/csv
"""

from __future__ import annotations

import hashlib
import io
import json
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel, Field

from .carina import SearchConfig, detect_carina
from .errors import BronchometerError, InputError, SessionNotFound
from .measure_bar import Roi
from .pipeline import PipelineConfig, run_pipeline
from .session import SessionStore, export_csv
from .volume_io import ScanVolume, load_volume


class CarinaBody(BaseModel):
    window: str | None = None
    area: tuple[int, int] | None = None
    gap: tuple[int, int] | None = None
    dilate: str = "auto"
    session_id: str | None = None


class RllBody(BaseModel):
    window: str | None = None
    dilate: str = "auto"


class SessionBody(BaseModel):
    scan_id: str
    wt_seed: int = 0


class RoiBody(BaseModel):
    frame_index: int
    rect: tuple[int, int, int, int]
    label: str = ""


class MeasureBody(RoiBody):
    wt_threshold_px: int = Field(default=4, ge=1)


def _png_bytes(frame) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(frame, mode="L").save(buf, format="PNG")
    return buf.getvalue()


class _VolumeCache:
    def __init__(self):
        self._lock = threading.Lock()
        self._volumes: dict[tuple, ScanVolume] = {}

    def get(self, scan_dir: Path, window_override: str | None) -> ScanVolume:
        key = (str(scan_dir), window_override)
        with self._lock:
            vol = self._volumes.get(key)
        if vol is not None:
            return vol
        vol = load_volume(scan_dir, window_override=window_override)
        with self._lock:
            self._volumes[key] = vol
        return vol


def create_app(
    scans_dir: str | Path,
    sessions_dir: str | Path,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    scans_root = Path(scans_dir)
    store = SessionStore(sessions_dir)
    rll_root = Path(sessions_dir) / "_rll"
    cache = _VolumeCache()

    app = FastAPI(title="bronchometer", docs_url=None, redoc_url=None)

    @app.exception_handler(BronchometerError)
    def _bronchometer_error(request: Request, exc: BronchometerError):
        if isinstance(exc, SessionNotFound):
            status = 404
        elif isinstance(exc, InputError):
            status = 400
        else:
            status = 422
        payload = {"error": type(exc).__name__, "detail": str(exc)}
        stage = getattr(exc, "stage", None)
        if stage:
            payload["stage"] = stage
        return JSONResponse(status_code=status, content=payload)

    def _scan_map() -> dict[str, Path]:
        found: dict[str, Path] = {}
        if scans_root.is_dir():
            for manifest in sorted(scans_root.glob("*/manifest.json")):
                try:
                    scan_id = json.loads(manifest.read_text())["scan_id"]
                    found[str(scan_id)] = manifest.parent
                except (ValueError, KeyError):
                    continue
        return found

    def _scan_dir(scan_id: str) -> Path:
        path = _scan_map().get(scan_id)
        if path is None:
            raise HTTPException(status_code=404, detail=f"no scan {scan_id!r}")
        return path

    def _volume(scan_id: str, window_override: str | None = None) -> ScanVolume:
        return cache.get(_scan_dir(scan_id), window_override)

    @app.get("/api/scans")
    def list_scans():
        scans = []
        for scan_id, path in _scan_map().items():
            vol = cache.get(path, None)
            m = vol.manifest
            scans.append(
                {
                    "scan_id": m.scan_id,
                    "frame_count": m.frame_count,
                    "width": m.width,
                    "height": m.height,
                    "slice_thickness_mm": m.slice_thickness_mm,
                    "pixel_spacing_mm": list(m.pixel_spacing_mm),
                    "window": m.window,
                }
            )
        return {"scans": scans}

    def _png_response(data: bytes, request: Request) -> Response:
        etag = '"' + hashlib.sha256(data).hexdigest()[:32] + '"'
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        return Response(
            content=data,
            media_type="image/png",
            headers={"ETag": etag, "Cache-Control": "no-cache"},
        )

    @app.get("/api/scans/{scan_id}/frames/{n}")
    def get_frame(scan_id: str, n: int, request: Request):
        vol = _volume(scan_id)
        if not (0 <= n < vol.frame_count):
            raise HTTPException(status_code=404, detail=f"frame {n} outside volume")
        return _png_response(_png_bytes(vol.frame(n)), request)

    @app.post("/api/scans/{scan_id}/carina")
    def run_carina(scan_id: str, body: CarinaBody | None = None):
        body = body or CarinaBody()
        vol = _volume(scan_id, body.window)
        kwargs: dict = {"dilate": body.dilate}
        if body.area is not None:
            kwargs["area_range"] = body.area
        if body.gap is not None:
            kwargs["gap_range"] = body.gap
        result = detect_carina(vol, SearchConfig.for_volume(vol, **kwargs))
        payload = result.to_json()
        if body.session_id is not None:
            store.attach_carina(body.session_id, payload)
        return payload

    @app.post("/api/scans/{scan_id}/rll")
    def run_rll(scan_id: str, body: RllBody | None = None):
        body = body or RllBody()
        scan_dir = _scan_dir(scan_id)
        out_dir = rll_root / scan_id
        config = PipelineConfig(window_override=body.window, dilate=body.dilate)
        run_pipeline(scan_dir, out_dir, config)
        index = (out_dir / "rll_index.json").read_text(encoding="utf-8")
        return Response(content=index, media_type="application/json")

    @app.get("/api/scans/{scan_id}/rll/{n}")
    def get_rll_frame(scan_id: str, n: int, request: Request):
        _scan_dir(scan_id)
        path = rll_root / scan_id / f"rll_{n:04d}.png"
        if not path.is_file():
            raise HTTPException(
                status_code=404,
                detail=f"no RLL crop for frame {n}; POST /api/scans/{scan_id}/rll first",
            )
        return _png_response(path.read_bytes(), request)

    @app.post("/api/sessions", status_code=201)
    def create_session(body: SessionBody):
        _scan_dir(body.scan_id)
        session = store.create(body.scan_id, body.wt_seed)
        return session.to_json()

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return store.load(session_id).to_json()

    @app.post("/api/sessions/{session_id}/measure")
    def measure(session_id: str, body: MeasureBody):
        session = store.load(session_id)
        vol = _volume(session.scan_id)
        roi = Roi.from_json(
            {"frame_index": body.frame_index, "rect": list(body.rect), "label": body.label},
            scan_id=session.scan_id,
        )
        measurement = store.measure(
            session_id, roi, vol, wt_threshold_px=body.wt_threshold_px
        )
        return measurement.to_json()

    @app.get("/api/sessions/{session_id}/export.csv")
    def export(session_id: str):
        data = export_csv(store.load(session_id))
        return Response(
            content=data,
            media_type="text/csv; charset=utf-8",
            headers={
                "Content-Disposition": f'attachment; filename="session_{session_id}.csv"'
            },
        )

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
