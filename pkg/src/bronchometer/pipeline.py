"""Batch pipeline: load volume, detect carina, crop the right lower lobe.

Writes a fixed artifact set into an output directory:

  carina.json            detection result (deterministic, no timings)
  carina_candidates.csv  every candidate frame with boxes and gap
  rll_NNNN.png           cropped frame per index after the carina frame
  rll_index.json         polygon and file name per cropped frame
  report.json            run metadata and stage timings

Timings live only in report.json; everything else is byte-stable across
reruns with the same inputs and config.
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from PIL import Image

from .carina import SearchConfig, candidates_csv, detect_carina
from .errors import BronchometerError
from .rll import RllSchedule, extract_rll
from .volume_io import load_volume


@dataclass
class PipelineConfig:
    window_override: str | None = None
    area_range: tuple[int, int] | None = None
    gap_range: tuple[int, int] | None = None
    dilate: str = "auto"
    schedule: RllSchedule | None = None


@contextmanager
def _stage(name: str):
    # Tag propagated errors with the stage they came from; the CLI and the
    # report both want to say which step fell over.
    try:
        yield
    except BronchometerError as exc:
        exc.stage = name
        raise


def _dump_json(path: Path, data: dict):
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def run_pipeline(scan_dir: str | Path, out_dir: str | Path, config: PipelineConfig | None = None) -> dict:
    """Run carina detection then RLL extraction, writing all artifacts.

    Returns the report dict that is also written to report.json.
    """
    config = config or PipelineConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    with _stage("volume_io"):
        volume = load_volume(scan_dir, window_override=config.window_override)
    t_load = time.perf_counter() - t0

    with _stage("carina"):
        kwargs: dict = {"dilate": config.dilate}
        if config.area_range is not None:
            kwargs["area_range"] = config.area_range
        if config.gap_range is not None:
            kwargs["gap_range"] = config.gap_range
        result = detect_carina(volume, SearchConfig.for_volume(volume, **kwargs))

    _dump_json(out / "carina.json", result.to_json())
    (out / "carina_candidates.csv").write_text(candidates_csv(result), encoding="utf-8")

    t1 = time.perf_counter()
    with _stage("rll"):
        crops = extract_rll(volume, result, schedule=config.schedule)
    t_rll = time.perf_counter() - t1

    index = []
    for frame_index, cropped, poly in crops:
        name = f"rll_{frame_index:04d}.png"
        Image.fromarray(cropped, mode="L").save(out / name)
        index.append({"frame_index": frame_index, "png": name, "polygon": poly.to_json()})
    _dump_json(
        out / "rll_index.json",
        {"carina_frame": result.carina_frame, "scan_id": volume.manifest.scan_id, "frames": index},
    )

    t_pre, t_box, t_pick = result.timings_s
    report = {
        "scan_id": volume.manifest.scan_id,
        "carina_frame": result.carina_frame,
        "gap_px": result.gap_px,
        "rll_frame_count": len(crops),
        "artifacts": ["carina.json", "carina_candidates.csv", "rll_index.json"]
        + [entry["png"] for entry in index],
        "timings_s": {
            "load": t_load,
            "s1_preprocess": t_pre,
            "s2_boxes": t_box,
            "s3_pick": t_pick,
            "rll": t_rll,
        },
    }
    _dump_json(out / "report.json", report)
    return report
