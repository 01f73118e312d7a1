"""Command line interface.

Verbs: carina, rll, measure, phantom, serve, validate. Exit codes: 0 on
success, 2 for input problems (bad files, bad arguments), 3 for pipeline
failures (nothing detected, degenerate geometry, failed validation).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from PIL import Image

from . import acceptance
from .carina import CarinaResult, SearchConfig, candidates_csv, detect_carina
from .errors import BronchometerError, InputError
from .measure_bar import Roi
from .phantom import BaPhantomSpec, TracheaPhantomSpec, ba_scan_volume, gen_trachea_volume
from .rll import RllSchedule, extract_rll
from .session import Session, export_csv, measure_full
from .volume_io import load_volume, save_scan

log = logging.getLogger(__name__)

ENV_SEED = "BRONCHOMETER_SEED"


def _parse_range(text: str, flag: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise InputError(f"{flag} expects LO:HI, got {text!r}") from None


def _dump_json(path: Path, data: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _wt_seed(args) -> int:
    # Flag beats the environment variable beats the default of 0.
    if args.wt_seed is not None:
        return args.wt_seed
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"{ENV_SEED} must be an integer, got {env!r}") from None
    return 0


def cmd_carina(args) -> int:
    volume = load_volume(args.scan, window_override=args.window)
    kwargs: dict = {"dilate": args.dilate}
    if args.area is not None:
        kwargs["area_range"] = _parse_range(args.area, "--area")
    if args.gap is not None:
        kwargs["gap_range"] = _parse_range(args.gap, "--gap")
    result = detect_carina(volume, SearchConfig.for_volume(volume, **kwargs))
    out = Path(args.out)
    _dump_json(out, result.to_json())
    csv_path = out.with_name(out.stem + "_candidates.csv")
    csv_path.write_text(candidates_csv(result), encoding="utf-8")
    print(
        f"carina at frame {result.carina_frame} (gap {result.gap_px} px, "
        f"{len(result.candidates)} candidate frames) -> {out}"
    )
    return 0


def cmd_rll(args) -> int:
    volume = load_volume(args.scan, window_override=args.window)
    try:
        carina = CarinaResult.from_json(json.loads(Path(args.carina).read_text()))
    except FileNotFoundError:
        raise InputError(f"carina file {args.carina} not found") from None
    except (ValueError, KeyError) as exc:
        raise InputError(f"cannot parse carina file {args.carina}: {exc}") from None
    schedule = None
    if args.dx is not None or args.dy is not None:
        if args.dx is None or args.dy is None:
            raise InputError("--dx and --dy must be given together")
        schedule = RllSchedule(dx=args.dx, dy=args.dy)
    crops = extract_rll(volume, carina, schedule=schedule)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = []
    for frame_index, cropped, poly in crops:
        name = f"rll_{frame_index:04d}.png"
        Image.fromarray(cropped, mode="L").save(out_dir / name)
        index.append({"frame_index": frame_index, "png": name, "polygon": poly.to_json()})
    _dump_json(
        out_dir / "rll_index.json",
        {
            "carina_frame": carina.carina_frame,
            "scan_id": volume.manifest.scan_id,
            "frames": index,
        },
    )
    print(f"{len(crops)} cropped frames -> {out_dir}")
    return 0


def cmd_measure(args) -> int:
    volume = load_volume(args.scan, window_override=args.window)
    try:
        roi_specs = json.loads(Path(args.roi).read_text())
    except FileNotFoundError:
        raise InputError(f"roi file {args.roi} not found") from None
    except ValueError as exc:
        raise InputError(f"cannot parse roi file {args.roi}: {exc}") from None
    if not isinstance(roi_specs, list):
        raise InputError("roi file must hold a JSON list")
    seed = _wt_seed(args)
    session = Session(session_id="cli", scan_id=volume.manifest.scan_id, wt_seed=seed)
    for i, spec in enumerate(roi_specs):
        roi = Roi.from_json(spec, scan_id=volume.manifest.scan_id)
        frame = volume.frame(roi.frame_index)
        measurement = measure_full(
            roi,
            frame,
            volume.manifest.pixel_spacing_mm,
            wt_seed=seed + i,
            wt_threshold_px=args.wt_threshold,
        )
        session.append_measurement(measurement)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(export_csv(session))
    _dump_json(out.with_suffix(".json"), {"measurements": session.measurements})
    print(f"{len(session.measurements)} measurements -> {out}")
    return 0


def cmd_phantom(args) -> int:
    out_dir = Path(args.out)
    if args.kind == "ba":
        spec = BaPhantomSpec(
            lumen_d_px=args.lumen,
            wall_t_px=args.wall,
            artery_d_px=args.artery,
            separation_px=args.separation,
            noise_sigma=args.noise,
        )
        volume, truth = ba_scan_volume(spec, seed=args.seed)
        save_scan(volume, out_dir)
        _dump_json(out_dir / "ground_truth.json", truth)
    else:
        spec = TracheaPhantomSpec(
            n_frames=args.frames,
            split_frame=args.split,
            bronchi_gap_px=args.gap,
        )
        volume, split = gen_trachea_volume(spec, window=args.window)
        save_scan(volume, out_dir)
        _dump_json(
            out_dir / "ground_truth.json",
            {"split_frame": split, "bronchi_gap_px": spec.bronchi_gap_px},
        )
    print(f"phantom scan {volume.manifest.scan_id!r} -> {out_dir}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    ui_dir = args.ui
    if ui_dir is not None and not Path(ui_dir).is_dir():
        raise InputError(f"--ui directory {ui_dir} not found")
    app = create_app(args.scans, args.sessions, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_validate(args) -> int:
    results = acceptance.run_all()
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 3 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bronchometer",
        description="Carina detection, RLL cropping and BA-pair measurement for chest CT.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("carina", help="detect the tracheal bifurcation frame")
    p.add_argument("--scan", required=True, help="scan directory with manifest.json")
    p.add_argument("--window", choices=["mediastinum", "lung"], default=None)
    p.add_argument("--area", default=None, help="box area filter LO:HI (default 200:1500)")
    p.add_argument("--gap", default=None, help="box gap filter LO:HI (default 3:7)")
    p.add_argument("--dilate", choices=["auto", "on", "off"], default="auto")
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=cmd_carina)

    p = sub.add_parser("rll", help="crop the right lower lobe from frames after the carina")
    p.add_argument("--scan", required=True)
    p.add_argument("--carina", required=True, help="carina JSON from the carina verb")
    p.add_argument("--window", choices=["mediastinum", "lung"], default=None)
    p.add_argument("--dx", type=int, default=None, help="endpoint x step per frame")
    p.add_argument("--dy", type=int, default=None, help="endpoint y step per frame")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_rll)

    p = sub.add_parser("measure", help="measure BA pairs for a list of ROIs")
    p.add_argument("--scan", required=True)
    p.add_argument("--roi", required=True, help="JSON list of {frame_index, rect, label}")
    p.add_argument("--window", choices=["mediastinum", "lung"], default=None)
    p.add_argument("--wt-seed", type=int, default=None, help=f"overrides {ENV_SEED}")
    p.add_argument("--wt-threshold", type=int, default=4, help="wall band radius in px")
    p.add_argument("--out", required=True, help="output CSV path (JSON written alongside)")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("phantom", help="generate a synthetic scan with ground truth")
    kinds = p.add_subparsers(dest="kind", required=True)
    ba = kinds.add_parser("ba", help="single-frame broncho-arterial pair")
    ba.add_argument("--lumen", type=int, default=10, help="lumen diameter px")
    ba.add_argument("--wall", type=int, default=3, help="wall thickness px")
    ba.add_argument("--artery", type=int, default=12, help="artery diameter px")
    ba.add_argument("--separation", type=int, default=16, help="airway-artery gap px")
    ba.add_argument("--noise", type=float, default=0.0, help="gaussian sigma per region")
    ba.add_argument("--seed", type=int, default=0)
    ba.add_argument("--out", required=True)
    ba.set_defaults(func=cmd_phantom)
    tr = kinds.add_parser("trachea", help="multi-frame splitting trachea volume")
    tr.add_argument("--frames", type=int, default=100)
    tr.add_argument("--split", type=int, default=50)
    tr.add_argument("--gap", type=int, default=5, help="bronchi box gap at the split")
    tr.add_argument("--window", choices=["mediastinum", "lung"], default="mediastinum")
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=cmd_phantom)

    p = sub.add_parser("serve", help="run the HTTP/JSON annotation service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scans", required=True, help="directory of scan directories")
    p.add_argument("--sessions", required=True, help="directory for session files")
    p.add_argument("--ui", default=None, help="static UI bundle to serve at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("validate", help="run the full phantom acceptance suite")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BronchometerError as exc:
        stage = getattr(exc, "stage", None)
        where = f" [{stage}]" if stage else ""
        print(f"error{where} {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
