"""Run the full carina-then-crop pipeline and inspect the moving cut line.

The cut endpoint advances toward the image corner frame by frame, so the
kept wedge grows as the scan descends. The script prints the polygon per
cropped frame and tiles every fifth crop into one contact sheet.
"""

import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from bronchometer.phantom import TracheaPhantomSpec, gen_trachea_volume
from bronchometer.pipeline import PipelineConfig, run_pipeline
from bronchometer.volume_io import save_scan

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

spec = TracheaPhantomSpec(n_frames=80, split_frame=45)
volume, _ = gen_trachea_volume(spec)

with tempfile.TemporaryDirectory() as tmp:
    scan_dir = Path(tmp) / "scan"
    save_scan(volume, scan_dir)
    report = run_pipeline(scan_dir, out_dir / "rll", PipelineConfig())

print(f"carina frame {report['carina_frame']}, "
      f"{report['rll_frame_count']} cropped frames")

import json

index = json.loads((out_dir / "rll" / "rll_index.json").read_text())
for entry in index["frames"][:5]:
    poly = entry["polygon"]
    print(f"  frame {entry['frame_index']}: start {tuple(poly['start'])} "
          f"end {tuple(poly['end'])}")
print("  ...")

tiles = [
    np.array(Image.open(out_dir / "rll" / e["png"]))
    for e in index["frames"][::5]
]
sheet = np.hstack([np.pad(t, ((0, 0), (0, 4)), constant_values=255) for t in tiles])
Image.fromarray(sheet, mode="L").save(out_dir / "rll_contact_sheet.png")
print(f"wrote {out_dir / 'rll_contact_sheet.png'}")
