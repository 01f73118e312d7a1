"""Show how the two window presets map Hounsfield values to 8-bit gray.

Prints the anchor points of each preset and writes a ramp image with the
mediastinum curve on top and the lung curve below, so the difference in
slope and clipping range is visible at a glance.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from bronchometer.volume_io import WINDOW_PRESETS, apply_window

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

hu = np.arange(-1400, 601).reshape(1, -1).astype(np.int32)

for name, preset in WINDOW_PRESETS.items():
    lo = preset.wl - preset.ww // 2
    hi = preset.wl + preset.ww // 2
    mapped = apply_window(hu, preset)
    print(f"{name}: WW {preset.ww} WL {preset.wl} -> black below {lo} HU, "
          f"saturated above {hi} HU")
    for probe in (lo, preset.wl, hi):
        col = probe - int(hu[0, 0])
        print(f"  {probe:+5d} HU -> {mapped[0, col]:3d}")

strips = []
for name in ("mediastinum", "lung"):
    strip = apply_window(hu, WINDOW_PRESETS[name])
    strips.append(np.repeat(strip, 60, axis=0))
    strips.append(np.full((8, hu.shape[1]), 255, dtype=np.uint8))  # separator

ramp = np.vstack(strips[:-1])
Image.fromarray(ramp, mode="L").save(out_dir / "window_ramps.png")
print(f"wrote {out_dir / 'window_ramps.png'} ({ramp.shape[1]}x{ramp.shape[0]})")
