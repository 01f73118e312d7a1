"""Chest CT bronchiectasis toolkit.

Detects the carina (tracheal bifurcation) in axial CT volumes, crops the
right lower lobe from the frames below it, and measures broncho-arterial
pairs: inner airway diameter, artery diameter, their ratio, and airway
wall thickness. Synthetic phantoms with exact ground truth back every
measurement path; a batch CLI and an HTTP/JSON service expose the same
pipeline.
"""

from .carina import (
    CarinaCandidate,
    CarinaResult,
    SearchConfig,
    detect_carina,
    gap_between,
)
from .errors import BronchometerError, InputError
from .geometry import BoundingBox, round_half_up
from .measure_bar import (
    Chord,
    DiameterEstimate,
    Measurement,
    Roi,
    chord_fan,
    max_chord,
    measure_bar,
    trace_perimeter,
)
from .measure_wt import WallSample, wall_thickness, wt_symmetric
from .phantom import (
    BaPhantomSpec,
    TracheaPhantomSpec,
    ba_scan_volume,
    disc_mask,
    gen_ba_pair,
    gen_trachea_volume,
    oracle_max_diameter,
)
from .pipeline import PipelineConfig, run_pipeline
from .rll import RllPolygon, RllSchedule, extract_rll
from .session import Session, SessionStore, export_csv, measure_full
from .volume_io import (
    ScanManifest,
    ScanVolume,
    WindowPreset,
    apply_window,
    load_volume,
    save_scan,
)

__version__ = "0.1.0"

__all__ = [
    "BaPhantomSpec",
    "BoundingBox",
    "BronchometerError",
    "CarinaCandidate",
    "CarinaResult",
    "Chord",
    "DiameterEstimate",
    "InputError",
    "Measurement",
    "PipelineConfig",
    "RllPolygon",
    "RllSchedule",
    "Roi",
    "ScanManifest",
    "ScanVolume",
    "SearchConfig",
    "Session",
    "SessionStore",
    "TracheaPhantomSpec",
    "WallSample",
    "WindowPreset",
    "apply_window",
    "ba_scan_volume",
    "chord_fan",
    "detect_carina",
    "disc_mask",
    "export_csv",
    "extract_rll",
    "gap_between",
    "gen_ba_pair",
    "gen_trachea_volume",
    "load_volume",
    "max_chord",
    "measure_bar",
    "measure_full",
    "oracle_max_diameter",
    "round_half_up",
    "run_pipeline",
    "save_scan",
    "trace_perimeter",
    "wall_thickness",
    "wt_symmetric",
    "__version__",
]
