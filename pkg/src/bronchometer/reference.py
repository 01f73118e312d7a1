"""Frozen cross-check rows from the clinical validation set.

Two kinds of reference data: box pairs with their known gap distances
(exercising gap_between), and per-pair measurement rows from the method
and from an expert reader (exercising the BAR and symmetric-wall
arithmetic). Values are transcribed once here and nowhere else; tests
compare freshly computed arithmetic against them.

Not every recorded row is internally consistent. Method row 10 lists a
BAR that does not follow from its own IAD/ARD columns, and expert rows 1
and 2 list wall values off by 0.05-0.10 mm from (OAD - IAD) / 2. Those
rows are kept verbatim and flagged below rather than silently corrected.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import BoundingBox


@dataclass(frozen=True)
class GapCase:
    box_a: BoundingBox
    box_b: BoundingBox
    expected_gap_px: int


GAP_CASES: tuple[GapCase, ...] = (
    GapCase(BoundingBox(213, 227, 245, 252), BoundingBox(249, 218, 277, 237), 4),
    GapCase(BoundingBox(212, 241, 238, 263), BoundingBox(244, 236, 268, 255), 6),
    GapCase(BoundingBox(200, 267, 225, 286), BoundingBox(231, 265, 255, 278), 6),
    GapCase(BoundingBox(209, 222, 236, 242), BoundingBox(240, 238, 266, 254), 4),
)


@dataclass(frozen=True)
class MethodRow:
    dbap_id: int
    iad_mm: float
    ard_mm: float
    bar: float
    wt_mm: float


# BAR column should equal iad/ard to within BAR_TOLERANCE before rounding.
METHOD_ROWS: tuple[MethodRow, ...] = (
    MethodRow(1, 1.81, 2.77, 0.65, 0.80),
    MethodRow(2, 2.58, 3.19, 0.81, 0.54),
    MethodRow(3, 3.45, 4.78, 0.72, 1.00),
    MethodRow(4, 2.43, 2.59, 0.94, 0.71),
    MethodRow(5, 2.63, 3.35, 0.79, 0.82),
    MethodRow(6, 3.51, 3.72, 0.94, 0.82),
    MethodRow(7, 2.64, 3.42, 0.77, 0.91),
    MethodRow(8, 2.91, 4.11, 0.71, 0.91),
    MethodRow(9, 2.66, 3.36, 0.79, 0.73),
    MethodRow(10, 3.01, 3.90, 0.81, 0.82),
)

BAR_TOLERANCE = 0.005

# Row 10's listed BAR (0.81) is 0.038 away from 3.01/3.90 = 0.772; the
# cross-check is expected to flag it.
METHOD_ROW_ANOMALY_IDS = frozenset({10})


@dataclass(frozen=True)
class ExpertRow:
    dbap_id: int
    eiad_mm: float
    eoad_mm: float
    eard_mm: float
    ebar: float
    ewt_mm: float


EXPERT_ROWS: tuple[ExpertRow, ...] = (
    ExpertRow(1, 1.9, 3.1, 2.60, 0.73, 0.70),
    ExpertRow(2, 2.7, 3.8, 3.42, 0.79, 0.50),
    ExpertRow(3, 3.4, 5.4, 4.72, 0.72, 1.00),
    ExpertRow(4, 2.5, 3.9, 2.84, 0.88, 0.70),
    ExpertRow(5, 2.7, 4.3, 3.10, 0.87, 0.80),
    ExpertRow(6, 3.4, 4.7, 3.82, 0.89, 0.65),
    ExpertRow(7, 2.7, 4.6, 2.62, 1.03, 0.95),
    ExpertRow(8, 3.1, 4.9, 3.97, 0.78, 0.90),
    ExpertRow(9, 2.7, 4.1, 3.51, 0.77, 0.70),
    ExpertRow(10, 3.2, 4.9, 3.90, 0.82, 0.85),
)

# Expert rows where (eoad - eiad) / 2 equals ewt_mm (float tolerance 1e-9).
EXPERT_CONSISTENT_IDS = frozenset({3, 4, 5, 6, 7, 8, 9, 10})

# For the two inconsistent rows, the value the symmetric formula yields.
EXPERT_COMPUTED_WT = {1: 0.60, 2: 0.55}
