"""Small shared geometry helpers.

Convention used throughout the package: points are (x, y) tuples with x as
the column and y as the row; numpy rasters are indexed [row, col]. Pixel
coordinates in boxes are inclusive on both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def round_half_up(value: float) -> int:
    """Round to nearest integer with ties going up (0.5 -> 1).

    Python's round() ties to even, which would make windowing and rect
    scaling disagree with the fixed project-wide rounding mode, so every
    coordinate/intensity rounding funnels through here.
    """
    return int(math.floor(value + 0.5))


@dataclass(frozen=True)
class BoundingBox:
    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"degenerate box {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        # Width times height of the box extent, not a pixel count.
        return self.width * self.height

    def overlaps(self, other: "BoundingBox") -> bool:
        """True when the two inclusive pixel ranges intersect."""
        return not (
            self.x_max < other.x_min
            or other.x_max < self.x_min
            or self.y_max < other.y_min
            or other.y_max < self.y_min
        )

    def contains_point(self, x: int, y: int) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max
