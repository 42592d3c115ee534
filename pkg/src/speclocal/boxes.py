"""Axis-aligned pixel rectangles."""
from dataclasses import dataclass
import math

import numpy as np


class BoxError(ValueError):
    """A box is degenerate or does not overlap the image."""


def round_half_up(v):
    return int(math.floor(v + 0.5))


@dataclass(frozen=True)
class BBox:
    """Top-left corner ``(x, y)`` and extent ``(w, h)``, 0-based pixels.

    Areas are continuous (``w * h``); no +1 convention.
    """

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w >= 1 and self.h >= 1):
            raise BoxError(f"box extent must be >= 1, got w={self.w}, h={self.h}")

    @property
    def x2(self):
        return self.x + self.w

    @property
    def y2(self):
        return self.y + self.h

    @property
    def area(self):
        return self.w * self.h

    @classmethod
    def from_corners(cls, x1, y1, x2, y2):
        return cls(x1, y1, x2 - x1, y2 - y1)

    def corners(self):
        return (self.x, self.y, self.x2, self.y2)

    def as_tuple(self):
        return (self.x, self.y, self.w, self.h)

    def clamp(self, width, height):
        """Clip to ``[0, width) x [0, height)``; raises if nothing of width >= 1 remains."""
        x1 = max(self.x, 0)
        y1 = max(self.y, 0)
        x2 = min(self.x2, width)
        y2 = min(self.y2, height)
        if x2 - x1 < 1 or y2 - y1 < 1:
            raise BoxError(f"box {self.as_tuple()} lies outside the {width}x{height} image")
        return BBox.from_corners(x1, y1, x2, y2)

    def translate(self, dx, dy):
        return BBox(self.x + dx, self.y + dy, self.w, self.h)


def boxes_to_array(boxes):
    """Stack boxes into an ``(n, 4)`` array of ``x, y, w, h``."""
    if isinstance(boxes, np.ndarray):
        return boxes.reshape(-1, 4)
    return np.array(
        [b.as_tuple() if isinstance(b, BBox) else tuple(b) for b in boxes], dtype=np.float64
    ).reshape(-1, 4)
