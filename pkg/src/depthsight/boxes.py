"""Integer pixel rectangles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned pixel box covering columns [x, x+w) and rows [y, y+h).

    A box with zero width or height is empty.
    """

    x: int
    y: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return max(self.w, 0) * max(self.h, 0)

    @property
    def empty(self) -> bool:
        return self.w <= 0 or self.h <= 0

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    def slices(self) -> tuple[slice, slice]:
        """(row, col) slices for indexing an (H, W) array."""
        return slice(self.y, self.y2), slice(self.x, self.x2)

    def contains(self, u, v) -> bool:
        return self.x <= u < self.x2 and self.y <= v < self.y2

    def clip(self, width: int, height: int) -> "Box":
        x1, y1 = max(self.x, 0), max(self.y, 0)
        x2, y2 = min(self.x2, width), min(self.y2, height)
        return Box(x1, y1, max(x2 - x1, 0), max(y2 - y1, 0))

    def within(self, width: int, height: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x2 <= width and self.y2 <= height

    def expand(self, factor: float) -> "Box":
        """Grow about the center so each side is ``factor`` times longer."""
        cx, cy = self.x + self.w / 2, self.y + self.h / 2
        w, h = self.w * factor, self.h * factor
        x1, y1 = int(np.floor(cx - w / 2)), int(np.floor(cy - h / 2))
        return Box(x1, y1, int(np.ceil(cx + w / 2)) - x1, int(np.ceil(cy + h / 2)) - y1)

    def to_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_list(cls, values) -> "Box":
        x, y, w, h = values
        return cls(int(x), int(y), int(w), int(h))


EMPTY_BOX = Box(0, 0, 0, 0)


def iou(a: Box, b: Box) -> float:
    if a.empty or b.empty:
        return 0.0
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def tight_box(mask: np.ndarray) -> Box:
    """Smallest box containing every True pixel; :data:`EMPTY_BOX` if none."""
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return EMPTY_BOX
    cols = np.flatnonzero(mask.any(axis=0))
    return Box(int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1))
