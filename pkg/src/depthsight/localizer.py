"""Pick the pixel that represents an object inside its box, then lift it to 3D.

Given the valid depths ``Z`` inside a box, a reference depth ``z_ref`` is
chosen by one of three rules and the returned pixel is the one whose depth
is closest to ``z_ref`` (first in row-major order on ties):

* ``MIN_DEPTH``: ``z_ref = min(Z)``
* ``MEAN_BELOW_Q1``: mean of the depths strictly below the first quartile
* ``MEDIAN_BELOW_Q1``: median of those same depths

The first quartile is linear interpolation on the sorted sample at index
``(n - 1) / 4``. When nothing lies strictly below it (ties, tiny boxes)
the candidate set falls back to ``{min(Z)}``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from depthsight.boxes import Box
from depthsight.depthmap import DepthMap
from depthsight.detector import Detection
from depthsight.errors import NoDepthInBox
from depthsight.geometry import Point3D, StereoRig, depth_to_disparity, reproject


class ZrefMethod(enum.Enum):
    MIN_DEPTH = "min"
    MEAN_BELOW_Q1 = "meanq1"
    MEDIAN_BELOW_Q1 = "medianq1"

    @property
    def label(self) -> str:
        return {"min": "Method 1", "meanq1": "Method 2", "medianq1": "Method 3"}[self.value]

    @classmethod
    def parse(cls, value) -> "ZrefMethod":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown method {value!r}; expected one of "
                             f"{[m.value for m in cls]}") from None


ALL_METHODS = tuple(ZrefMethod)


def first_quartile(sorted_z: np.ndarray) -> float:
    return float(np.quantile(sorted_z, 0.25, method="linear"))


def reference_depth(z: np.ndarray, method: ZrefMethod) -> float:
    """``z_ref`` for a 1-D array of valid depths."""
    if method is ZrefMethod.MIN_DEPTH:
        return float(z.min())
    s = np.sort(z)
    q1 = first_quartile(s)
    below = s[s < q1]
    if below.size == 0:
        below = s[:1]
    if method is ZrefMethod.MEAN_BELOW_Q1:
        return float(np.mean(below))
    return float(np.median(below))


def select_point(m: DepthMap, box: Box, method: ZrefMethod) -> tuple[tuple[int, int], float]:
    """Return ``((u, v), z_ref)`` for the representative pixel of ``box``."""
    method = ZrefMethod.parse(method)
    clipped = box.clip(m.width, m.height)
    if clipped.empty:
        raise NoDepthInBox(f"box {box} lies outside the image")
    patch = m.data[clipped.slices()]
    valid = ~np.isnan(patch)
    if not valid.any():
        raise NoDepthInBox(f"box {box} contains no valid depth")
    rows, cols = np.nonzero(valid)           # row-major order
    z = patch[rows, cols]
    z_ref = reference_depth(z, method)
    i = int(np.argmin(np.abs(z - z_ref)))    # first minimum wins
    return (clipped.x + int(cols[i]), clipped.y + int(rows[i])), z_ref


@dataclass(frozen=True)
class LocalizedDetection:
    detection: Detection
    pixel: tuple[int, int]
    depth: float
    z_ref: float
    position: Point3D
    method: ZrefMethod

    def to_json_dict(self, frame_id: int) -> dict:
        b = self.detection.box
        return {
            "frame_id": frame_id,
            "box": b.to_list(),
            "conf": self.detection.confidence,
            "source": self.detection.source,
            "method": self.method.value,
            "pixel": list(self.pixel),
            "z_ref": self.z_ref,
            "xyz": list(self.position.as_tuple()),
        }


def localize(m: DepthMap, det: Detection, rig: StereoRig, method: ZrefMethod) -> LocalizedDetection:
    method = ZrefMethod.parse(method)
    (u, v), z_ref = select_point(m, det.box, method)
    z = float(m.data[v, u])
    d = depth_to_disparity(rig, z)
    position = reproject(rig, u, v, d)
    return LocalizedDetection(det, (u, v), z, z_ref, position, method)
