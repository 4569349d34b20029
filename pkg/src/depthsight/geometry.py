"""Rectified stereo camera model.

Coordinates are in the left camera frame: z forward, x right, y down.
Pixel (col, row) has its center at (u, v) = (col, row).

Disparity is taken as ``d = x_right - x_left``, which is nonpositive for
points in front of the rig when both principal points share the same
column. With that convention the reprojection

    [X, Y, Z] = T / (cx_l - cx_r - d) * [u - cx_l, v - cy_l, f]

holds as written. Use :func:`from_positive_disparity` to convert the more
common ``x_left - x_right`` values before calling into this module.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from depthsight.errors import (
    ConfigError,
    DegenerateDisparity,
    NonPositiveDepth,
    OutOfBounds,
)

DENOMINATOR_EPS = 1e-9


@dataclass(frozen=True)
class StereoRig:
    focal: float
    cx_l: float
    cy_l: float
    cx_r: float
    baseline: float
    width: int
    height: int

    def __post_init__(self):
        for name in ("focal", "cx_l", "cy_l", "cx_r", "baseline"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"rig field {name} must be finite")
        if self.focal <= 0:
            raise ConfigError(f"focal must be positive, got {self.focal}")
        if self.baseline <= 0:
            raise ConfigError(f"baseline must be positive, got {self.baseline}")
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"image size must be at least 1x1, got {self.width}x{self.height}")
        if not 0 <= self.cx_l < self.width:
            raise ConfigError(f"cx_l={self.cx_l} outside [0, {self.width})")
        if not 0 <= self.cy_l < self.height:
            raise ConfigError(f"cy_l={self.cy_l} outside [0, {self.height})")
        if not 0 <= self.cx_r < self.width:
            raise ConfigError(f"cx_r={self.cx_r} outside [0, {self.width})")

    @property
    def principal_offset(self) -> float:
        """Disparity of a point at infinite depth."""
        return self.cx_l - self.cx_r

    def contains(self, u: float, v: float) -> bool:
        return -0.5 <= u < self.width - 0.5 and -0.5 <= v < self.height - 0.5

    def to_json_dict(self) -> dict:
        return {
            "focal": self.focal,
            "cx_l": self.cx_l,
            "cy_l": self.cy_l,
            "cx_r": self.cx_r,
            "baseline_m": self.baseline,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "StereoRig":
        try:
            return cls(
                focal=float(data["focal"]),
                cx_l=float(data["cx_l"]),
                cy_l=float(data["cy_l"]),
                cx_r=float(data["cx_r"]),
                baseline=float(data["baseline_m"]),
                width=int(data["width"]),
                height=int(data["height"]),
            )
        except KeyError as exc:
            raise ConfigError(f"rig calibration is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed rig calibration: {exc}") from None


# Reasonable desk-scale default: VGA, ~77 deg horizontal FOV, 12 cm baseline.
DEFAULT_RIG = StereoRig(focal=400.0, cx_l=320.0, cy_l=240.0, cx_r=320.0,
                        baseline=0.12, width=640, height=480)


def load_rig(path) -> StereoRig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"rig file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"rig file {path} is not valid JSON: {exc}") from None
    return StereoRig.from_json_dict(data)


def save_rig(rig: StereoRig, path) -> None:
    Path(path).write_text(json.dumps(rig.to_json_dict(), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class Point3D:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite point {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


def reproject(rig: StereoRig, u: float, v: float, d: float) -> Point3D:
    """Lift pixel (u, v) with disparity d into the left camera frame."""
    if not rig.contains(u, v):
        raise OutOfBounds(f"pixel ({u}, {v}) outside {rig.width}x{rig.height} image")
    denom = rig.cx_l - rig.cx_r - d
    if abs(denom) < DENOMINATOR_EPS:
        raise DegenerateDisparity(f"disparity {d} gives a zero reprojection denominator")
    scale = rig.baseline / denom
    return Point3D(scale * (u - rig.cx_l), scale * (v - rig.cy_l), scale * rig.focal)


def project(rig: StereoRig, p: Point3D) -> tuple[float, float, float]:
    """Return (u, v, d) of a camera-frame point; inverse of :func:`reproject`."""
    if not p.z > 0:
        raise NonPositiveDepth(f"cannot project point with z={p.z}")
    u = rig.focal * p.x / p.z + rig.cx_l
    v = rig.focal * p.y / p.z + rig.cy_l
    d = rig.principal_offset - rig.focal * rig.baseline / p.z
    return u, v, d


def depth_to_disparity(rig: StereoRig, z: float) -> float:
    if not z > 0:
        raise NonPositiveDepth(f"depth must be positive, got {z}")
    return rig.principal_offset - rig.focal * rig.baseline / z


def disparity_to_depth(rig: StereoRig, d: float) -> float:
    denom = rig.cx_l - rig.cx_r - d
    if abs(denom) < DENOMINATOR_EPS:
        raise DegenerateDisparity(f"disparity {d} gives a zero reprojection denominator")
    z = rig.baseline * rig.focal / denom
    if z <= 0:
        raise NonPositiveDepth(f"disparity {d} maps behind the rig (z={z})")
    return z


def from_positive_disparity(d_lr):
    """Convert conventional ``x_left - x_right`` disparities to this module's sign."""
    return -np.asarray(d_lr, dtype=np.float64) if np.ndim(d_lr) else -float(d_lr)


def reproject_many(rig: StereoRig, u, v, d) -> np.ndarray:
    """Vectorised :func:`reproject`; returns an (N, 3) array.

    Bounds are not checked here; degenerate disparities still raise.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    denom = rig.cx_l - rig.cx_r - d
    if np.any(np.abs(denom) < DENOMINATOR_EPS):
        raise DegenerateDisparity("zero reprojection denominator in batch")
    scale = rig.baseline / denom
    return np.stack([scale * (u - rig.cx_l), scale * (v - rig.cy_l),
                     scale * rig.focal * np.ones_like(u)], axis=-1)


def project_many(rig: StereoRig, points) -> np.ndarray:
    """Vectorised :func:`project` over an (N, 3) array; returns (N, 3) of (u, v, d)."""
    p = np.asarray(points, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    if np.any(z <= 0):
        raise NonPositiveDepth("points with z <= 0 in batch")
    u = rig.focal * x / z + rig.cx_l
    v = rig.focal * y / z + rig.cy_l
    d = rig.principal_offset - rig.focal * rig.baseline / z
    return np.stack([u, v, d], axis=-1)


def pixel_rays(rig: StereoRig) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel ray directions scaled to unit z, as two (H, W) arrays (dx, dy)."""
    cols = (np.arange(rig.width, dtype=np.float64) - rig.cx_l) / rig.focal
    rows = (np.arange(rig.height, dtype=np.float64) - rig.cy_l) / rig.focal
    dx, dy = np.meshgrid(cols, rows)
    return dx, dy
