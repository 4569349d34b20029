"""Depth-map container and the 8-bit depth encoding.

Depths are metric z-distances in a float64 (H, W) array. Pixels without a
measurement hold NaN. The 8-bit path reserves level 0 for "no depth" and
maps the clamped range [z_min, z_max] linearly onto 0..255, so a valid
depth at exactly z_min aliases onto the invalid level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from depthsight.boxes import Box
from depthsight.errors import ChannelMismatch, ConfigError, DataError

LEVELS = 256
INVALID = np.nan


class DepthMap:
    """Immutable wrapper around an (H, W) float64 depth array."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.size == 0:
            raise DataError(f"depth map must be a non-empty 2-D array, got shape {arr.shape}")
        # Anything non-finite or non-positive carries no depth.
        arr[~(np.isfinite(arr) & (arr > 0))] = INVALID
        arr.flags.writeable = False
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def height(self) -> int:
        return self._data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self._data)

    def crop(self, box: Box) -> np.ndarray:
        return self._data[box.clip(self.width, self.height).slices()]

    def __eq__(self, other):
        if not isinstance(other, DepthMap):
            return NotImplemented
        return np.array_equal(self._data, other._data, equal_nan=True)

    def __repr__(self):
        return f"DepthMap({self.width}x{self.height}, valid={self.valid.mean():.3f})"


@dataclass(frozen=True)
class QuantizationSpec:
    z_min: float = 0.5
    z_max: float = 20.0

    def __post_init__(self):
        if not (0 < self.z_min < self.z_max) or not np.isfinite(self.z_max):
            raise ConfigError(f"need 0 < z_min < z_max, got {self.z_min}, {self.z_max}")

    @property
    def step(self) -> float:
        return (self.z_max - self.z_min) / (LEVELS - 1)

    def to_json_dict(self) -> dict:
        return {"z_min": self.z_min, "z_max": self.z_max, "levels": LEVELS}

    @classmethod
    def from_json_dict(cls, data: dict) -> "QuantizationSpec":
        if int(data.get("levels", LEVELS)) != LEVELS:
            raise ConfigError("only 256-level quantization is supported")
        try:
            return cls(float(data["z_min"]), float(data["z_max"]))
        except KeyError as exc:
            raise ConfigError(f"quantization spec missing {exc.args[0]!r}") from None


def depth_levels(z: np.ndarray, q: QuantizationSpec) -> np.ndarray:
    """Map depths to uint8 levels; NaN maps to 0. Rounds half up."""
    z = np.asarray(z, dtype=np.float64)
    scaled = 255.0 * (np.clip(z, q.z_min, q.z_max) - q.z_min) / (q.z_max - q.z_min)
    levels = np.floor(scaled + 0.5)
    levels[np.isnan(z)] = 0
    return levels.astype(np.uint8)


def quantize(m: DepthMap, q: QuantizationSpec) -> np.ndarray:
    """Encode a depth map as an (H, W, 3) uint8 image with identical channels."""
    levels = depth_levels(m.data, q)
    return np.repeat(levels[:, :, None], 3, axis=2)


def dequantize(img, q: QuantizationSpec) -> DepthMap:
    """Decode an 8-bit image back to depth. Accepts (H, W) or (H, W, C)."""
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise DataError(f"expected uint8 image, got {img.dtype}")
    if img.ndim == 3:
        if not np.all(img == img[:, :, :1]):
            raise ChannelMismatch("8-bit depth image channels differ")
        img = img[:, :, 0]
    elif img.ndim != 2:
        raise DataError(f"unsupported image shape {img.shape}")
    k = img.astype(np.float64)
    z = q.z_min + k * (q.z_max - q.z_min) / (LEVELS - 1)
    z[img == 0] = INVALID
    return DepthMap(z)


def valid_fraction(m: DepthMap, box: Box) -> float:
    clipped = box.clip(m.width, m.height)
    if clipped.empty:
        raise DataError(f"box {box} does not intersect the {m.width}x{m.height} image")
    return float(m.valid[clipped.slices()].mean())
