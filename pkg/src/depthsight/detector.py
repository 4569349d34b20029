"""Depth-contrast detection and the detections JSONL format.

A flying object is nearer than whatever is behind it, so it shows up as a
blob of depths clearly below the scene's background level. The native
detector thresholds each frame against a global background percentile
and keeps the 4-connected blobs of plausible size. Boxes from any other
detector can be read from JSONL instead and fed to the same downstream
localization.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from depthsight.boxes import Box
from depthsight.depthmap import DepthMap
from depthsight.errors import ConfigError, NegativeDimension, NoValidDepth, ParseError

log = logging.getLogger(__name__)

NATIVE = "native"
EXTERNAL = "external"

_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class Detection:
    box: Box
    confidence: float
    source: str = NATIVE

    def __post_init__(self):
        if self.box.w < 1 or self.box.h < 1:
            raise NegativeDimension(f"detection box {self.box} must be at least 1x1")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class DetectorParams:
    contrast_threshold: float = 1.0      # metres nearer than background
    background_percentile: float = 90.0
    min_area: int = 9                    # pixels
    max_area_fraction: float = 0.25
    kappa: float = 5.0                   # metres of contrast for confidence 1

    def __post_init__(self):
        if not self.contrast_threshold > 0:
            raise ConfigError("contrast_threshold must be positive")
        if not 0 <= self.background_percentile <= 100:
            raise ConfigError("background_percentile must lie in [0, 100]")
        if self.min_area < 1:
            raise ConfigError("min_area must be at least 1")
        if not 0 <= self.max_area_fraction <= 1:
            raise ConfigError("max_area_fraction must lie in [0, 1]")
        if not self.kappa > 0:
            raise ConfigError("kappa must be positive")

    def to_json_dict(self) -> dict:
        return {
            "contrast_threshold": self.contrast_threshold,
            "background_percentile": self.background_percentile,
            "min_area": self.min_area,
            "max_area_fraction": self.max_area_fraction,
            "kappa": self.kappa,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "DetectorParams":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown detector parameters: {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def foreground_mask(m: DepthMap, params: DetectorParams) -> tuple[np.ndarray, float]:
    valid = m.valid
    if not valid.any():
        raise NoValidDepth("depth map has no valid pixels")
    background = float(np.percentile(m.data[valid], params.background_percentile))
    with np.errstate(invalid="ignore"):
        fg = valid & (m.data < background - params.contrast_threshold)
    return fg, background


def detect(m: DepthMap, params: DetectorParams | None = None) -> list[Detection]:
    params = params or DetectorParams()
    fg, background = foreground_mask(m, params)
    labels, n = ndimage.label(fg, structure=_FOUR_CONNECTED)
    if n == 0:
        return []
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    max_area = params.max_area_fraction * m.width * m.height
    dets = []
    for label, sl in enumerate(ndimage.find_objects(labels), start=1):
        area = areas[label]
        if area < params.min_area or area > max_area:
            continue
        rows, cols = sl
        box = Box(cols.start, rows.start, cols.stop - cols.start, rows.stop - rows.start)
        depths = m.data[sl][labels[sl] == label]
        conf = (background - float(np.median(depths))) / params.kappa
        dets.append(Detection(box, float(min(max(conf, 0.0), 1.0)), NATIVE))
    # stable: equal confidences keep label (row-major first pixel) order
    dets.sort(key=lambda d: -d.confidence)
    return dets


def filter_by_confidence(dets, threshold: float) -> list[Detection]:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    return [d for d in dets if d.confidence >= threshold]


@dataclass
class ExternalDetections:
    frames: dict[int, list[Detection]] = field(default_factory=dict)
    clamped: int = 0

    def __getitem__(self, frame_id):
        return self.frames.get(frame_id, [])


def load_external_detections(path, width: int, height: int, source: str = EXTERNAL) -> ExternalDetections:
    """Read per-frame boxes from JSONL, clamping them to a ``width x height`` image.

    Each line: ``{"frame_id": int, "boxes": [{"x", "y", "w", "h", "conf"}, ...]}``.
    Boxes that lie entirely outside the image are dropped; both dropped and
    trimmed boxes count toward ``clamped``.
    """
    path = Path(path)
    result = ExternalDetections()
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"detections file not found: {path}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            frame_id = int(rec["frame_id"])
            raw_boxes = rec["boxes"]
            if not isinstance(raw_boxes, list):
                raise TypeError("'boxes' must be a list")
            dets = []
            for b in raw_boxes:
                x, y, w, h = (int(round(float(b[k]))) for k in ("x", "y", "w", "h"))
                conf = float(b.get("conf", 1.0))
                if w <= 0 or h <= 0:
                    raise NegativeDimension(f"{path}:{lineno}: box with non-positive size {w}x{h}")
                if not 0.0 <= conf <= 1.0:
                    raise ValueError(f"confidence {conf} outside [0, 1]")
                box = Box(x, y, w, h)
                clipped = box.clip(width, height)
                if clipped != box:
                    result.clamped += 1
                if clipped.empty:
                    continue
                dets.append(Detection(clipped, conf, source))
        except NegativeDimension:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(str(exc), path, lineno) from None
        result.frames.setdefault(frame_id, []).extend(dets)
    if result.clamped:
        log.warning("%s: clamped %d box(es) to the %dx%d image", path, result.clamped, width, height)
    return result


def detections_record(frame_id: int, dets) -> dict:
    return {
        "frame_id": frame_id,
        "boxes": [
            {"x": d.box.x, "y": d.box.y, "w": d.box.w, "h": d.box.h, "conf": d.confidence, "source": d.source}
            for d in dets
        ],
    }


def write_detections(path, frames) -> None:
    """``frames``: iterable of ``(frame_id, [Detection, ...])`` in output order."""
    with open(path, "w") as fh:
        for frame_id, dets in frames:
            fh.write(json.dumps(detections_record(frame_id, dets), sort_keys=True) + "\n")
