"""Scoring: frame-level precision/recall and depth-error studies.

Frame accounting follows the "frames with a correct detection" view:

* precision = frames with a correct detection / frames with any detection
* recall    = frames with a correct detection / frames containing the target

A detection is correct when its IoU with the ground-truth box reaches
``MatchSpec.iou_threshold``. A frame whose detections all miss a present
target is a false positive *and* a miss, so it counts in both
denominators.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from depthsight.boxes import Box, iou
from depthsight.detector import Detection, DetectorParams, detect, filter_by_confidence
from depthsight.errors import ConfigError, InsufficientDetections, NoDepthInBox
from depthsight.geometry import StereoRig
from depthsight.localizer import ALL_METHODS, ZrefMethod, localize


@dataclass(frozen=True)
class MatchSpec:
    iou_threshold: float = 0.5
    confidence_threshold: float = 0.7

    def __post_init__(self):
        for name in ("iou_threshold", "confidence_threshold"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")

    def to_json_dict(self) -> dict:
        return {"iou_threshold": self.iou_threshold, "confidence_threshold": self.confidence_threshold}

    @classmethod
    def from_json_dict(cls, data: dict) -> "MatchSpec":
        extra = set(data) - {"iou_threshold", "confidence_threshold"}
        if extra:
            raise ConfigError(f"unknown match parameters: {sorted(extra)}")
        return cls(**{k: float(v) for k, v in data.items()})


class Outcome(enum.Enum):
    TP = "TP"
    FP = "FP"
    FN = "FN"
    TN = "TN"


@dataclass(frozen=True)
class FrameMatch:
    frame_id: int
    outcome: Outcome
    has_target: bool
    best_iou: float


def match_frame(dets, gt_box: Box | None, spec: MatchSpec = MatchSpec(), frame_id: int = 0) -> FrameMatch:
    """Classify one frame. ``dets`` should already be confidence-filtered."""
    has_target = gt_box is not None and not gt_box.empty
    best = max((iou(d.box, gt_box) for d in dets), default=0.0) if has_target else 0.0
    if dets:
        outcome = Outcome.TP if has_target and best >= spec.iou_threshold else Outcome.FP
    else:
        outcome = Outcome.FN if has_target else Outcome.TN
    return FrameMatch(frame_id, outcome, has_target, best)


@dataclass(frozen=True)
class SequenceResult:
    name: str
    n_frames: int
    tp_frames: int
    fp_frames: int
    fn_frames: int
    tn_frames: int
    precision: float | None   # percent; None when no frame had a detection
    recall: float | None      # percent; None when no frame had the target

    @property
    def precision_defined(self) -> bool:
        return self.precision is not None

    @property
    def recall_defined(self) -> bool:
        return self.recall is not None

    @property
    def frames_with_target(self) -> int:
        return self.tp_frames + self.fn_frames

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "n_frames": self.n_frames,
            "tp_frames": self.tp_frames,
            "fp_frames": self.fp_frames,
            "fn_frames": self.fn_frames,
            "tn_frames": self.tn_frames,
            "precision": self.precision,
            "recall": self.recall,
        }


def _percent(num: int, den: int) -> float | None:
    return 100.0 * num / den if den else None


def sequence_metrics(frames, name: str = "sequence") -> SequenceResult:
    frames = list(frames)
    if not frames:
        raise ValueError("sequence_metrics needs at least one frame")
    tp = sum(f.outcome is Outcome.TP for f in frames)
    fp = sum(f.outcome is Outcome.FP for f in frames)
    tn = sum(f.outcome is Outcome.TN for f in frames)
    fn = sum(f.has_target and f.outcome is not Outcome.TP for f in frames)
    return SequenceResult(name, len(frames), tp, fp, fn, tn, _percent(tp, tp + fp), _percent(tp, tp + fn))


def metrics_from_counts(name: str, n_frames: int, tp: int, fp: int, fn: int, tn: int = 0) -> SequenceResult:
    return SequenceResult(name, n_frames, tp, fp, fn, tn, _percent(tp, tp + fp), _percent(tp, tp + fn))


UNWEIGHTED = "unweighted"
FRAME_WEIGHTED = "frame_weighted"
AGGREGATION_MODES = (UNWEIGHTED, FRAME_WEIGHTED)


def aggregate(results, mode: str = UNWEIGHTED) -> tuple[float | None, float | None]:
    """Average precision and recall (percent) over sequences.

    Anything with ``n_frames``, ``precision`` and ``recall`` works. Sequences
    whose metric is undefined are left out of that metric's average.
    """
    results = list(results)
    if not results:
        raise ValueError("aggregate needs at least one sequence")
    if mode not in AGGREGATION_MODES:
        raise ValueError(f"unknown aggregation mode {mode!r}")

    def avg(attr):
        pairs = [(getattr(r, attr), r.n_frames) for r in results if getattr(r, attr) is not None]
        if not pairs:
            return None
        values = np.array([p for p, _ in pairs], dtype=np.float64)
        weights = np.ones(len(pairs)) if mode == UNWEIGHTED else np.array([w for _, w in pairs], dtype=np.float64)
        return float(np.sum(values * weights) / np.sum(weights))

    return avg("precision"), avg("recall")


def truncate_percent(value: float, decimals: int = 1) -> float:
    """Cut (not round) a percentage to ``decimals`` places, as the published table does."""
    scale = 10 ** decimals
    return math.floor(value * scale + 1e-9) / scale


@dataclass(frozen=True)
class ReferenceSequence:
    name: str
    n_frames: int
    model: str
    precision: float
    recall: float


# Published live-stream results (7 sequences, confidence threshold 0.7) and
# their stated average. Kept for the aggregation comparison in reports.
REFERENCE_SEQUENCES = (
    ReferenceSequence("1", 77, "AR Drone", 96.6, 74.0),
    ReferenceSequence("2", 48, "AR Drone", 95.3, 85.4),
    ReferenceSequence("3", 39, "AR Drone", 100.0, 66.6),
    ReferenceSequence("4", 33, "AR Drone", 100.0, 66.6),
    ReferenceSequence("5", 27, "AR Drone", 100.0, 77.7),
    ReferenceSequence("6", 64, "DJI Matrice", 100.0, 67.1),
    ReferenceSequence("7", 35, "DJI Matrice", 100.0, 77.1),
)
REFERENCE_STATED_AVERAGE = (98.7, 74.7)


def counts_for_percentages(n_frames: int, precision: float, recall: float,
                           decimals: int = 1) -> tuple[int, int, int] | None:
    """Smallest-fp ``(tp, fp, fn)`` reproducing truncated percentages.

    Every frame is assumed to contain the target (recall denominator =
    ``n_frames``); a false-positive frame is therefore also a miss.
    """
    for fp in range(n_frames + 1):
        for tp in range(n_frames - fp + 1):
            if tp + fp == 0:
                continue
            p = truncate_percent(100.0 * tp / (tp + fp), decimals)
            r = truncate_percent(100.0 * tp / n_frames, decimals)
            if p == precision and r == recall:
                return tp, fp, n_frames - tp
    return None


def aggregation_note(unweighted, frame_weighted, stated=REFERENCE_STATED_AVERAGE) -> str:
    return (f"stated average {stated[0]:.1f}/{stated[1]:.1f} matches neither the unweighted "
            f"({unweighted[0]:.2f}/{unweighted[1]:.2f}) nor the frame-weighted "
            f"({frame_weighted[0]:.2f}/{frame_weighted[1]:.2f}) mean of the per-sequence rows")


# ---------------------------------------------------------------------------
# depth-error study

@dataclass(frozen=True)
class DepthErrorResult:
    hover_distance: float     # mm
    method: ZrefMethod
    rmse: float               # mm, NaN when no samples
    min_error: float          # mm, smallest |error|
    max_error: float          # mm, largest |error|
    mean_error: float         # mm, signed (estimate - truth)
    n_samples: int
    n_requested: int = 10

    @property
    def insufficient(self) -> bool:
        return self.n_samples < self.n_requested

    def to_json_dict(self) -> dict:
        def num(x):
            return None if math.isnan(x) else x
        return {
            "hover_mm": self.hover_distance,
            "method": self.method.value,
            "rmse_mm": num(self.rmse),
            "min_mm": num(self.min_error),
            "max_mm": num(self.max_error),
            "mean_mm": num(self.mean_error),
            "n_samples": self.n_samples,
            "n_requested": self.n_requested,
        }


@dataclass
class HoverGroup:
    """Frames of one static target position: ``frames`` holds (DepthMap, Annotation) pairs."""

    distance: float           # metres, ground-truth z
    frames: list = field(default_factory=list)


def pick_detection(dets, gt_box: Box | None, spec: MatchSpec) -> Detection | None:
    """Best-overlapping correct detection, or None."""
    dets = filter_by_confidence(dets, spec.confidence_threshold)
    if gt_box is None or gt_box.empty:
        return None
    best, best_iou = None, -1.0
    for d in dets:
        v = iou(d.box, gt_box)
        if v > best_iou:
            best, best_iou = d, v
    return best if best is not None and best_iou >= spec.iou_threshold else None


def error_stats(errors_m) -> tuple[float, float, float, float]:
    """(rmse, min |e|, max |e|, mean e) in millimetres."""
    e = np.asarray(errors_m, dtype=np.float64) * 1000.0
    if e.size == 0:
        return (math.nan,) * 4
    a = np.abs(e)
    return float(np.sqrt(np.mean(e * e))), float(a.min()), float(a.max()), float(e.mean())


def depth_error_study(groups, rig: StereoRig, methods=ALL_METHODS, n_samples: int = 10,
                      params: DetectorParams | None = None,
                      spec: MatchSpec = MatchSpec()) -> list[DepthErrorResult]:
    """Detect and localize the target in each hover frame; score z against truth.

    Uses the first ``n_samples`` frames of each group that yield a correct
    detection. Groups falling short issue :class:`InsufficientDetections`
    and report the count they reached.
    """
    methods = [ZrefMethod.parse(m) for m in methods]
    if n_samples < 1:
        raise ConfigError("n_samples must be at least 1")
    params = params or DetectorParams()
    results = []
    for group in groups:
        errors = {m: [] for m in methods}
        used = 0
        for depth, ann in group.frames:
            if used >= n_samples:
                break
            det = pick_detection(detect(depth, params), ann.gt_box, spec)
            if det is None:
                continue
            z_true = ann.target_position.z
            try:
                located = {m: localize(depth, det, rig, m) for m in methods}
            except NoDepthInBox:
                continue
            for m, loc in located.items():
                errors[m].append(loc.position.z - z_true)
            used += 1
        if used < n_samples:
            warnings.warn(InsufficientDetections(
                f"hover at {group.distance * 1000:.0f} mm: {used} of {n_samples} frames gave a detection"),
                stacklevel=2)
        for m in methods:
            rmse, lo, hi, mean = error_stats(errors[m])
            results.append(DepthErrorResult(group.distance * 1000.0, m, rmse, lo, hi, mean, used, n_samples))
    return results
