"""Multi-frame datasets on disk.

Layout::

    DIR/frames/NNNN.pfm      float depth, metres, NaN = no depth
    DIR/masks/NNNN.pgm       target mask (255 = target)
    DIR/annotations.jsonl    one Annotation per line, frame order
    DIR/rig.json             stereo calibration
    DIR/spec.json            scene spec + trajectory that produced the data
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from depthsight.errors import ConfigError, DataError
from depthsight.formats import read_pfm, write_pfm, write_pgm
from depthsight.geometry import StereoRig, load_rig, save_rig
from depthsight.synth.scene import Annotation, Pose, RenderResult, SceneSpec, render


def frame_name(frame_id: int) -> str:
    return f"{frame_id:04d}"


def approach(start_z: float, end_z: float, n: int, x: float = 0.0, y: float = 0.0,
             yaw_deg: float = 0.0) -> list[Pose]:
    """Straight-line flight toward the camera, evenly spaced in z."""
    if n < 1:
        raise ConfigError("trajectory needs at least one pose")
    zs = np.linspace(start_z, end_z, n)
    return [Pose((x, y, float(z)), math.radians(yaw_deg)) for z in zs]


def hover(position, n: int, yaw_deg: float = 0.0) -> list[Pose]:
    return [Pose(tuple(float(c) for c in position), math.radians(yaw_deg))] * n


def trajectory_from_json(data) -> list[Pose]:
    """Either an explicit list of poses or a ``{"kind": ...}`` generator."""
    if isinstance(data, list):
        return [Pose.from_json_dict(p) for p in data]
    kind = data.get("kind")
    if kind == "approach":
        return approach(float(data["start_z"]), float(data["end_z"]), int(data["n"]),
                        float(data.get("x", 0.0)), float(data.get("y", 0.0)),
                        float(data.get("yaw_deg", 0.0)))
    if kind == "hover":
        return hover(data["position"], int(data["n"]), float(data.get("yaw_deg", 0.0)))
    raise ConfigError(f"unknown trajectory kind {kind!r}")


def render_frames(spec: SceneSpec, trajectory, threads: int = 1) -> list[RenderResult]:
    """Render one frame per pose; frame k uses noise seed ``spec.seed + k``."""
    trajectory = list(trajectory)
    if not trajectory:
        raise ConfigError("trajectory must contain at least one pose")

    def one(k):
        return render(spec.with_pose(trajectory[k]).with_seed(spec.seed + k), frame_id=k)

    if threads <= 1:
        return [one(k) for k in range(len(trajectory))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(len(trajectory))))


def generate_sequence(spec: SceneSpec, trajectory, out_dir, threads: int = 1) -> list[Annotation]:
    trajectory = list(trajectory)
    frames = render_frames(spec, trajectory, threads)
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    annotations = []
    for res in frames:
        name = frame_name(res.annotation.frame_id)
        write_pfm(out / "frames" / f"{name}.pfm", res.depth)
        write_pgm(out / "masks" / f"{name}.pgm", np.where(res.mask, 255, 0).astype(np.uint8))
        annotations.append(res.annotation)
    write_annotations(out / "annotations.jsonl", annotations)
    save_rig(spec.rig, out / "rig.json")
    doc = spec.to_json_dict()
    doc["trajectory"] = [p.to_json_dict() for p in trajectory]
    (out / "spec.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return annotations


def write_annotations(path, annotations) -> None:
    with open(path, "w") as fh:
        for a in annotations:
            fh.write(json.dumps(a.to_json_dict(), sort_keys=True) + "\n")


def read_annotations(path) -> list[Annotation]:
    path = Path(path)
    out = []
    try:
        lines = path.read_text().splitlines()
    except FileNotFoundError:
        raise ConfigError(f"annotation file not found: {path}") from None
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            out.append(Annotation.from_json_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: bad annotation record: {exc}") from None
    return out


@dataclass
class Dataset:
    """Read-side view of a generated dataset directory."""

    root: Path
    rig: StereoRig
    annotations: list[Annotation]

    @classmethod
    def open(cls, root) -> "Dataset":
        root = Path(root)
        if not root.is_dir():
            raise ConfigError(f"dataset directory not found: {root}")
        return cls(root, load_rig(root / "rig.json"), read_annotations(root / "annotations.jsonl"))

    def frame_ids(self) -> list[int]:
        if self.annotations:
            return [a.frame_id for a in self.annotations]
        return sorted(int(p.stem) for p in (self.root / "frames").glob("*.pfm"))

    def depth(self, frame_id: int):
        path = self.root / "frames" / f"{frame_name(frame_id)}.pfm"
        if not path.exists():
            raise DataError(f"missing depth frame {path}")
        return read_pfm(path)
