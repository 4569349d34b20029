"""Synthetic hover studies: render static-target groups and score depth error."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from depthsight.detector import DetectorParams
from depthsight.errors import ConfigError
from depthsight.evalkit import DepthErrorResult, HoverGroup, MatchSpec, depth_error_study
from depthsight.localizer import ALL_METHODS, ZrefMethod
from depthsight.synth.scene import Pose, SceneSpec, render

# Seed stride between hover groups; keeps per-frame noise streams disjoint.
GROUP_SEED_STRIDE = 1000


@dataclass(frozen=True)
class StudySpec:
    scene: SceneSpec
    distances: tuple = (1.5, 2.3, 5.0, 9.5)   # metres
    n_samples: int = 10
    methods: tuple = ALL_METHODS
    detector: DetectorParams = field(default_factory=DetectorParams)
    match: MatchSpec = field(default_factory=MatchSpec)
    lateral: tuple = (0.0, 0.0)                # (x, y) metres
    yaw_deg: float = 0.0

    def __post_init__(self):
        if self.scene.target is None:
            raise ConfigError("a depth study needs a target drone")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be at least 1")
        if not self.distances or min(self.distances) <= 0:
            raise ConfigError("hover distances must be positive")

    def to_json_dict(self) -> dict:
        return {
            "scene": self.scene.to_json_dict(),
            "distances_m": list(self.distances),
            "n_samples": self.n_samples,
            "methods": [m.value for m in self.methods],
            "detector": self.detector.to_json_dict(),
            "match": self.match.to_json_dict(),
            "lateral_m": list(self.lateral),
            "yaw_deg": self.yaw_deg,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "StudySpec":
        try:
            return cls(
                scene=SceneSpec.from_json_dict(data["scene"]),
                distances=tuple(float(d) for d in data.get("distances_m", (1.5, 2.3, 5.0, 9.5))),
                n_samples=int(data.get("n_samples", 10)),
                methods=tuple(ZrefMethod.parse(m) for m in data.get("methods", [m.value for m in ALL_METHODS])),
                detector=DetectorParams.from_json_dict(data.get("detector", {})),
                match=MatchSpec.from_json_dict(data.get("match", {})),
                lateral=tuple(float(c) for c in data.get("lateral_m", (0.0, 0.0))),
                yaw_deg=float(data.get("yaw_deg", 0.0)),
            )
        except KeyError as exc:
            raise ConfigError(f"study spec missing {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid study spec: {exc}") from None

    @classmethod
    def load(cls, path) -> "StudySpec":
        path = Path(path)
        try:
            return cls.from_json_dict(json.loads(path.read_text()))
        except FileNotFoundError:
            raise ConfigError(f"study spec not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"study spec {path} is not valid JSON: {exc}") from None


def hover_groups(study: StudySpec, threads: int = 1) -> list[HoverGroup]:
    """Render ``n_samples`` independent noise draws per hover distance."""
    jobs = []
    for g, z in enumerate(study.distances):
        pose = Pose((study.lateral[0], study.lateral[1], z), math.radians(study.yaw_deg))
        for k in range(study.n_samples):
            seed = study.scene.seed + g * GROUP_SEED_STRIDE + k
            jobs.append((g, k, study.scene.with_pose(pose).with_seed(seed)))

    def one(job):
        g, k, spec = job
        res = render(spec, frame_id=g * GROUP_SEED_STRIDE + k)
        return res.depth, res.annotation

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rendered = list(pool.map(one, jobs))
    else:
        rendered = [one(j) for j in jobs]
    groups = [HoverGroup(z) for z in study.distances]
    for (g, _, _), frame in zip(jobs, rendered):
        groups[g].frames.append(frame)
    return groups


def run_study(study: StudySpec, threads: int = 1) -> list[DepthErrorResult]:
    return depth_error_study(hover_groups(study, threads), study.scene.rig, study.methods,
                             study.n_samples, study.detector, study.match)
