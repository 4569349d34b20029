"""Scene description and the per-frame depth renderer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from depthsight.boxes import EMPTY_BOX, Box, tight_box
from depthsight.depthmap import DepthMap
from depthsight.errors import ConfigError, EmptyScene
from depthsight.geometry import DEFAULT_RIG, Point3D, StereoRig, pixel_rays, project_many
from depthsight.synth.drones import DroneModel, drone_from_dict, drone_to_dict
from depthsight.synth.primitives import primitive_from_dict, primitive_to_dict

# Noisy depths are floored here so every stored depth stays positive.
MIN_DEPTH = 0.05


@dataclass(frozen=True)
class NoiseSpec:
    """Stereo-like depth corruption.

    Per valid pixel, in this order: Gaussian noise with standard deviation
    ``sqrt(gaussian_sigma**2 + (z**2 * disparity_sigma / (f * T))**2)``;
    with probability ``speckle_rate`` the depth is pulled nearer by a
    uniform amount in ``[0, speckle_depth_range]``; with probability
    ``dropout_rate`` the pixel loses its depth.
    """

    gaussian_sigma: float = 0.0
    disparity_sigma: float = 0.0
    dropout_rate: float = 0.0
    speckle_rate: float = 0.0
    speckle_depth_range: float = 0.0

    def __post_init__(self):
        if self.gaussian_sigma < 0 or self.disparity_sigma < 0 or self.speckle_depth_range < 0:
            raise ConfigError("noise magnitudes must be nonnegative")
        for name in ("dropout_rate", "speckle_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")

    @property
    def is_noiseless(self) -> bool:
        return (self.gaussian_sigma == 0 and self.disparity_sigma == 0
                and self.dropout_rate == 0 and self.speckle_rate == 0)

    def to_json_dict(self) -> dict:
        return {
            "gaussian_sigma": self.gaussian_sigma,
            "disparity_sigma": self.disparity_sigma,
            "dropout_rate": self.dropout_rate,
            "speckle_rate": self.speckle_rate,
            "speckle_depth_range": self.speckle_depth_range,
        }


@dataclass(frozen=True)
class Pose:
    position: tuple[float, float, float]
    yaw: float = 0.0  # radians

    def to_json_dict(self) -> dict:
        return {"position": [float(c) for c in self.position], "yaw_deg": math.degrees(self.yaw)}

    @classmethod
    def from_json_dict(cls, data: dict) -> "Pose":
        return cls(tuple(float(c) for c in data["position"]), math.radians(float(data.get("yaw_deg", 0.0))))


@dataclass(frozen=True)
class SceneSpec:
    rig: StereoRig = DEFAULT_RIG
    background: tuple = ()
    target: DroneModel | None = None
    target_pose: Pose = Pose((0.0, 0.0, 5.0))
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0

    def with_pose(self, pose: Pose) -> "SceneSpec":
        return replace(self, target_pose=pose)

    def with_seed(self, seed: int) -> "SceneSpec":
        return replace(self, seed=seed)

    def to_json_dict(self) -> dict:
        return {
            "rig": self.rig.to_json_dict(),
            "background": [primitive_to_dict(p) for p in self.background],
            "target": drone_to_dict(self.target) if self.target is not None else None,
            "target_pose": self.target_pose.to_json_dict(),
            "noise": self.noise.to_json_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SceneSpec":
        try:
            rig = StereoRig.from_json_dict(data["rig"]) if "rig" in data else DEFAULT_RIG
            background = tuple(primitive_from_dict(p) for p in data.get("background", []))
            target = drone_from_dict(data["target"]) if data.get("target") is not None else None
            pose = Pose.from_json_dict(data.get("target_pose", {"position": [0.0, 0.0, 5.0]}))
            noise = NoiseSpec(**data.get("noise", {}))
            seed = int(data.get("seed", 0))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid scene spec: {exc}") from None
        return cls(rig, background, target, pose, noise, seed)


@dataclass(frozen=True)
class Annotation:
    frame_id: int
    gt_box: Box
    target_position: Point3D | None
    occlusion_fraction: float
    yaw: float = 0.0
    model: str | None = None

    @property
    def has_target(self) -> bool:
        return not self.gt_box.empty

    def to_json_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "gt_box": None if self.gt_box.empty else self.gt_box.to_list(),
            "target_position": None if self.target_position is None else list(self.target_position.as_tuple()),
            "occlusion_fraction": self.occlusion_fraction,
            "yaw_deg": math.degrees(self.yaw),
            "model": self.model,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Annotation":
        box = Box.from_list(data["gt_box"]) if data.get("gt_box") else EMPTY_BOX
        pos = data.get("target_position")
        return cls(
            frame_id=int(data["frame_id"]),
            gt_box=box,
            target_position=Point3D(*pos) if pos is not None else None,
            occlusion_fraction=float(data.get("occlusion_fraction", 0.0)),
            yaw=math.radians(float(data.get("yaw_deg", 0.0))),
            model=data.get("model"),
        )


def _window(rig: StereoRig, prim) -> tuple[slice, slice]:
    """Image window that can contain hits on ``prim``; full frame if unknown."""
    full = (slice(0, rig.height), slice(0, rig.width))
    b = prim.bounds()
    if b is None:
        return full
    lo, hi = b
    if lo[2] <= 1e-6:
        if hi[2] <= 0:
            return slice(0, 0), slice(0, 0)
        return full
    corners = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    uvd = project_many(rig, corners)
    c0 = max(int(math.floor(uvd[:, 0].min())) - 1, 0)
    c1 = min(int(math.ceil(uvd[:, 0].max())) + 2, rig.width)
    r0 = max(int(math.floor(uvd[:, 1].min())) - 1, 0)
    r1 = min(int(math.ceil(uvd[:, 1].max())) + 2, rig.height)
    return slice(r0, max(r0, r1)), slice(c0, max(c0, c1))


def cast(rig: StereoRig, primitives) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-hit z-depth per pixel (inf = miss) and index of the hit primitive (-1 = miss)."""
    dx, dy = pixel_rays(rig)
    depth = np.full((rig.height, rig.width), np.inf)
    owner = np.full((rig.height, rig.width), -1, dtype=np.int64)
    for idx, prim in enumerate(primitives):
        rows, cols = _window(rig, prim)
        if rows.stop <= rows.start or cols.stop <= cols.start:
            continue
        t = prim.intersect(dx[rows, cols], dy[rows, cols])
        sub_d = depth[rows, cols]
        closer = t < sub_d
        sub_d[closer] = t[closer]
        owner[rows, cols][closer] = idx
    return depth, owner


def apply_noise(depth: np.ndarray, rig: StereoRig, noise: NoiseSpec, seed: int) -> np.ndarray:
    """Corrupt a clean depth array (NaN = invalid). Deterministic in ``seed``."""
    if noise.is_noiseless:
        return depth.copy()
    rng = np.random.default_rng(seed)
    shape = depth.shape
    # fixed draw order, independent of scene content
    gauss = rng.standard_normal(shape)
    speckle_draw = rng.random(shape)
    speckle_amount = rng.random(shape)
    dropout_draw = rng.random(shape)

    out = depth.copy()
    valid = np.isfinite(out)
    z = out[valid]
    sigma_disp = z * z * noise.disparity_sigma / (rig.focal * rig.baseline)
    sigma = np.sqrt(noise.gaussian_sigma ** 2 + sigma_disp ** 2)
    z = z + gauss[valid] * sigma
    speck = speckle_draw[valid] < noise.speckle_rate
    z = np.where(speck, z - speckle_amount[valid] * noise.speckle_depth_range, z)
    out[valid] = np.maximum(z, MIN_DEPTH)
    out[valid & (dropout_draw < noise.dropout_rate)] = np.nan
    return out


@dataclass(frozen=True)
class RenderResult:
    depth: DepthMap
    mask: np.ndarray
    annotation: Annotation
    clean_depth: np.ndarray


def render(spec: SceneSpec, frame_id: int = 0) -> RenderResult:
    """Ray-cast one frame: depth map, target mask and ground-truth annotation.

    The noise stream is seeded with ``spec.seed`` alone; sequences pass a
    per-frame seed through :meth:`SceneSpec.with_seed`.
    """
    rig = spec.rig
    target_parts = ()
    if spec.target is not None:
        target_parts = spec.target.posed(spec.target_pose.position, spec.target_pose.yaw)
    prims = tuple(spec.background) + tuple(target_parts)
    if not prims:
        raise EmptyScene("scene has no primitives")
    depth, owner = cast(rig, prims)
    hit = np.isfinite(depth)
    if not hit.any():
        raise EmptyScene("no primitive is visible from the camera")

    n_bg = len(spec.background)
    mask = owner >= n_bg
    gt_box = tight_box(mask)

    target_position = None
    occlusion = 0.0
    if spec.target is not None:
        target_position = Point3D(*(float(c) for c in spec.target_pose.position))
        if n_bg:
            alone, _ = cast(rig, target_parts)
            unoccluded = int(np.isfinite(alone).sum())
            if unoccluded:
                occlusion = 1.0 - int(mask.sum()) / unoccluded

    clean = np.where(hit, depth, np.nan)
    noisy = apply_noise(clean, rig, spec.noise, spec.seed)
    ann = Annotation(
        frame_id=frame_id,
        gt_box=gt_box,
        target_position=target_position,
        occlusion_fraction=occlusion,
        yaw=spec.target_pose.yaw,
        model=spec.target.name if spec.target is not None else None,
    )
    clean.flags.writeable = False
    mask.flags.writeable = False
    return RenderResult(DepthMap(noisy), mask, ann, clean)
