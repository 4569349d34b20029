"""Analytic ray casting against simple solids.

All rays start at the left camera center and have direction
``(dx, dy, 1)``, so the ray parameter of a hit *is* its z-depth. Every
``intersect`` returns an array shaped like ``dx`` holding the nearest
positive hit depth, or ``inf`` where the ray misses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_EPS = 1e-12


def yaw_matrix(yaw: float) -> np.ndarray:
    """Rotation about the camera y axis (down); maps body to camera frame."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _positive_min(t1, t2):
    t1 = np.where(t1 > _EPS, t1, np.inf)
    t2 = np.where(t2 > _EPS, t2, np.inf)
    return np.minimum(t1, t2)


@dataclass(frozen=True)
class Plane:
    """Infinite plane through ``point`` with normal ``normal``."""

    point: tuple[float, float, float]
    normal: tuple[float, float, float]

    def __post_init__(self):
        if np.linalg.norm(self.normal) == 0:
            raise ValueError("plane normal must be nonzero")

    def intersect(self, dx, dy):
        n = np.asarray(self.normal, dtype=np.float64)
        num = float(n @ np.asarray(self.point, dtype=np.float64))
        den = n[0] * dx + n[1] * dy + n[2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num / den
        return np.where((np.abs(den) > _EPS) & (t > _EPS), t, np.inf)

    def placed(self, rotation_yaw, offset):
        r = yaw_matrix(rotation_yaw)
        return Plane(tuple(r @ np.asarray(self.point) + offset), tuple(r @ np.asarray(self.normal)))

    def bounds(self):
        return None

    def radius_about_origin(self):
        return math.inf


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")

    def intersect(self, dx, dy):
        cx, cy, cz = self.center
        a = dx * dx + dy * dy + 1.0
        b = dx * cx + dy * cy + cz
        c = cx * cx + cy * cy + cz * cz - self.radius ** 2
        disc = b * b - a * c
        hit = disc >= 0
        root = np.sqrt(np.where(hit, disc, 0.0))
        t = _positive_min((b - root) / a, (b + root) / a)
        return np.where(hit, t, np.inf)

    def placed(self, rotation_yaw, offset):
        return Sphere(tuple(yaw_matrix(rotation_yaw) @ np.asarray(self.center) + offset), self.radius)

    def bounds(self):
        c = np.asarray(self.center, dtype=np.float64)
        return c - self.radius, c + self.radius

    def radius_about_origin(self):
        return float(np.linalg.norm(self.center)) + self.radius


@dataclass(frozen=True)
class Box3:
    """Box of full edge lengths ``size`` rotated by ``yaw`` about its center."""

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    yaw: float = 0.0

    def __post_init__(self):
        if min(self.size) <= 0:
            raise ValueError("box dimensions must be positive")

    def intersect(self, dx, dy):
        rt = yaw_matrix(self.yaw).T
        origin = rt @ -np.asarray(self.center, dtype=np.float64)
        half = np.asarray(self.size, dtype=np.float64) / 2
        t_near = np.full(np.shape(dx), -np.inf)
        t_far = np.full(np.shape(dx), np.inf)
        for axis in range(3):
            d = rt[axis, 0] * dx + rt[axis, 1] * dy + rt[axis, 2]
            o = origin[axis]
            parallel = np.abs(d) < _EPS
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = (-half[axis] - o) / d
                t2 = (half[axis] - o) / d
            lo = np.where(parallel, np.where(abs(o) <= half[axis], -np.inf, np.inf), np.minimum(t1, t2))
            hi = np.where(parallel, np.where(abs(o) <= half[axis], np.inf, -np.inf), np.maximum(t1, t2))
            t_near = np.maximum(t_near, lo)
            t_far = np.minimum(t_far, hi)
        hit = (t_near <= t_far) & (t_far > _EPS)
        t = np.where(t_near > _EPS, t_near, t_far)
        return np.where(hit, t, np.inf)

    def corners(self) -> np.ndarray:
        half = np.asarray(self.size) / 2
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
        return (yaw_matrix(self.yaw) @ (signs * half).T).T + np.asarray(self.center)

    def placed(self, rotation_yaw, offset):
        return Box3(tuple(yaw_matrix(rotation_yaw) @ np.asarray(self.center) + offset),
                    self.size, self.yaw + rotation_yaw)

    def bounds(self):
        c = self.corners()
        return c.min(axis=0), c.max(axis=0)

    def radius_about_origin(self):
        return float(np.linalg.norm(self.corners(), axis=1).max())


@dataclass(frozen=True)
class Cylinder:
    """Capped cylinder with its axis parallel to the camera y axis."""

    center: tuple[float, float, float]
    radius: float
    height: float

    def __post_init__(self):
        if not (self.radius > 0 and self.height > 0):
            raise ValueError("cylinder radius and height must be positive")

    def intersect(self, dx, dy):
        cx, cy, cz = self.center
        r2 = self.radius ** 2
        y_lo, y_hi = cy - self.height / 2, cy + self.height / 2
        # curved side: (t*dx - cx)^2 + (t - cz)^2 = r^2
        a = dx * dx + 1.0
        b = dx * cx + cz
        c = cx * cx + cz * cz - r2
        disc = b * b - a * c
        ok = disc >= 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        side = np.full(np.shape(dx), np.inf)
        for t in ((b - root) / a, (b + root) / a):
            y = t * dy
            good = ok & (t > _EPS) & (y >= y_lo) & (y <= y_hi)
            side = np.where(good, np.minimum(side, t), side)
        # caps: planes y = y_lo, y_hi
        caps = np.full(np.shape(dx), np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            for yc in (y_lo, y_hi):
                t = yc / dy
                good = (np.abs(dy) > _EPS) & (t > _EPS)
                good &= (t * dx - cx) ** 2 + (t - cz) ** 2 <= r2
                caps = np.where(good, np.minimum(caps, t), caps)
        return np.minimum(side, caps)

    def placed(self, rotation_yaw, offset):
        return Cylinder(tuple(yaw_matrix(rotation_yaw) @ np.asarray(self.center) + offset),
                        self.radius, self.height)

    def bounds(self):
        c = np.asarray(self.center, dtype=np.float64)
        half = np.array([self.radius, self.height / 2, self.radius])
        return c - half, c + half

    def radius_about_origin(self):
        cx, cy, cz = self.center
        return math.hypot(math.hypot(cx, cz) + self.radius, abs(cy) + self.height / 2)


def primitive_from_dict(data: dict):
    kind = data.get("type")
    if kind == "plane":
        return Plane(tuple(data["point"]), tuple(data["normal"]))
    if kind == "sphere":
        return Sphere(tuple(data["center"]), float(data["radius"]))
    if kind == "box":
        return Box3(tuple(data["center"]), tuple(data["size"]), math.radians(float(data.get("yaw_deg", 0.0))))
    if kind == "cylinder":
        return Cylinder(tuple(data["center"]), float(data["radius"]), float(data["height"]))
    raise ValueError(f"unknown primitive type {kind!r}")


def primitive_to_dict(p) -> dict:
    if isinstance(p, Plane):
        return {"type": "plane", "point": list(p.point), "normal": list(p.normal)}
    if isinstance(p, Sphere):
        return {"type": "sphere", "center": list(p.center), "radius": p.radius}
    if isinstance(p, Box3):
        return {"type": "box", "center": list(p.center), "size": list(p.size),
                "yaw_deg": math.degrees(p.yaw)}
    if isinstance(p, Cylinder):
        return {"type": "cylinder", "center": list(p.center), "radius": p.radius, "height": p.height}
    raise TypeError(f"not a primitive: {p!r}")
