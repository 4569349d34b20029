"""Multirotor targets composed of boxes and rotor discs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from depthsight.synth.primitives import Box3, Cylinder


@dataclass(frozen=True)
class DroneModel:
    """A named set of primitives in the body frame (origin at the body center).

    ``span`` is the rotor-tip to rotor-tip diameter the model was built for.
    """

    name: str
    parts: tuple
    span: float
    n_rotors: int = 4
    phase_deg: float = 45.0

    def __post_init__(self):
        d = self.bounding_diameter
        if not 0.2 <= d <= 1.5:
            raise ValueError(f"drone {self.name!r} has bounding diameter {d:.3f} m outside [0.2, 1.5]")

    @property
    def bounding_diameter(self) -> float:
        return 2.0 * max(p.radius_about_origin() for p in self.parts)

    def posed(self, position, yaw: float) -> tuple:
        offset = np.asarray(position, dtype=np.float64)
        return tuple(p.placed(yaw, offset) for p in self.parts)

    def depth_extent(self, yaw: float = 0.0) -> float:
        """Extent along the optical axis when viewed at ``yaw``."""
        parts = self.posed((0.0, 0.0, 0.0), yaw)
        lo = min(p.bounds()[0][2] for p in parts)
        hi = max(p.bounds()[1][2] for p in parts)
        return hi - lo

    def front_offset(self, yaw: float = 0.0) -> float:
        """Distance from the body center to the nearest surface along z."""
        parts = self.posed((0.0, 0.0, 0.0), yaw)
        return -min(p.bounds()[0][2] for p in parts)


def multirotor(name: str, span: float, n_rotors: int = 4, phase_deg: float | None = None) -> DroneModel:
    """Build an n-rotor airframe scaled to ``span`` metres tip to tip.

    Arms and rotor discs share the body's vertical center so the
    silhouette stays 4-connected at coarse resolution.
    """
    rotor_r = 0.12 * span
    arm_len = span / 2 - rotor_r
    if phase_deg is None:
        # X layout for quads, arm-forward for hexes
        phase_deg = 45.0 if n_rotors == 4 else 0.0
    body = Box3((0.0, 0.0, 0.0), (0.3 * span, 0.16 * span, 0.3 * span))
    arm_t = max(0.05 * span, 0.012)
    rotor_h = max(0.06 * span, 0.015)
    parts = [body]
    for k in range(n_rotors):
        theta = math.radians(phase_deg + 360.0 * k / n_rotors)
        ux, uz = math.cos(theta), math.sin(theta)
        parts.append(Box3((arm_len / 2 * ux, 0.0, arm_len / 2 * uz), (arm_len, arm_t, arm_t), -theta))
        parts.append(Cylinder((arm_len * ux, 0.0, arm_len * uz), rotor_r, rotor_h))
    return DroneModel(name, tuple(parts), span, n_rotors, phase_deg)


PRESETS = {
    "micro": lambda: multirotor("micro", 0.2),
    "ar_drone": lambda: multirotor("ar_drone", 0.5),
    "solo": lambda: multirotor("solo", 0.46),
    "s800": lambda: multirotor("s800", 0.8, n_rotors=6),
}


def drone_from_dict(data) -> DroneModel:
    """``{"model": "ar_drone"}`` or ``{"rotors": 6, "span": 0.7, "name": ...}``."""
    if isinstance(data, str):
        data = {"model": data}
    if "model" in data:
        try:
            return PRESETS[data["model"]]()
        except KeyError:
            raise ValueError(f"unknown drone model {data['model']!r}; known: {sorted(PRESETS)}") from None
    return multirotor(data.get("name", "custom"), float(data["span"]), int(data.get("rotors", 4)),
                      data.get("phase_deg"))


def drone_to_dict(model: DroneModel) -> dict:
    if model.name in PRESETS and PRESETS[model.name]() == model:
        return {"model": model.name}
    return {"name": model.name, "span": model.span, "rotors": model.n_rotors, "phase_deg": model.phase_deg}
