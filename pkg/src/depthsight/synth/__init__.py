"""Procedural stereo depth scenes with ground truth."""

from depthsight.synth.drones import PRESETS, DroneModel, multirotor
from depthsight.synth.primitives import Box3, Cylinder, Plane, Sphere
from depthsight.synth.scene import Annotation, NoiseSpec, Pose, RenderResult, SceneSpec, render
from depthsight.synth.sequence import Dataset, approach, generate_sequence, hover, render_frames

__all__ = [
    "PRESETS", "Annotation", "Box3", "Cylinder", "Dataset", "DroneModel", "NoiseSpec",
    "Plane", "Pose", "RenderResult", "SceneSpec", "Sphere", "approach", "generate_sequence",
    "hover", "multirotor", "render", "render_frames",
]
