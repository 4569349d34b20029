"""Depth-contrast detection and stereo 3D localization of flying objects."""

__version__ = "0.1.0"

from depthsight.geometry import DEFAULT_RIG, Point3D, StereoRig, project, reproject
from depthsight.depthmap import DepthMap, QuantizationSpec
from depthsight.boxes import Box
from depthsight.detector import Detection, DetectorParams, detect
from depthsight.localizer import ZrefMethod, localize, select_point

__all__ = [
    "DEFAULT_RIG",
    "Box",
    "DepthMap",
    "Detection",
    "DetectorParams",
    "Point3D",
    "QuantizationSpec",
    "StereoRig",
    "ZrefMethod",
    "detect",
    "localize",
    "project",
    "reproject",
    "select_point",
]
