import numpy as np
import pytest

from depthsight.geometry import StereoRig
from depthsight.synth import Box3, DroneModel, Plane, SceneSpec

# f=100, principal point (50, 50) on both cameras, 10 cm baseline
SMALL_RIG = StereoRig(focal=100.0, cx_l=50.0, cy_l=50.0, cx_r=50.0, baseline=0.1, width=100, height=100)


@pytest.fixture
def small_rig():
    return SMALL_RIG


@pytest.fixture
def flat_target():
    """A 0.3 m x 0.3 m plate, 2 cm deep, as a single-part drone."""
    return DroneModel("plate", (Box3((0.0, 0.0, 0.0), (0.3, 0.3, 0.02)),), span=0.3)


@pytest.fixture
def wall_scene(small_rig, flat_target):
    return SceneSpec(small_rig, (Plane((0.0, 0.0, 8.0), (0.0, 0.0, 1.0)),), flat_target)


def block_map(shape=(64, 64), background=8.0, blocks=()):
    """Depth array with rectangular blocks: ``blocks`` is [(x, y, w, h, depth), ...]."""
    z = np.full(shape, background)
    for x, y, w, h, d in blocks:
        z[y:y + h, x:x + w] = d
    return z


# (criterion, passed, detail) tuples recorded by the acceptance suite
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
