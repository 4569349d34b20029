import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depthsight.boxes import Box
from depthsight.depthmap import DepthMap
from depthsight.detector import Detection
from depthsight.errors import NoDepthInBox
from depthsight.geometry import DEFAULT_RIG
from depthsight.localizer import (
    ALL_METHODS,
    ZrefMethod,
    first_quartile,
    localize,
    reference_depth,
    select_point,
)
from depthsight.synth import PRESETS, Plane, Pose, SceneSpec, render

from conftest import SMALL_RIG

MIN, MEAN, MED = ZrefMethod.MIN_DEPTH, ZrefMethod.MEAN_BELOW_Q1, ZrefMethod.MEDIAN_BELOW_Q1


def oracle(values, method):
    """Reference implementation on plain Python lists."""
    if method is MIN:
        return min(values)
    q1 = statistics.quantiles(values, n=4, method="inclusive")[0] if len(values) > 1 else values[0]
    cand = [z for z in values if z < q1] or [min(values)]
    return statistics.fmean(cand) if method is MEAN else statistics.median(cand)


@pytest.fixture
def twelve():
    # 3x4 box; depths listed in row-major order
    z = np.full((10, 10), 9.0)
    z[2:5, 3:7] = np.array([[8.0, 1.6, 8.0, 8.0],
                            [1.1, 8.0, 2.0, 8.0],
                            [8.0, 8.0, 1.0, 8.0]])
    return DepthMap(z), Box(3, 2, 4, 3)


def test_worked_example(twelve):
    m, box = twelve
    z = m.data[box.slices()].ravel()
    assert first_quartile(np.sort(z)) == pytest.approx(1.9)
    (px, zr) = select_point(m, box, MIN)
    assert zr == 1.0 and px == (5, 4)
    (px, zr) = select_point(m, box, MEAN)
    assert zr == pytest.approx(3.7 / 3) and m.data[px[1], px[0]] == 1.1 and px == (3, 3)
    (px, zr) = select_point(m, box, MED)
    assert zr == 1.1 and px == (3, 3)


def test_single_valid_pixel():
    z = np.full((5, 5), np.nan)
    z[2, 3] = 3.0
    for method in ALL_METHODS:
        assert select_point(DepthMap(z), Box(0, 0, 5, 5), method) == ((3, 2), 3.0)


def test_no_depth_in_box():
    z = np.full((5, 5), 4.0)
    z[:2, :2] = np.nan
    for method in ALL_METHODS:
        with pytest.raises(NoDepthInBox):
            select_point(DepthMap(z), Box(0, 0, 2, 2), method)
    with pytest.raises(NoDepthInBox):
        select_point(DepthMap(z), Box(10, 10, 2, 2), MIN)


def test_all_tied_falls_back_to_min():
    z = np.full((4, 4), 5.0)
    for method in ALL_METHODS:
        assert select_point(DepthMap(z), Box(0, 0, 4, 4), method) == ((0, 0), 5.0)


def test_row_major_tie_break():
    z = np.full((6, 6), 7.0)
    z[4, 1] = z[2, 5] = 2.0
    assert select_point(DepthMap(z), Box(0, 0, 6, 6), MIN)[0] == (5, 2)


def test_method_parse():
    assert ZrefMethod.parse("MeanQ1") is MEAN
    assert [m.label for m in ALL_METHODS] == ["Method 1", "Method 2", "Method 3"]
    with pytest.raises(ValueError):
        ZrefMethod.parse("mode")


depth_lists = st.lists(st.floats(0.5, 20.0, allow_nan=False), min_size=1, max_size=60)


@settings(max_examples=200, deadline=None)
@given(depth_lists)
def test_reference_depth_matches_oracle(values):
    for method in ALL_METHODS:
        assert reference_depth(np.array(values), method) == pytest.approx(oracle(values, method), rel=1e-12)


@settings(max_examples=150, deadline=None)
@given(depth_lists, st.integers(1, 8))
def test_selection_invariants(values, width):
    h = math.ceil(len(values) / width)
    arr = np.full(h * width, np.nan)
    arr[:len(values)] = values
    m = DepthMap(arr.reshape(h, width))
    box = Box(0, 0, width, h)
    picked = {}
    for method in ALL_METHODS:
        (u, v), zr = select_point(m, box, method)
        assert box.contains(u, v)
        d = m.data[v, u]
        assert d in values
        assert min(values) <= zr <= max(values)
        # nothing in the box is strictly closer to z_ref
        assert abs(d - zr) <= np.nanmin(np.abs(m.data - zr))
        picked[method] = d
    assert picked[MIN] <= picked[MEAN] and picked[MIN] <= picked[MED]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 99), st.integers(0, 99), st.floats(0.3, 15.0), st.sampled_from(ALL_METHODS))
def test_localize_depth_consistency(u, v, depth, method):
    z = np.full((100, 100), 20.0)
    z[v, u] = depth
    det = Detection(Box(max(u - 2, 0), max(v - 2, 0), 5, 5).clip(100, 100), 1.0)
    loc = localize(DepthMap(z), det, SMALL_RIG, method)
    assert loc.pixel == (u, v)
    assert loc.position.z == pytest.approx(depth, rel=1e-9)
    assert loc.position.x == pytest.approx((u - 50) * depth / 100, rel=1e-9, abs=1e-12)
    assert loc.position.y == pytest.approx((v - 50) * depth / 100, rel=1e-9, abs=1e-12)


def test_principal_point_localizes_on_axis():
    z = np.full((100, 100), 8.0)
    z[50, 50] = 1.0
    loc = localize(DepthMap(z), Detection(Box(48, 48, 5, 5), 0.9), SMALL_RIG, MIN)
    assert loc.position.as_tuple() == pytest.approx((0.0, 0.0, 1.0))
    rec = loc.to_json_dict(4)
    assert rec["frame_id"] == 4 and rec["pixel"] == [50, 50] and rec["method"] == "min"


def test_background_box_localizes_background():
    z = np.full((100, 100), 8.0)
    z[10:20, 10:20] = 2.0
    loc = localize(DepthMap(z), Detection(Box(60, 60, 10, 10), 1.0), SMALL_RIG, MEAN)
    assert loc.position.z == 8.0


@pytest.mark.parametrize("method", ALL_METHODS)
def test_rendered_target_within_bounding_radius(method):
    drone = PRESETS["ar_drone"]()
    res = render(SceneSpec(DEFAULT_RIG, (Plane((0, 0, 15.0), (0, 0, 1)),), drone, Pose((0.0, 0.0, 2.0))))
    loc = localize(res.depth, Detection(res.annotation.gt_box, 1.0), DEFAULT_RIG, method)
    err = np.linalg.norm(loc.position.as_array() - np.array([0.0, 0.0, 2.0]))
    assert err <= drone.bounding_diameter / 2
