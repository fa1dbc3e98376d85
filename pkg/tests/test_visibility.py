import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walkgen.geometry import Aabb, CameraModel, Pose, Vec3, aabb_vertices, frustum_contains
from walkgen.template import MarkerConstraint, ObjectiveMarker, TemplateValidationError
from walkgen.visibility import EvalParams, evaluate_level, marker_visible_at, score

import oracles
from conftest import make_template

EYE = Pose(Vec3(0, 1.6, 0), 0.0)
CAM = CameraModel()


def cube(cx, cy, cz, mid="m", constraint=MarkerConstraint.MUST_SEE):
    return ObjectiveMarker(mid, Aabb.from_bounds((cx - 0.5, cy - 0.5, cz - 0.5), (cx + 0.5, cy + 0.5, cz + 0.5)),
                           constraint)


def box_arrays(boxes):
    return [(np.array(tuple(b.min)), np.array(tuple(b.max))) for b in boxes]


def oracle_visible(pose, camera, marker, occluders) -> bool:
    """Projection oracle for the frustum and sampling oracle for each vertex ray."""
    eye = np.array(tuple(pose.position))
    arr = box_arrays(occluders)
    for v in aabb_vertices(marker.box):
        v = np.array(tuple(v))
        if not oracles.projected_inside(eye, pose.yaw, v, camera.vertical_fov, camera.aspect,
                                        camera.near, camera.far):
            continue
        if not oracles.sampled_segment_blocked(eye, v, arr):
            return True
    return False


def test_marker_ahead_visible():
    assert marker_visible_at(EYE, CAM, cube(0, 0.5, 10), [])


def test_marker_behind_not_visible():
    assert not marker_visible_at(EYE, CAM, cube(0, 0.5, -10), [])


def test_wall_hides_marker():
    wall = [Aabb.from_bounds((-3, 0, 5), (3, 3, 5.5))]
    m = cube(0, 0.5, 10)
    assert not marker_visible_at(EYE, CAM, m, wall)
    eye = np.array(tuple(EYE.position))
    for v in aabb_vertices(m.box):
        assert frustum_contains(EYE, CAM, v)
        assert oracles.sampled_segment_blocked(eye, np.array(tuple(v)), box_arrays(wall))


def test_marker_visible_agrees_with_oracle():
    rng = np.random.default_rng(4)
    for _ in range(150):
        pose = Pose(Vec3(*rng.uniform(-5, 5, 3)), rng.uniform(-math.pi, math.pi))
        m = cube(*rng.uniform(-10, 10, 3))
        lo = rng.uniform(-8, 8, (3, 3))
        occ = [Aabb.from_bounds(a, a + rng.uniform(0.5, 3, 3)) for a in lo]
        assert marker_visible_at(pose, CAM, m, occ) == oracle_visible(pose, CAM, m, occ)


def straight_template(markers):
    return make_template(start=(1, 10), end=(19, 10), markers=markers)


def test_side_marker_is_seen():
    t = straight_template([("m", (9.5, 0, 11), (10.5, 1, 12), "must_see")])
    report, trace = evaluate_level(t, [])
    assert report.path_found and report.constraints_met == 1
    assert trace.visible.shape == (len(trace.samples), 1)


def test_hidden_marker_on_route_is_seen():
    t = straight_template([("m", (9.5, 0, 9.5), (10.5, 1, 10.5), "must_stay_hidden")])
    report, _ = evaluate_level(t, [])
    assert report.constraints_met == 0


def test_wall_along_corridor_hides_marker():
    t = make_template(start=(1, 1), end=(19, 1), markers=[("h", (10, 0, 10), (11, 1, 11), "must_stay_hidden")])
    wall = [Aabb.from_bounds((0, 0, 3), (20, 5, 3.5))]
    report, trace = evaluate_level(t, wall)
    assert report.path_found
    assert report.constraints_met == 1
    assert report.per_marker_visible_fraction == (0.0,)
    for s in trace.samples:
        assert not oracle_visible(s.pose, CAM, t.markers[0], wall)


def test_blocked_start_scores_zero():
    t = straight_template([("m", (9.5, 0, 11), (10.5, 1, 12), "must_see")])
    box = [Aabb.from_bounds((0, 0, 0), (3, 2, 20))]
    report, trace = evaluate_level(t, box)
    assert not report.path_found
    assert report.fitness == 0.0 and report.constraints_met == 0
    assert trace.samples == []


def test_zero_markers_vacuous():
    report, _ = evaluate_level(make_template(), [])
    assert (report.constraints_met, report.shaping, report.fitness) == (0, 1.0, 1.0)


def test_invalid_template_raises():
    with pytest.raises(TemplateValidationError):
        evaluate_level(make_template(start=(5, 5), end=(5, 5)), [])


def test_score_thresholds():
    t = make_template(markers=[("a", (2, 0, 2), (3, 1, 3), "must_see"), ("b", (5, 0, 5), (6, 1, 6), "must_stay_hidden")])
    p = EvalParams()
    r = score(t, [0.10, 0.0], p)
    assert r.marker_met == (True, True) and r.fitness == pytest.approx(2 + (0.10 + 1.0) / 2)
    r = score(t, [0.099, 0.01], p)
    assert r.marker_met == (False, False)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fitness_bounds_and_determinism(seed):
    rng = np.random.default_rng(seed)
    markers = [(f"m{i}", tuple(lo), tuple(lo + 1.0), rng.choice(["must_see", "must_stay_hidden"]))
               for i, lo in enumerate(rng.uniform(2, 17, (2, 3)) * [1, 0, 1])]
    t = make_template(markers=markers)
    occ = []
    for _ in range(rng.integers(0, 6)):
        lo = rng.uniform(0, 18, 3) * [1, 0, 1]
        occ.append(Aabb.from_bounds(lo, lo + rng.uniform(0.5, 4, 3)))
    a, ta = evaluate_level(t, occ)
    b, tb = evaluate_level(t, occ)
    assert a == b and ta == tb
    if a.path_found:
        assert 0.0 <= a.fitness <= len(markers) + 1
        assert a.fitness > a.constraints_met or a.shaping == 0.0
    else:
        assert a.fitness == 0.0


def test_removing_irrelevant_occluder_keeps_matrix():
    t = make_template(markers=[("a", (4, 0, 12), (5, 1, 13), "must_see"), ("b", (14, 0, 4), (15, 2, 5), "must_see")])
    base = [Aabb.from_bounds((8, 0, 8), (11, 3, 10))]
    sky = Aabb.from_bounds((0, 40, 0), (20, 41, 20))
    _, with_sky = evaluate_level(t, base + [sky])
    arr = box_arrays([sky])
    for s in with_sky.samples:
        eye = np.array(tuple(s.pose.position))
        for m in t.markers:
            for v in aabb_vertices(m.box):
                assert not oracles.sampled_segment_blocked(eye, np.array(tuple(v)), arr)
    _, without = evaluate_level(t, base)
    assert np.array_equal(with_sky.visible, without.visible)


def test_unobstructed_marker_in_view_has_positive_fraction():
    t = make_template(markers=[("a", (12, 0, 15), (13, 1, 16), "must_see")])
    report, trace = evaluate_level(t, [])
    centre = t.markers[0].box.center
    assert any(frustum_contains(s.pose, CAM, centre) for s in trace.samples)
    assert report.per_marker_visible_fraction[0] > 0
