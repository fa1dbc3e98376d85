import math

import numpy as np
import pytest

from walkgen.explorer import (BeliefState, ExplorerParams, GroundTruth, PointState, belief_violations,
                              choose_target, observe, overlay_grid, run_exploration)
from walkgen.geometry import Aabb, CameraModel, Pose, Vec3
from walkgen.navgrid import build_navgrid

import oracles
from conftest import make_template

EMPTY = make_template()
WALL = [Aabb.from_bounds((0, 0, 9.6), (20, 3, 10.4))]


def test_overlay_grid_corners():
    lat = overlay_grid(EMPTY, 0.5)
    assert (lat.nx, lat.nz, len(lat)) == (41, 41, 1681)
    lat = overlay_grid(EMPTY, 1.0)
    assert len(lat) == 441
    g = lat.ground
    assert tuple(g[0]) == (0.0, 0.0) and tuple(g[-1]) == (20.0, 20.0)
    assert tuple(g[20]) == (20.0, 0.0)


def test_overlay_grid_uneven_spacing():
    lat = overlay_grid(make_template(size=(10.0, 7.0), end=(9, 6)), 3.0)
    assert lat.xs[-1] == 10.0 and lat.zs[-1] == 7.0
    assert np.all(np.diff(lat.xs) <= 3.0) and np.all(np.diff(lat.zs) <= 3.0)


def test_overlay_grid_bad_spacing():
    with pytest.raises(ValueError):
        overlay_grid(EMPTY, 0.0)
    with pytest.raises(ValueError):
        overlay_grid(EMPTY, 30.0)


def fresh(occluders=(), spacing=1.0, t=EMPTY):
    lat = overlay_grid(t, spacing)
    grid = build_navgrid(t, [b.footprint() for b in occluders], 0.25, 0.0)
    return lat, BeliefState.empty(lat), GroundTruth(lat, grid)


def test_observe_marks_points_ahead():
    lat, belief, truth = fresh()
    observe(Pose(Vec3(10, 1.6, 10), 0.0), CameraModel(), belief, [], truth)
    ahead = lat.nearest(10, 15)
    behind = lat.nearest(10, 5)
    assert belief.states[ahead] == PointState.VISIBLE
    assert belief.states[behind] == PointState.UNOBSERVED
    assert belief_violations(belief) == []


def test_observe_frontier_ring():
    lat, belief, truth = fresh()
    observe(Pose(Vec3(10, 1.6, 10), 0.0), CameraModel(), belief, [], truth)
    belief.believed_empty[:] = True
    observe(Pose(Vec3(10, 1.6, 10), 0.0), CameraModel(), belief, [], truth)
    s = belief.states
    visible = s == PointState.VISIBLE
    for i in np.nonzero(s == PointState.FRONTIER)[0]:
        assert any(visible[j] for j in lat.neighbors(i))
    assert (s == PointState.FRONTIER).any()


def test_observe_behind_wall():
    lat, belief, truth = fresh(WALL)
    observe(Pose(Vec3(10, 1.6, 5), 0.0), CameraModel(), belief, WALL, truth)
    assert belief.states[lat.nearest(10, 15)] == PointState.UNOBSERVED
    assert belief.states[lat.nearest(10, 8)] == PointState.VISIBLE
    assert not belief.believed_empty[lat.nearest(10, 15)]


def test_turning_away_lapses_frontiers():
    lat, belief, truth = fresh()
    pose = Pose(Vec3(10, 1.6, 10), 0.0)
    observe(pose, CameraModel(), belief, [], truth)
    observe(Pose(pose.position, math.pi / 2), CameraModel(), belief, [], truth)
    assert (belief.states == PointState.FRONTIER).any()
    observe(Pose(pose.position, -math.pi / 2), CameraModel(), belief, [], truth)
    assert (belief.states == PointState.LAPSED).any()
    assert belief_violations(belief) == []


def test_choose_target_none_without_frontiers():
    lat, belief, _ = fresh()
    belief.occupy(0)
    assert choose_target(belief, 0) is None


def straight_belief():
    lat, belief, _ = fresh()
    for i in range(5):
        belief.occupy(i)
    return lat, belief


def test_choose_target_single_frontier():
    lat, belief = straight_belief()
    belief.visit_count[:] = 0
    belief.visit_count[0] = 1
    belief.states[3] = PointState.FRONTIER
    assert choose_target(belief, 0) == 3


def test_choose_target_tie_goes_to_lower_index():
    lat, belief = straight_belief()
    belief.visit_count[:] = 0
    belief.visit_count[2] = 1
    belief.states[1] = belief.states[3] = PointState.FRONTIER
    assert choose_target(belief, 2) == 1


def test_choose_target_prefers_frontier_over_lapsed():
    lat, belief = straight_belief()
    belief.visit_count[:] = 0
    belief.states[1] = PointState.LAPSED
    belief.states[4] = PointState.FRONTIER
    assert choose_target(belief, 0) == 4
    belief.states[4] = PointState.UNOBSERVED
    assert choose_target(belief, 0) == 1


def test_failed_edge_leaves_believed_graph():
    lat, belief = straight_belief()
    assert (1, 2) in belief.believed_edges()
    belief.fail_edge(2, 1)
    assert (1, 2) not in belief.believed_edges()
    belief.occupy(2)
    assert (1, 2) not in belief.believed_edges()


def small_room():
    return make_template(size=(9.0, 9.0), start=(1, 1), end=(8, 8))


def test_empty_room_fully_covered():
    run = run_exploration(small_room(), [])
    r = run.report
    assert r.termination == "frontier_exhausted"
    assert r.points_observed_fraction == 1.0
    assert r.stuck_events == 0 and r.invariant_violations == 0
    assert len(run.lattice) == 100


def test_bisected_room_matches_reachable_fraction():
    run = run_exploration(EMPTY, WALL)
    lat = run.lattice
    truth = GroundTruth(lat, build_navgrid(EMPTY, [b.footprint() for b in WALL], 0.25, 0.0))
    nodes = range(len(lat))
    want = oracles.flood_fill(nodes, lambda i: [j for j in lat.neighbors(i) if truth.edge_ok(i, j)],
                              lat.nearest(1, 1))
    assert set(np.nonzero(run.reachable)[0]) == want
    assert run.report.reachable_observed_fraction == 1.0
    frac = run.report.points_observed_fraction
    assert abs(frac - len(want) / len(lat)) <= 1 / len(lat) + 1e-12
    assert run.report.termination == "frontier_exhausted"


def test_budget_one():
    run = run_exploration(EMPTY, [], ExplorerParams(budget=1))
    assert run.report.termination == "budget_exhausted"
    assert run.report.ticks_used == 1
    assert len(run.trajectory) == 2


def test_agent_never_on_blocked_point_and_steps_are_adjacent():
    boxes = [Aabb.from_bounds((4, 0, 3), (6, 2, 7)), Aabb.from_bounds((10, 0, 10), (14, 3, 11))]
    t = make_template(size=(16.0, 16.0), start=(1, 1), end=(15, 15))
    run = run_exploration(t, boxes)
    lat = run.lattice
    truth = GroundTruth(lat, build_navgrid(t, [b.footprint() for b in boxes], 0.25, 0.0))
    idx = [lat.nearest(s.x, s.z) for s in run.trajectory]
    assert not any(truth.point_blocked[i] for i in idx)
    for a, b in zip(idx, idx[1:]):
        assert a == b or b in lat.neighbors(a)
    assert run.report.invariant_violations == 0


def test_failed_edges_are_truly_blocked():
    run = run_exploration(EMPTY, WALL)
    truth = GroundTruth(run.lattice, build_navgrid(EMPTY, [b.footprint() for b in WALL], 0.25, 0.0))
    for i, j in run.belief.failed_edges:
        assert not truth.edge_ok(i, j)
    assert not run.belief.failed_edges & run.belief.believed_edges()


def test_snapshots_use_known_states():
    run = run_exploration(small_room(), [])
    assert len(run.snapshots) == len(run.trajectory) == len(run.coverage)
    for snap in run.snapshots:
        assert set(np.unique(snap)) <= {0, 1, 2, 3}
    assert run.coverage == sorted(run.coverage)


def test_deterministic():
    a = run_exploration(small_room(), [])
    b = run_exploration(small_room(), [])
    assert a.report == b.report and a.trajectory == b.trajectory
