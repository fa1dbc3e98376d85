import math

import numpy as np
import pytest
from shapely.geometry import LineString, Point, Polygon
from shapely.ops import unary_union

from walkgen.geometry import CameraModel, Pose, Vec3, frustum_contains, frustum_mask
from walkgen.cli import straight_walk
from walkgen.islandgen import (DecorParams, DogParams, IslandMap, IslandParams, decorate, generate_island,
                               generate_voronoi, lay_path, place_endpoints, simulate_dog, walk_landmass)

import oracles

CAM = CameraModel()


def shape(poly):
    return Polygon(poly)


def test_two_sites_split_by_bisector():
    vm = generate_voronoi((10.0, 10.0), 2, seed=3)
    assert vm.adjacency == ((1,), (0,))
    a, b = vm.shared_edges[(0, 1)]
    s0, s1 = vm.sites
    for p in (a, b):
        assert math.isclose(np.hypot(*(s0 - p)), np.hypot(*(s1 - p)), abs_tol=1e-9)
    assert shape(vm.polygons[0]).area + shape(vm.polygons[1]).area == pytest.approx(100.0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_cells_match_nearest_site(seed):
    vm = generate_voronoi((50.0, 30.0), 40, seed)
    rng = np.random.default_rng(seed)
    polys = [shape(p) for p in vm.polygons]
    for p in rng.uniform((0, 0), (50, 30), (500, 2)):
        d = np.hypot(*(vm.sites - p).T)
        nearest = int(np.argmin(d))
        if np.sort(d)[1] - d.min() < 1e-6:
            continue
        assert polys[nearest].buffer(1e-9).contains(Point(p))
    assert sum(q.area for q in polys) == pytest.approx(1500.0)
    assert unary_union(polys).area == pytest.approx(1500.0)


def test_adjacency_means_shared_edge():
    vm = generate_voronoi((100.0, 100.0), 50, 4)
    polys = [shape(p) for p in vm.polygons]
    for i, nbrs in enumerate(vm.adjacency):
        for j in range(len(vm)):
            if j == i:
                continue
            touching = polys[i].buffer(1e-7).intersection(polys[j].buffer(1e-7))
            # shared edge of positive length shows up as a sliver longer than a point
            edge = touching.length > 1e-3 if not touching.is_empty else False
            assert (j in nbrs) == edge, (i, j)


def test_voronoi_deterministic():
    a = generate_voronoi((100.0, 100.0), 50, 9)
    b = generate_voronoi((100.0, 100.0), 50, 9)
    assert np.array_equal(a.sites, b.sites) and a.adjacency == b.adjacency
    assert all(np.array_equal(p, q) for p, q in zip(a.polygons, b.polygons))


def test_bad_site_count():
    with pytest.raises(ValueError):
        generate_voronoi((10.0, 10.0), 1, 0)


def land_connected(island: IslandMap) -> bool:
    cells = island.land_cells()
    comp = oracles.flood_fill(cells, lambda i: island.voronoi.adjacency[i], cells[0])
    return comp == set(cells)


@pytest.mark.parametrize("seed", range(5))
def test_landmass_connected(seed):
    island = generate_island(IslandParams(), seed)
    assert island.land.sum() >= 1
    assert land_connected(island)


def test_single_step_walk_is_one_cell():
    vm = generate_voronoi((100.0, 100.0), 50, 0)
    land = walk_landmass(vm, 1, 0)
    assert land.sum() == 1
    assert vm.locate((50.0, 50.0)) == int(np.argmax(land))


def test_walk_steps_bound_land():
    vm = generate_voronoi((100.0, 100.0), 50, 2)
    for steps in (2, 10, 30):
        assert 1 <= walk_landmass(vm, steps, 5).sum() <= steps


def test_decorations_follow_cell_type():
    island = generate_island(IslandParams(), 7)
    polys = [shape(p).buffer(1e-9) for p in island.voronoi.polygons]
    kinds = {d.kind for d in island.decorations}
    assert {"tree", "fence_segment", "spawn", "campsite", "path_stone"} <= kinds
    for d in island.decorations:
        if d.kind in ("tree", "rock", "path_stone", "spawn", "campsite"):
            assert island.land[d.cell]
        if d.kind == "lilypad":
            assert not island.land[d.cell]
        if d.kind != "fence_segment":
            assert polys[d.cell].contains(Point(d.x, d.z))


def test_fences_sit_on_border_edges():
    island = generate_island(IslandParams(decor=DecorParams(p_fence=1.0)), 3)
    fences = [d for d in island.decorations if d.kind == "fence_segment"]
    assert len(fences) == len(island.border_edges())
    polys = [shape(p) for p in island.voronoi.polygons]
    for f in fences:
        seg = LineString(f.segment)
        touching = [c for c, p in enumerate(polys) if p.buffer(1e-7).contains(seg)]
        assert len(touching) == 2
        assert island.land[touching[0]] != island.land[touching[1]]


def test_no_fences_when_probability_zero():
    island = generate_island(IslandParams(decor=DecorParams(p_fence=0.0)), 3)
    assert not any(d.kind == "fence_segment" for d in island.decorations)


def test_poisson_spacing():
    params = DecorParams(tree_density=0.5, tree_spacing=2.0, rock_density=0.0)
    island = generate_island(IslandParams(decor=params), 11)
    by_cell = {}
    for d in island.decorations:
        if d.kind == "tree":
            by_cell.setdefault(d.cell, []).append((d.x, d.z))
    assert by_cell
    for pts in by_cell.values():
        pts = np.array(pts)
        for i in range(len(pts)):
            for j in range(i):
                assert np.hypot(*(pts[i] - pts[j])) >= 2.0


def test_decorate_needs_land():
    vm = generate_voronoi((10.0, 10.0), 5, 0)
    with pytest.raises(ValueError):
        decorate(IslandMap(vm, np.zeros(5, dtype=bool)), DecorParams(), 0)


@pytest.mark.parametrize("seed", range(4))
def test_endpoints_are_farthest_pair(seed):
    island = generate_island(IslandParams(), seed)
    cells = island.land_cells()
    cent = {c: island.voronoi.centroid(c) for c in cells}
    best = max(np.hypot(*(cent[a] - cent[b])) for a in cells for b in cells)
    s, c = island.spawn, island.campsite
    assert np.hypot(*(cent[s] - cent[c])) == pytest.approx(best)
    assert tuple(cent[s]) <= tuple(cent[c])
    assert place_endpoints(island) == (s, c)


@pytest.mark.parametrize("seed", range(6))
def test_path_is_shortest_over_land(seed):
    island = generate_island(IslandParams(), seed)
    path = list(island.path_cells)
    adj = island.voronoi.adjacency
    assert path[0] == island.spawn and path[-1] == island.campsite
    assert all(island.land[c] for c in path)
    assert all(b in adj[a] for a, b in zip(path, path[1:]))
    want = oracles.graph_hops(island.land_cells(), lambda i: adj[i], island.spawn, island.campsite)
    assert len(path) - 1 == want


def test_lay_path_rejects_water():
    island = generate_island(IslandParams(), 0)
    water = int(np.argmin(island.land))
    with pytest.raises(ValueError):
        lay_path(island, island.spawn, water)


def test_island_deterministic():
    a = generate_island(IslandParams(), 21)
    b = generate_island(IslandParams(), 21)
    assert a.decorations == b.decorations and a.path_cells == b.path_cells
    assert np.array_equal(a.land, b.land)


def all_land(seed=0, n=30):
    vm = generate_voronoi((60.0, 60.0), n, seed)
    return IslandMap(vm, np.ones(n, dtype=bool))


def looking(x, z, yaw, ticks):
    return [Pose(Vec3(x, 1.6, z), yaw)] * ticks


def dog_seen(pose, d, height=0.5):
    return frustum_contains(pose, CAM, Vec3(d.x, height, d.z))


def test_dog_behind_player_returns_to_view():
    island = all_land()
    traj = looking(30, 20, 0.0, 40)
    run = simulate_dog(island, traj, CAM, start=(30, 10))
    first = next(t.tick for t in run.trace if t.in_view)
    assert first <= math.ceil(10.0 / DogParams().speed) + 3
    dists = [np.hypot(t.x - 30, t.z - 20) for t in run.trace[:first + 1]]
    # heading for the view costs no more than one step per tick
    assert all(abs(a - b) <= 1.0 + 1e-9 for a, b in zip(dists, dists[1:]))


def test_dog_stays_in_view_once_there():
    island = all_land(1)
    traj = looking(30, 20, 0.0, 60)
    run = simulate_dog(island, traj, CAM, start=(30, 26))
    assert run.trace[0].in_view
    assert all(t.in_view for t in run.trace)
    assert run.in_view_fraction == 1.0


def test_dog_never_leaves_land():
    island = generate_island(IslandParams(), 5)
    s = island.voronoi.centroid(island.spawn)
    c = island.voronoi.centroid(island.campsite)
    yaw = math.atan2(c[0] - s[0], c[1] - s[1])
    pts = [s + (c - s) * k / 59 for k in range(60)]
    traj = [Pose(Vec3(p[0], 1.6, p[1]), yaw) for p in pts]
    run = simulate_dog(island, traj, CAM, seed=3)
    polys = unary_union([shape(island.voronoi.polygons[i]) for i in island.land_cells()]).buffer(1e-6)
    for t in run.trace:
        assert polys.contains(Point(t.x, t.z))
    assert 0.0 <= run.in_view_fraction <= 1.0


def test_dog_mode_follows_visibility():
    island = all_land(2)
    traj = looking(30, 30, math.pi / 3, 30)
    run = simulate_dog(island, traj, CAM, start=(10, 50), seed=1)
    prev = (10.0, 50.0)
    for pose, t in zip(traj, run.trace):
        seen_before = frustum_contains(pose, CAM, Vec3(prev[0], 0.5, prev[1]))
        assert t.mode == ("in_view" if seen_before else "returning")
        assert t.in_view == dog_seen(pose, t)
        prev = (t.x, t.z)


def test_dog_deterministic_and_validates():
    island = all_land()
    traj = looking(30, 20, 0.0, 20)
    assert simulate_dog(island, traj, CAM, seed=4) == simulate_dog(island, traj, CAM, seed=4)
    with pytest.raises(ValueError):
        simulate_dog(island, [], CAM)


def sampled_view(pose, height=0.5, reach=30.0, step=0.1):
    """Ground points at dog height inside the frustum, on a fine grid around the player."""
    xs = np.arange(pose.position.x - reach, pose.position.x + reach, step)
    zs = np.arange(pose.position.z - reach, pose.position.z + reach, step)
    gx, gz = np.meshgrid(xs, zs)
    pts = np.column_stack([gx.ravel(), np.full(gx.size, height), gz.ravel()])
    inside = frustum_mask(pose, CAM, pts)
    return pts[inside][:, [0, 2]]


@pytest.mark.parametrize("seed", range(3))
def test_returning_dog_closes_in_on_view(seed):
    yaw = [0.0, 2.0, -2.5][seed]
    pose = Pose(Vec3(30, 1.6, 30), yaw)
    start = (30 - 20 * math.sin(yaw), 30 - 20 * math.cos(yaw))
    run = simulate_dog(all_land(seed, 40), [pose] * 30, CAM, start=start, seed=seed)
    view = sampled_view(pose)
    gap = lambda x, z: float(np.min(np.hypot(view[:, 0] - x, view[:, 1] - z)))  # noqa: E731
    prev = gap(*start)
    for t in run.trace:
        if t.mode != "returning":
            break
        now = gap(t.x, t.z)
        assert now < prev
        prev = now
    assert run.trace[-1].in_view


def test_walking_player_keeps_dog_in_view():
    poses = straight_walk((15, 15), (50, 50), 70, 1.6, 0.5)
    run = simulate_dog(all_land(3), poses, CAM, seed=2)
    first = next(i for i, t in enumerate(run.trace) if t.mode == "in_view")
    assert all(t.mode == "in_view" and t.in_view for t in run.trace[first:])
