"""Island maps: Voronoi partition, random-walk landmass, decoration, endpoints,
stone paths and a dog companion that keeps walking back into view.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import Delaunay, QhullError

from . import polygon as pg
from .geometry import CameraModel, Pose, Vec3, frustum_contains
from .rng import stream

DECORATION_KINDS = ("tree", "lilypad", "fence_segment", "rock", "path_stone", "campsite", "spawn")


@dataclass(frozen=True, eq=False)
class VoronoiMap:
    extent: tuple[float, float]
    sites: np.ndarray  # (n, 2)
    polygons: list[np.ndarray]
    adjacency: tuple[tuple[int, ...], ...]
    shared_edges: dict[tuple[int, int], tuple[tuple[float, float], tuple[float, float]]]

    def __len__(self) -> int:
        return len(self.sites)

    def centroid(self, i: int) -> np.ndarray:
        return pg.area_centroid(self.polygons[i])[1]

    def locate(self, p) -> int:
        """Cell containing ``p`` (nearest site; lowest index on ties)."""
        d = np.hypot(self.sites[:, 0] - p[0], self.sites[:, 1] - p[1])
        return int(np.argmin(d))


@dataclass(frozen=True)
class Decoration:
    kind: str
    x: float
    z: float
    cell: int
    segment: tuple[tuple[float, float], tuple[float, float]] | None = None


@dataclass(frozen=True, eq=False)
class IslandMap:
    voronoi: VoronoiMap
    land: np.ndarray
    decorations: tuple[Decoration, ...] = ()
    path_cells: tuple[int, ...] = ()
    spawn: int | None = None
    campsite: int | None = None

    @property
    def sites(self) -> np.ndarray:
        return self.voronoi.sites

    def land_cells(self) -> list[int]:
        return [int(i) for i in np.nonzero(self.land)[0]]

    def border_edges(self) -> list[tuple[int, int]]:
        """Adjacent (i < j) pairs where exactly one side is land."""
        out = []
        for i, nbrs in enumerate(self.voronoi.adjacency):
            for j in nbrs:
                if i < j and self.land[i] != self.land[j]:
                    out.append((i, j))
        return out

    def on_land(self, p, tol: float = pg.TOL) -> bool:
        i = self.voronoi.locate(p)
        if self.land[i] and pg.contains(self.voronoi.polygons[i], p, tol):
            return True
        return any(pg.contains(self.voronoi.polygons[j], p, tol) for j in self.land_cells())


def _candidate_neighbors(sites: np.ndarray) -> list[set[int]]:
    n = len(sites)
    nbrs: list[set[int]] = [set() for _ in range(n)]
    try:
        if n < 4:
            raise QhullError("too few sites")
        tri = Delaunay(sites)
        for simplex in tri.simplices:
            for a in simplex:
                for b in simplex:
                    if a != b:
                        nbrs[a].add(int(b))
    except QhullError:
        for a in range(n):
            nbrs[a] = set(range(n)) - {a}
    return nbrs


def _cells(sites: np.ndarray, extent: tuple[float, float]):
    box = pg.box_polygon(*extent)
    nbrs = _candidate_neighbors(sites)
    polys = []
    for i, si in enumerate(sites):
        poly = box
        for j in sorted(nbrs[i]):
            sj = sites[j]
            poly = pg.clip_halfplane(poly, sj - si, (sj @ sj - si @ si) / 2.0)
        polys.append(poly)

    scale = max(extent)
    adjacency: list[list[int]] = [[] for _ in sites]
    shared = {}
    for i in range(len(sites)):
        for j in sorted(nbrs[i]):
            if j <= i:
                continue
            normal = sites[j] - sites[i]
            offset = (sites[j] @ sites[j] - sites[i] @ sites[i]) / 2.0
            norm = float(np.hypot(*normal))
            on_line = [v for v in polys[i]
                       if abs(v @ normal - offset) <= 1e-9 * scale * max(norm, 1.0)]
            if len(on_line) < 2:
                continue
            pts = np.array(on_line)
            direction = np.array([-normal[1], normal[0]])
            proj = pts @ direction
            a, b = pts[int(np.argmin(proj))], pts[int(np.argmax(proj))]
            if np.hypot(*(b - a)) <= 1e-9 * scale:
                continue
            adjacency[i].append(j)
            adjacency[j].append(i)
            shared[(i, j)] = (tuple(map(float, a)), tuple(map(float, b)))
    return polys, tuple(tuple(sorted(a)) for a in adjacency), shared


def generate_voronoi(extent: tuple[float, float], n_sites: int, seed: int) -> VoronoiMap:
    """Uniform sites, one Lloyd step, then cells clipped to the extent."""
    if n_sites < 2:
        raise ValueError("need at least 2 sites")
    rng = stream(seed, "voronoi")
    sites = rng.uniform((0.0, 0.0), extent, size=(n_sites, 2))
    polys, _, _ = _cells(sites, extent)
    sites = np.array([pg.area_centroid(p)[1] for p in polys])
    polys, adjacency, shared = _cells(sites, extent)
    return VoronoiMap(tuple(map(float, extent)), sites, polys, adjacency, shared)


def walk_landmass(vmap: VoronoiMap, walk_steps: int, seed: int) -> np.ndarray:
    """Random walk from the most central cell; visited cells become land."""
    if walk_steps < 1:
        raise ValueError("walk_steps must be at least 1")
    rng = stream(seed, "landmass")
    center = np.array(vmap.extent) / 2.0
    cur = vmap.locate(center)
    land = np.zeros(len(vmap), dtype=bool)
    for _ in range(walk_steps):
        land[cur] = True
        nbrs = vmap.adjacency[cur]
        if nbrs:
            cur = nbrs[int(rng.integers(len(nbrs)))]
    return land


@dataclass(frozen=True)
class DecorParams:
    """Fence probability per border edge; densities are expected items per m^2."""

    p_fence: float = 0.5
    tree_density: float = 0.02
    tree_spacing: float = 2.0
    rock_density: float = 0.004
    rock_spacing: float = 3.0
    lily_density: float = 0.01
    lily_spacing: float = 1.5


def _sample_in(poly: np.ndarray, rng: np.random.Generator, tries: int = 32):
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    for _ in range(tries):
        p = rng.uniform(lo, hi)
        if pg.contains(poly, p, 0.0):
            return p
    return None


def _scatter(poly: np.ndarray, density: float, spacing: float, rng: np.random.Generator,
             taken: list[np.ndarray]) -> list[np.ndarray]:
    """Dart-throwing Poisson-disc sampling inside one cell."""
    if density <= 0:
        return []
    area, _ = pg.area_centroid(poly)
    darts = int(rng.poisson(density * area))
    placed = []
    for _ in range(darts):
        p = _sample_in(poly, rng)
        if p is None:
            continue
        if all(np.hypot(*(p - q)) >= spacing for q in taken):
            taken.append(p)
            placed.append(p)
    return placed


def decorate(island: IslandMap, params: DecorParams, seed: int) -> list[Decoration]:
    if not island.land.any():
        raise ValueError("cannot decorate an island without land")
    rng = stream(seed, "decorate")
    vm = island.voronoi
    out: list[Decoration] = []
    for i, j in island.border_edges():
        if rng.random() < params.p_fence:
            a, b = vm.shared_edges[(i, j)]
            mid = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
            land_cell = i if island.land[i] else j
            out.append(Decoration("fence_segment", mid[0], mid[1], land_cell, (a, b)))
    for c in range(len(vm)):
        poly = vm.polygons[c]
        taken: list[np.ndarray] = []
        if island.land[c]:
            kinds = (("tree", params.tree_density, params.tree_spacing),
                     ("rock", params.rock_density, params.rock_spacing))
        else:
            kinds = (("lilypad", params.lily_density, params.lily_spacing),)
        for kind, density, spacing in kinds:
            for p in _scatter(poly, density, spacing, rng, taken):
                out.append(Decoration(kind, float(p[0]), float(p[1]), c))
    return out


def place_endpoints(island: IslandMap) -> tuple[int, int]:
    """The two land cells with the farthest-apart centroids; spawn is the western one."""
    cells = island.land_cells()
    if len(cells) < 2:
        raise ValueError("need at least two land cells")
    cent = np.array([island.voronoi.centroid(c) for c in cells])
    d = np.hypot(cent[:, None, 0] - cent[None, :, 0], cent[:, None, 1] - cent[None, :, 1])
    a, b = np.unravel_index(int(np.argmax(d)), d.shape)
    (ax, az), (bx, bz) = cent[a], cent[b]
    if (bx, bz) < (ax, az):
        a, b = b, a
    return cells[a], cells[b]


def lay_path(island: IslandMap, from_cell: int, to_cell: int) -> tuple[list[int], list[Decoration]]:
    """A* over land adjacency with unit hops.

    The heuristic is centroid distance divided by the longest land edge, which
    never overestimates the remaining hop count.
    """
    vm = island.voronoi
    if not (island.land[from_cell] and island.land[to_cell]):
        raise ValueError("path endpoints must be land cells")
    cent = np.array([vm.centroid(i) for i in range(len(vm))])
    longest = max((float(np.hypot(*(cent[i] - cent[j])))
                   for i in island.land_cells() for j in vm.adjacency[i] if island.land[j]),
                  default=1.0)

    def h(i: int) -> float:
        return float(np.hypot(*(cent[i] - cent[to_cell]))) / longest

    g = {from_cell: 0}
    parent = {from_cell: -1}
    heap = [(h(from_cell), from_cell)]
    closed = set()
    while heap:
        _, i = heapq.heappop(heap)
        if i in closed:
            continue
        if i == to_cell:
            break
        closed.add(i)
        for j in vm.adjacency[i]:
            if island.land[j] and j not in closed and g[i] + 1 < g.get(j, math.inf):
                g[j] = g[i] + 1
                parent[j] = i
                heapq.heappush(heap, (g[j] + h(j), j))
    path = [to_cell]
    while parent[path[-1]] != -1:
        path.append(parent[path[-1]])
    path.reverse()
    stones = [Decoration("path_stone", float(cent[c][0]), float(cent[c][1]), c) for c in path]
    return path, stones


@dataclass(frozen=True)
class IslandParams:
    extent: tuple[float, float] = (100.0, 100.0)
    n_sites: int = 50
    walk_steps: int = 30
    decor: DecorParams = field(default_factory=DecorParams)
    with_path: bool = True


def generate_island(params: IslandParams, seed: int) -> IslandMap:
    vm = generate_voronoi(params.extent, params.n_sites, seed)
    land = walk_landmass(vm, params.walk_steps, seed)
    island = IslandMap(vm, land)
    decorations = decorate(island, params.decor, seed)
    spawn = campsite = None
    path: list[int] = []
    if land.sum() >= 2:
        spawn, campsite = place_endpoints(island)
        for kind, c in (("spawn", spawn), ("campsite", campsite)):
            x, z = vm.centroid(c)
            decorations.append(Decoration(kind, float(x), float(z), c))
        if params.with_path:
            path, stones = lay_path(island, spawn, campsite)
            decorations.extend(stones)
    return IslandMap(vm, land, tuple(decorations), tuple(path), spawn, campsite)


# --- dog companion -------------------------------------------------------


@dataclass(frozen=True)
class DogParams:
    speed: float = 1.0  # metres per tick
    follow_radius: float = 12.0
    height: float = 0.5
    wander: float = 0.5
    margin: float = 1.0  # how far inside the view the returning dog aims
    wander_tries: int = 8


@dataclass(frozen=True)
class DogTick:
    tick: int
    x: float
    z: float
    mode: str  # "in_view" or "returning", decided at the start of the tick
    in_view: bool  # after moving


@dataclass(frozen=True)
class DogRun:
    trace: list[DogTick]
    in_view_fraction: float


def view_slice(pose: Pose, camera: CameraModel, height: float, margin: float = 0.0) -> np.ndarray | None:
    """Horizontal cross-section of the frustum at ``height``, shrunk by ``margin``.

    Returns a CCW trapezoid on the x/z plane, or None when the slice is empty.
    """
    tan_v, tan_h = camera.tan_half_v, camera.tan_half_h
    dy = abs(height - pose.position.y)
    d_near = max(camera.near, dy / tan_v) + margin
    d_far = camera.far - margin
    if d_near >= d_far or d_near * tan_h - margin <= 0:
        return None
    s, c = math.sin(pose.yaw), math.cos(pose.yaw)
    fwd = np.array([s, c])
    lat = np.array([c, -s])
    eye = np.array([pose.position.x, pose.position.z])
    corners = []
    for d, side in ((d_near, -1), (d_far, -1), (d_far, 1), (d_near, 1)):
        corners.append(eye + d * fwd + side * (d * tan_h - margin) * lat)
    poly = np.array(corners)
    # make CCW
    x, z = poly[:, 0], poly[:, 1]
    if (x * np.roll(z, -1) - np.roll(x, -1) * z).sum() < 0:
        poly = poly[::-1]
    return poly


def nearest_view_point(island: IslandMap, pose: Pose, camera: CameraModel, p,
                       height: float, margin: float) -> np.ndarray | None:
    """Closest point to ``p`` that is inside the (shrunk) view slice and on land."""
    trap = view_slice(pose, camera, height, margin)
    if trap is None:
        return None
    best, best_d = None, math.inf
    for c in island.land_cells():
        piece = island.voronoi.polygons[c]
        for i in range(len(trap)):
            a, b = trap[i], trap[(i + 1) % len(trap)]
            e = b - a
            # left of each CCW edge is inside
            piece = pg.clip_halfplane(piece, np.array([e[1], -e[0]]), float(e[1] * a[0] - e[0] * a[1]))
            if len(piece) < 3:
                break
        if len(piece) < 3:
            continue
        q = pg.closest_point(piece, p)
        d = float(np.hypot(*(q - p)))
        if d < best_d:
            best, best_d = q, d
    return best


def _segment_on_land(island: IslandMap, a: np.ndarray, b: np.ndarray) -> bool:
    total = float(np.hypot(*(b - a)))
    if total == 0.0:
        return island.on_land(a)
    covered = sum(pg.segment_inside_length(island.voronoi.polygons[c], a, b) for c in island.land_cells())
    return covered >= total - 1e-9


def _land_route(island: IslandMap, src: int, dst: int) -> list[int] | None:
    parent = {src: -1}
    queue = deque([src])
    while queue:
        i = queue.popleft()
        if i == dst:
            break
        for j in island.voronoi.adjacency[i]:
            if island.land[j] and j not in parent:
                parent[j] = i
                queue.append(j)
    if dst not in parent:
        return None
    route = [dst]
    while parent[route[-1]] != -1:
        route.append(parent[route[-1]])
    return route[::-1]


def _dog_visible(pose: Pose, camera: CameraModel, p, height: float) -> bool:
    return frustum_contains(pose, camera, Vec3(float(p[0]), height, float(p[1])))


def simulate_dog(island: IslandMap, player_trajectory: Sequence[Pose], camera: CameraModel,
                 params: DogParams | None = None, start=None, seed: int = 0) -> DogRun:
    """Per tick: wander inside the view when visible, otherwise head for the
    nearest visible land point, straight if the line stays on land and via
    shared cell edges otherwise.
    """
    params = params or DogParams()
    if not player_trajectory:
        raise ValueError("player trajectory must be non-empty")
    rng = stream(seed, "dog")
    if start is None:
        p0 = player_trajectory[0]
        f = p0.forward
        start = (p0.position.x - 2.0 * f.x, p0.position.z - 2.0 * f.z)
    pos = np.array(start, dtype=float)
    if not island.on_land(pos):
        cells = island.land_cells()
        if not cells:
            raise ValueError("island has no land")
        cent = np.array([island.voronoi.centroid(c) for c in cells])
        pos = cent[int(np.argmin(np.hypot(*(cent - pos).T)))].copy()
    cell = island.voronoi.locate(pos)
    if not island.land[cell]:
        cell = next(c for c in island.land_cells() if pg.contains(island.voronoi.polygons[c], pos))

    trace: list[DogTick] = []
    for t, pose in enumerate(player_trajectory):
        player = np.array([pose.position.x, pose.position.z])
        if _dog_visible(pose, camera, pos, params.height):
            mode = "in_view"
            here = float(np.hypot(*(pos - player)))
            inner = view_slice(pose, camera, params.height, params.margin)
            if inner is not None and not pg.contains(inner, pos):
                # visible but near the edge: drift inward so the next player step
                # does not push the dog straight back out
                target = nearest_view_point(island, pose, camera, pos, params.height, params.margin)
                if target is not None and _segment_on_land(island, pos, target):
                    pos = _step(pos, target, params.wander)
            else:
                for _ in range(params.wander_tries):
                    ang = rng.uniform(0.0, 2.0 * math.pi)
                    r = rng.uniform(0.0, params.wander)
                    cand = pos + r * np.array([math.cos(ang), math.sin(ang)])
                    dist = float(np.hypot(*(cand - player)))
                    if ((dist <= params.follow_radius or dist < here)
                            and (inner is None or pg.contains(inner, cand))
                            and _dog_visible(pose, camera, cand, params.height)
                            and _segment_on_land(island, pos, cand)):
                        pos = cand
                        break
        else:
            mode = "returning"
            target = nearest_view_point(island, pose, camera, pos, params.height, params.margin)
            if target is None:
                target = player
            if _segment_on_land(island, pos, target):
                pos = _step(pos, target, params.speed)
            else:
                goal_cell = island.voronoi.locate(target)
                if not island.land[goal_cell]:
                    goal_cell = next(c for c in island.land_cells()
                                     if pg.contains(island.voronoi.polygons[c], target))
                route = _land_route(island, cell, goal_cell)
                if route is None or len(route) < 2:
                    pos = _step(pos, target, params.speed)
                else:
                    a, b = island.voronoi.shared_edges[(min(route[0], route[1]), max(route[0], route[1]))]
                    gate = (np.array(a) + np.array(b)) / 2.0
                    pos = _step(pos, gate, params.speed)
                    if np.hypot(*(pos - gate)) < 1e-12:
                        cell = route[1]
        here_cell = island.voronoi.locate(pos)
        if island.land[here_cell]:
            cell = here_cell
        trace.append(DogTick(t, float(pos[0]), float(pos[1]), mode,
                             _dog_visible(pose, camera, pos, params.height)))
    frac = sum(1 for d in trace if d.mode == "in_view") / len(trace)
    return DogRun(trace, frac)


def _step(pos: np.ndarray, target: np.ndarray, speed: float) -> np.ndarray:
    delta = np.asarray(target, dtype=float) - pos
    dist = float(np.hypot(*delta))
    if dist <= speed:
        return np.asarray(target, dtype=float).copy()
    return pos + delta * (speed / dist)
