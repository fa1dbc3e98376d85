"""Curious exploration agent driven only by what it can see.

A lattice of probe points covers the level. Each observation classifies every
point as currently visible (V), frontier (F: believed empty, not visible, next
to a visible point), lapsed (L: a former frontier now neither visible nor next
to a visible point) or U for everything else. The agent plans on the graph of
lattice edges it believes walkable, heads for the nearest unvisited frontier
(falling back to lapsed points) and learns from failed steps.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (Aabb, CameraModel, Pose, Vec3, boxes_to_array, frustum_mask, normalize_yaw,
                       segments_occluded)
from .navgrid import NavGrid, build_navgrid
from .template import LevelTemplate, require_valid

SCAN_STEPS = 8


class PointState(enum.IntEnum):
    UNOBSERVED = 0
    VISIBLE = 1
    FRONTIER = 2
    LAPSED = 3

    @property
    def letter(self) -> str:
        return "UVFL"[self]


@dataclass(frozen=True, eq=False)
class Lattice:
    xs: np.ndarray
    zs: np.ndarray
    eye_height: float

    @property
    def nx(self) -> int:
        return len(self.xs)

    @property
    def nz(self) -> int:
        return len(self.zs)

    def __len__(self) -> int:
        return self.nx * self.nz

    @property
    def ground(self) -> np.ndarray:
        """``(N, 2)`` x/z positions in row-major (z-major) order."""
        gx, gz = np.meshgrid(self.xs, self.zs)
        return np.column_stack([gx.ravel(), gz.ravel()])

    @property
    def probes(self) -> np.ndarray:
        g = self.ground
        return np.column_stack([g[:, 0], np.full(len(g), self.eye_height), g[:, 1]])

    def position(self, i: int) -> tuple[float, float]:
        return float(self.xs[i % self.nx]), float(self.zs[i // self.nx])

    def neighbors(self, i: int) -> list[int]:
        r, c = divmod(i, self.nx)
        out = []
        if r > 0:
            out.append(i - self.nx)
        if c > 0:
            out.append(i - 1)
        if c < self.nx - 1:
            out.append(i + 1)
        if r < self.nz - 1:
            out.append(i + self.nx)
        return out

    def nearest(self, x: float, z: float) -> int:
        c = int(np.argmin(np.abs(self.xs - x)))
        r = int(np.argmin(np.abs(self.zs - z)))
        return r * self.nx + c


def overlay_grid(template: LevelTemplate, point_spacing: float) -> Lattice:
    """Regular lattice whose outermost points sit exactly on the surface corners."""
    if point_spacing <= 0:
        raise ValueError("point_spacing must be positive")
    sx, sz = template.surface.x, template.surface.z
    if point_spacing > sx or point_spacing > sz:
        raise ValueError(f"point_spacing {point_spacing} exceeds the surface {sx} x {sz}")
    nx = math.ceil(sx / point_spacing - 1e-9) + 1
    nz = math.ceil(sz / point_spacing - 1e-9) + 1
    return Lattice(np.linspace(0.0, sx, nx), np.linspace(0.0, sz, nz), template.eye_height)


def _edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


class GroundTruth:
    """True walkability of lattice points and lattice edges, from a NavGrid."""

    def __init__(self, lattice: Lattice, grid: NavGrid):
        self.lattice = lattice
        self.grid = grid
        self.point_blocked = np.array([grid.is_blocked(grid.cell_of(x, z)) for x, z in lattice.ground])

    def edge_ok(self, i: int, j: int) -> bool:
        if self.point_blocked[i] or self.point_blocked[j]:
            return False
        (x0, z0), (x1, z1) = self.lattice.position(i), self.lattice.position(j)
        n = max(2, int(math.ceil(math.hypot(x1 - x0, z1 - z0) / (self.grid.cell_size / 2))) + 1)
        for t in np.linspace(0.0, 1.0, n):
            if self.grid.is_blocked(self.grid.cell_of(x0 + t * (x1 - x0), z0 + t * (z1 - z0))):
                return False
        return True

    def reachable(self, start: int) -> np.ndarray:
        """Flood fill over truly walkable lattice edges."""
        seen = np.zeros(len(self.lattice), dtype=bool)
        if self.point_blocked[start]:
            return seen
        seen[start] = True
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j in self.lattice.neighbors(i):
                if not seen[j] and self.edge_ok(i, j):
                    seen[j] = True
                    queue.append(j)
        return seen


@dataclass(eq=False)
class BeliefState:
    lattice: Lattice
    states: np.ndarray
    believed_empty: np.ndarray
    believed_blocked: np.ndarray
    seen: np.ndarray
    was_frontier: np.ndarray
    visit_count: np.ndarray
    failed_edges: set[tuple[int, int]] = field(default_factory=set)

    @classmethod
    def empty(cls, lattice: Lattice) -> BeliefState:
        n = len(lattice)
        return cls(lattice, np.zeros(n, dtype=np.int8), np.zeros(n, dtype=bool),
                   np.zeros(n, dtype=bool), np.zeros(n, dtype=bool), np.zeros(n, dtype=bool),
                   np.zeros(n, dtype=np.int64))

    def edge_believed(self, i: int, j: int) -> bool:
        return (bool(self.believed_empty[i] and self.believed_empty[j]
                     and self.seen[i] and self.seen[j])
                and _edge(i, j) not in self.failed_edges)

    def believed_edges(self) -> set[tuple[int, int]]:
        out = set()
        for i in range(len(self.lattice)):
            for j in self.lattice.neighbors(i):
                if i < j and self.edge_believed(i, j):
                    out.add((i, j))
        return out

    def occupy(self, i: int) -> None:
        """Standing on a point proves it walkable."""
        self.visit_count[i] += 1
        self.seen[i] = True
        self.believed_empty[i] = True
        self.believed_blocked[i] = False

    def fail_edge(self, i: int, j: int) -> None:
        self.failed_edges.add(_edge(i, j))


def _adjacent_to(mask: np.ndarray, lattice: Lattice) -> np.ndarray:
    grid = mask.reshape(lattice.nz, lattice.nx)
    near = np.zeros_like(grid)
    near[1:, :] |= grid[:-1, :]
    near[:-1, :] |= grid[1:, :]
    near[:, 1:] |= grid[:, :-1]
    near[:, :-1] |= grid[:, 1:]
    return near.ravel()


def observe(pose: Pose, camera: CameraModel, belief: BeliefState, occluders: Sequence[Aabb] | np.ndarray,
            true_grid: NavGrid | GroundTruth) -> BeliefState:
    """Update ``belief`` in place from one look along ``pose``; returns it."""
    lattice = belief.lattice
    truth = true_grid if isinstance(true_grid, GroundTruth) else GroundTruth(lattice, true_grid)
    boxes = occluders if isinstance(occluders, np.ndarray) else boxes_to_array(occluders)
    probes = lattice.probes
    in_view = frustum_mask(pose, camera, probes)
    visible = in_view.copy()
    idx = np.nonzero(in_view)[0]
    if len(idx) and boxes.shape[0]:
        eye = np.tile(np.array(tuple(pose.position)), (len(idx), 1))
        visible[idx[segments_occluded(eye, probes[idx], boxes)]] = False

    blocked_seen = visible & truth.point_blocked
    belief.believed_blocked |= blocked_seen
    now_visible = visible & ~truth.point_blocked
    belief.believed_empty |= now_visible
    belief.seen |= visible

    near = _adjacent_to(now_visible, lattice)
    frontier = belief.believed_empty & ~now_visible & near
    lapsed = belief.believed_empty & ~now_visible & ~near & belief.was_frontier
    states = np.full(len(lattice), PointState.UNOBSERVED, dtype=np.int8)
    states[now_visible] = PointState.VISIBLE
    states[frontier] = PointState.FRONTIER
    states[lapsed] = PointState.LAPSED
    belief.states = states
    belief.was_frontier |= frontier
    return belief


def belief_violations(belief: BeliefState, previous_was_frontier: np.ndarray | None = None) -> list[str]:
    """Breaches of the point-state rules in the current belief."""
    out = []
    s = belief.states
    visible = s == PointState.VISIBLE
    near = _adjacent_to(visible, belief.lattice)
    for i in np.nonzero(s == PointState.FRONTIER)[0]:
        if not near[i]:
            out.append(f"frontier point {i} is not next to a visible point")
        if not belief.believed_empty[i]:
            out.append(f"frontier point {i} is not believed empty")
    earlier = belief.was_frontier if previous_was_frontier is None else previous_was_frontier
    for i in np.nonzero(s == PointState.LAPSED)[0]:
        if not earlier[i]:
            out.append(f"lapsed point {i} was never a frontier")
        if near[i]:
            out.append(f"lapsed point {i} is next to a visible point")
    for i in np.nonzero(visible & ~belief.believed_empty)[0]:
        out.append(f"visible point {i} is not believed empty")
    return out


def _bfs(belief: BeliefState, start: int) -> tuple[np.ndarray, np.ndarray]:
    n = len(belief.lattice)
    dist = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    dist[start] = 0
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j in belief.lattice.neighbors(i):
            if dist[j] < 0 and belief.edge_believed(i, j):
                dist[j] = dist[i] + 1
                parent[j] = i
                queue.append(j)
    return dist, parent


def choose_target(belief: BeliefState, agent_point: int) -> int | None:
    """Nearest unvisited frontier on the believed graph, else nearest unvisited lapsed point.

    Distance ties go to the smaller lattice index.
    """
    dist, _ = _bfs(belief, agent_point)
    for state in (PointState.FRONTIER, PointState.LAPSED):
        cand = np.nonzero((belief.states == state) & (dist >= 0) & (belief.visit_count == 0))[0]
        cand = cand[cand != agent_point]
        if len(cand):
            return int(cand[np.lexsort((cand, dist[cand]))[0]])
    return None


def plan(belief: BeliefState, start: int, goal: int) -> list[int] | None:
    dist, parent = _bfs(belief, start)
    if dist[goal] < 0:
        return None
    path = [goal]
    while path[-1] != start:
        path.append(int(parent[path[-1]]))
    return path[::-1]


@dataclass(frozen=True)
class ExplorerParams:
    point_spacing: float = 1.0
    budget: int | None = None  # ticks; None means 10x the point count
    camera: CameraModel = field(default_factory=CameraModel)
    cell_size: float = 0.25
    agent_radius: float = 0.0
    walk_clearance: float = 2.0


@dataclass(frozen=True)
class ExplorationReport:
    ticks_used: int
    points_observed_fraction: float
    reachable_observed_fraction: float
    stuck_events: int
    termination: str
    invariant_violations: int = 0


@dataclass(frozen=True)
class TrajectoryStep:
    tick: int
    x: float
    z: float
    yaw: float


@dataclass(frozen=True, eq=False)
class ExplorationRun:
    report: ExplorationReport
    trajectory: list[TrajectoryStep]
    snapshots: list[np.ndarray]
    lattice: Lattice
    belief: BeliefState
    reachable: np.ndarray
    coverage: list[float]
    violations: list[str]


def run_exploration(template: LevelTemplate, occluders: Sequence[Aabb],
                    params: ExplorerParams | None = None) -> ExplorationRun:
    params = params or ExplorerParams()
    require_valid(template)
    lattice = overlay_grid(template, params.point_spacing)
    footprints = [b.footprint() for b in occluders if b.min.y < params.walk_clearance]
    grid = build_navgrid(template, footprints, params.cell_size, params.agent_radius)
    truth = GroundTruth(lattice, grid)
    boxes = boxes_to_array(occluders)
    agent = lattice.nearest(template.start.x, template.start.z)
    if truth.point_blocked[agent]:
        raise ValueError("start point is blocked")
    budget = 10 * len(lattice) if params.budget is None else params.budget
    camera = params.camera

    belief = BeliefState.empty(lattice)
    belief.occupy(agent)
    yaw = 0.0
    violations: list[str] = []

    def look(yaw_now: float) -> None:
        before = belief.was_frontier.copy()
        x, z = lattice.position(agent)
        observe(Pose(Vec3(x, template.eye_height, z), yaw_now), camera, belief, boxes, truth)
        violations.extend(belief_violations(belief, before))

    def scan() -> None:
        for k in range(1, SCAN_STEPS + 1):
            look(yaw + k * 2.0 * math.pi / SCAN_STEPS)

    scan()
    trajectory = [TrajectoryStep(0, *lattice.position(agent), yaw)]
    snapshots = [belief.states.copy()]
    coverage = [float(belief.seen.mean())]
    ticks = stuck = 0
    target = None
    while True:
        # keep the current target until it is reached or cut off, so the agent
        # does not dither between frontiers that flicker as it turns
        route = plan(belief, agent, target) if target is not None else None
        if route is None or belief.visit_count[target] > 0:
            target = choose_target(belief, agent)
            route = plan(belief, agent, target) if target is not None else None
        if target is None:
            termination = "frontier_exhausted"
            break
        if ticks >= budget:
            termination = "budget_exhausted"
            break
        step = route[1]
        ticks += 1
        if truth.edge_ok(agent, step):
            (x0, z0), (x1, z1) = lattice.position(agent), lattice.position(step)
            yaw = math.atan2(x1 - x0, z1 - z0)
            agent = step
            belief.occupy(agent)
            look(yaw)
        else:
            belief.fail_edge(agent, step)
            stuck += 1
            scan()
        trajectory.append(TrajectoryStep(ticks, *lattice.position(agent), normalize_yaw(yaw)))
        snapshots.append(belief.states.copy())
        coverage.append(float(belief.seen.mean()))

    reachable = truth.reachable(lattice.nearest(template.start.x, template.start.z))
    report = ExplorationReport(
        ticks_used=ticks,
        points_observed_fraction=float(belief.seen.mean()),
        reachable_observed_fraction=float((belief.seen & reachable).sum() / max(1, reachable.sum())),
        stuck_events=stuck,
        termination=termination,
        invariant_violations=len(violations),
    )
    return ExplorationRun(report, trajectory, snapshots, lattice, belief, reachable, coverage, violations)
