"""Walkability grid, deterministic A* and arc-length walk sampling.

Cells are addressed ``(row, col)`` where row indexes z and col indexes x.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Pose, Rect, Vec3
from .template import LevelTemplate

Cell = tuple[int, int]


@dataclass(frozen=True, eq=False)
class NavGrid:
    cell_size: float
    width: int
    height: int
    blocked: np.ndarray  # (height, width) bool
    start_cell: Cell
    end_cell: Cell
    infeasible: bool
    origin: tuple[float, float] = (0.0, 0.0)

    def cell_of(self, x: float, z: float) -> Cell:
        col = int(math.floor((x - self.origin[0]) / self.cell_size))
        row = int(math.floor((z - self.origin[1]) / self.cell_size))
        return (min(max(row, 0), self.height - 1), min(max(col, 0), self.width - 1))

    def center(self, cell: Cell) -> tuple[float, float]:
        row, col = cell
        return (self.origin[0] + (col + 0.5) * self.cell_size,
                self.origin[1] + (row + 0.5) * self.cell_size)

    def is_blocked(self, cell: Cell) -> bool:
        return bool(self.blocked[cell])

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width


def blocked_mask(width: int, height: int, cell_size: float, footprints: Sequence[Rect],
                 agent_radius: float, origin: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    xs = origin[0] + np.arange(width) * cell_size
    zs = origin[1] + np.arange(height) * cell_size
    blocked = np.zeros((height, width), dtype=bool)
    for fp in footprints:
        cols = (xs - agent_radius < fp.x1) & (xs + cell_size + agent_radius > fp.x0)
        rows = (zs - agent_radius < fp.z1) & (zs + cell_size + agent_radius > fp.z0)
        blocked |= np.outer(rows, cols)
    return blocked


def build_navgrid(template: LevelTemplate, occluder_footprints: Sequence[Rect],
                  cell_size: float = 0.5, agent_radius: float = 0.4) -> NavGrid:
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    if agent_radius < 0:
        raise ValueError("agent_radius must be non-negative")
    sx, sz = template.surface.x, template.surface.z
    if cell_size > sx or cell_size > sz:
        raise ValueError(f"cell_size {cell_size} exceeds the surface {sx} x {sz}")
    width = math.ceil(sx / cell_size - 1e-9)
    height = math.ceil(sz / cell_size - 1e-9)
    blocked = blocked_mask(width, height, cell_size, occluder_footprints, agent_radius)
    grid = NavGrid(cell_size, width, height, blocked, (0, 0), (0, 0), False)
    start = grid.cell_of(template.start.x, template.start.z)
    end = grid.cell_of(template.end.x, template.end.z)
    infeasible = bool(blocked[start] or blocked[end])
    return NavGrid(cell_size, width, height, blocked, start, end, infeasible)


def astar(grid: NavGrid, start: Cell, goal: Cell) -> list[Cell] | None:
    """4-connected unit-cost A* with a Manhattan heuristic.

    Open-list ties break on (f, h, row, col), which fixes the returned path
    among all shortest ones.
    """
    w, h = grid.width, grid.height
    blocked = grid.blocked.ravel().tolist()
    s = start[0] * w + start[1]
    g_idx = goal[0] * w + goal[1]
    if blocked[s] or blocked[g_idx]:
        return None
    gr, gc = goal
    inf = math.inf
    g = [inf] * (w * h)
    parent = [-1] * (w * h)
    closed = [False] * (w * h)
    g[s] = 0
    h0 = abs(start[0] - gr) + abs(start[1] - gc)
    heap = [(h0, h0, start[0], start[1])]
    while heap:
        _, _, r, c = heapq.heappop(heap)
        i = r * w + c
        if closed[i]:
            continue
        if i == g_idx:
            path = []
            while i != -1:
                path.append((i // w, i % w))
                i = parent[i]
            return path[::-1]
        closed[i] = True
        ng = g[i] + 1
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= nr < h and 0 <= nc < w:
                j = nr * w + nc
                if not blocked[j] and not closed[j] and ng < g[j]:
                    g[j] = ng
                    parent[j] = i
                    hj = abs(nr - gr) + abs(nc - gc)
                    heapq.heappush(heap, (ng + hj, hj, nr, nc))
    return None


@dataclass(frozen=True)
class WalkSample:
    pose: Pose
    arc_length: float


def polyline_resample(points: np.ndarray, spacing: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Resample a 2D (x, z) polyline every ``spacing`` metres of arc.

    Returns ``(xz, yaw, arc)``. Each yaw faces the next sample; the last sample
    keeps the previous yaw. The final point is always included.
    """
    if spacing <= 0:
        raise ValueError("sample_spacing must be positive")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("path must be non-empty")
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    pts = pts[keep]
    if len(pts) == 1:
        return pts.copy(), np.zeros(1), np.zeros(1)

    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1]
    n = int(math.floor(total / spacing + 1e-9))
    arcs = np.arange(n + 1) * spacing
    arcs = arcs[arcs <= total + 1e-12]
    if total - arcs[-1] > 1e-9:
        arcs = np.append(arcs, total)
    else:
        arcs[-1] = total
    idx = np.clip(np.searchsorted(cum, arcs, side="right") - 1, 0, len(seg) - 1)
    t = (arcs - cum[idx]) / seg_len[idx]
    xz = pts[idx] + t[:, None] * seg[idx]

    yaw = np.zeros(len(xz))
    if len(xz) > 1:
        step = np.diff(xz, axis=0)
        yaw[:-1] = np.arctan2(step[:, 0], step[:, 1])
        yaw[-1] = yaw[-2]
    yaw[yaw >= math.pi] -= 2.0 * math.pi
    return xz, yaw, arcs


def path_polyline(path: Sequence[Cell], grid: NavGrid) -> np.ndarray:
    return np.array([grid.center(c) for c in path], dtype=float)


def sample_walk(path: Sequence[Cell], grid: NavGrid, eye_height: float,
                sample_spacing: float = 0.25) -> list[WalkSample]:
    if not path:
        raise ValueError("path must be non-empty")
    xz, yaw, arc = polyline_resample(path_polyline(path, grid), sample_spacing)
    return [WalkSample(Pose(Vec3(float(x), eye_height, float(z)), float(a)), float(s))
            for (x, z), a, s in zip(xz, yaw, arc)]
