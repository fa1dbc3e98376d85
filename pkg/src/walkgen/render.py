"""Top-down SVG renders of levels and islands.

Output is plain text built in a fixed order with fixed number formatting, so
identical inputs give identical bytes. World z points up on the page.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .explorer import Lattice, PointState
from .geometry import Aabb
from .islandgen import IslandMap
from .template import LevelTemplate, MarkerConstraint
from .visibility import FitnessReport

SCALE = 24.0  # pixels per metre
PAD = 10.0

MET, UNMET = "#2ca02c", "#d62728"
OCCLUDER = "#8c8c8c"
BELIEF_COLORS = {
    PointState.UNOBSERVED: "#9e9e9e",
    PointState.VISIBLE: "#2ca02c",
    PointState.FRONTIER: "#f2c200",
    PointState.LAPSED: "#d81bd8",
}
WATER, LAND = "#4f8fd6", "#d8c38e"
GLYPHS = {
    "tree": ("circle", 0.6, "#2e7d32"),
    "rock": ("circle", 0.5, "#707070"),
    "lilypad": ("circle", 0.35, "#7cb342"),
    "path_stone": ("circle", 0.4, "#b0a48a"),
    "campsite": ("square", 1.2, "#e65100"),
    "spawn": ("square", 1.2, "#1a237e"),
}


def _n(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Canvas:
    def __init__(self, width: float, height: float):
        self.w, self.h = width, height
        self.parts: list[str] = []

    def x(self, x: float) -> float:
        return PAD + x * SCALE

    def y(self, z: float) -> float:
        return PAD + (self.h - z) * SCALE

    def add(self, s: str) -> None:
        self.parts.append(s)

    def rect(self, x0: float, z0: float, x1: float, z1: float, cls: str, fill: str,
             stroke: str = "none", extra: str = "") -> None:
        self.add(f'<rect class="{cls}" x="{_n(self.x(x0))}" y="{_n(self.y(z1))}" '
                 f'width="{_n((x1 - x0) * SCALE)}" height="{_n((z1 - z0) * SCALE)}" '
                 f'fill="{fill}" stroke="{stroke}"{extra}/>')

    def circle(self, x: float, z: float, r_px: float, cls: str, fill: str, stroke: str = "none") -> None:
        self.add(f'<circle class="{cls}" cx="{_n(self.x(x))}" cy="{_n(self.y(z))}" r="{_n(r_px)}" '
                 f'fill="{fill}" stroke="{stroke}"/>')

    def points(self, xz) -> str:
        return " ".join(f"{_n(self.x(x))},{_n(self.y(z))}" for x, z in xz)

    def svg(self) -> str:
        w, h = self.w * SCALE + 2 * PAD, self.h * SCALE + 2 * PAD
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(w)}" height="{_n(h)}" '
                f'viewBox="0 0 {_n(w)} {_n(h)}">')
        return "\n".join([head, *self.parts, "</svg>"]) + "\n"


def render_level(template: LevelTemplate, occluders: Sequence[Aabb] = (),
                 report: FitnessReport | None = None,
                 path_xz: Sequence[tuple[float, float]] | None = None,
                 belief: tuple[Lattice, np.ndarray] | None = None,
                 agent_xz: tuple[float, float] | None = None) -> str:
    """Surface, occluders, walk path, markers, belief points and endpoints.

    Markers are filled green or red when a report is given and outlined only
    otherwise.
    """
    s = template.surface
    c = _Canvas(s.x, s.z)
    c.rect(0.0, 0.0, s.x, s.z, "surface", "#f5f5f0", "#333333")
    for box in occluders:
        c.rect(box.min.x, box.min.z, box.max.x, box.max.z, "occluder", OCCLUDER, "#555555",
               f' fill-opacity="{0.5 if box.min.y > template.eye_height else 0.9}"')
    for i, m in enumerate(template.markers):
        fill = "none" if report is None else (MET if report.marker_met[i] else UNMET)
        dash = ' stroke-dasharray="4 2"' if m.constraint is MarkerConstraint.MUST_STAY_HIDDEN else ""
        c.rect(m.box.min.x, m.box.min.z, m.box.max.x, m.box.max.z, "marker", fill, "#000000",
               f' data-id="{m.id}"{dash}')
    if path_xz is not None and len(path_xz) > 1:
        c.add(f'<polyline class="path" points="{c.points(path_xz)}" fill="none" '
              f'stroke="#1f77b4" stroke-width="2"/>')
    if belief is not None:
        lattice, states = belief
        for i in range(len(lattice)):
            x, z = lattice.position(i)
            c.circle(x, z, 3.0, f"belief {PointState(int(states[i])).letter}",
                     BELIEF_COLORS[PointState(int(states[i]))])
    if agent_xz is not None:
        c.circle(agent_xz[0], agent_xz[1], 6.0, "agent", "#000000")
    c.circle(template.start.x, template.start.z, 6.0, "start", "#1a237e")
    c.circle(template.end.x, template.end.z, 6.0, "end", "#e65100")
    return c.svg()


def render_island(island: IslandMap, dog_xz: Sequence[tuple[float, float]] | None = None,
                  player_xz: Sequence[tuple[float, float]] | None = None) -> str:
    vm = island.voronoi
    c = _Canvas(*vm.extent)
    for i, poly in enumerate(vm.polygons):
        fill = LAND if island.land[i] else WATER
        c.add(f'<polygon class="cell {"land" if island.land[i] else "water"}" '
              f'points="{c.points(poly)}" fill="{fill}" stroke="#ffffff" stroke-width="0.5"/>')
    if len(island.path_cells) > 1:
        cent = [vm.centroid(i) for i in island.path_cells]
        c.add(f'<polyline class="path" points="{c.points(cent)}" fill="none" '
              f'stroke="#8d6e63" stroke-width="3"/>')
    for d in island.decorations:
        if d.kind == "fence_segment" and d.segment is not None:
            (ax, az), (bx, bz) = d.segment
            c.add(f'<line class="fence_segment" x1="{_n(c.x(ax))}" y1="{_n(c.y(az))}" '
                  f'x2="{_n(c.x(bx))}" y2="{_n(c.y(bz))}" stroke="#5d4037" stroke-width="2"/>')
            continue
        shape, size, color = GLYPHS[d.kind]
        if shape == "circle":
            c.circle(d.x, d.z, size * SCALE / 4, d.kind, color)
        else:
            half = size / 2
            c.rect(d.x - half, d.z - half, d.x + half, d.z + half, d.kind, color)
    for cls, pts, color in (("player", player_xz, "#000000"), ("dog", dog_xz, "#c62828")):
        if pts is not None and len(pts) > 1:
            c.add(f'<polyline class="{cls}" points="{c.points(pts)}" fill="none" '
                  f'stroke="{color}" stroke-width="1.5"/>')
    return c.svg()
