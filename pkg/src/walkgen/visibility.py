"""Agent walkthrough evaluation: what each objective marker shows, and when.

A marker counts as visible from a pose when at least one of its 8 box vertices
is inside the view frustum and the eye-to-vertex segment of such a vertex is not
blocked by any occluder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (Aabb, CameraModel, Pose, Rect, Vec3, box_vertices_array, boxes_to_array,
                       frustum_test, segments_occluded)
from .navgrid import WalkSample, astar, build_navgrid, path_polyline, polyline_resample
from .template import LevelTemplate, MarkerConstraint, ObjectiveMarker, require_valid


@dataclass(frozen=True)
class EvalParams:
    camera: CameraModel = field(default_factory=CameraModel)
    cell_size: float = 0.5
    agent_radius: float = 0.4
    sample_spacing: float = 0.25
    tau_see: float = 0.10
    tau_hide: float = 0.0
    # occluders starting at or above this height (tree canopies) do not block walking
    walk_clearance: float = 2.0


@dataclass(frozen=True, eq=False)
class VisibilityTrace:
    samples: list[WalkSample]
    visible: np.ndarray  # (samples, markers) bool
    marker_ids: tuple[str, ...] = ()
    path: tuple[tuple[int, int], ...] = ()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VisibilityTrace):
            return NotImplemented
        return (self.samples == other.samples and self.marker_ids == other.marker_ids
                and self.path == other.path and np.array_equal(self.visible, other.visible))


@dataclass(frozen=True)
class FitnessReport:
    path_found: bool
    per_marker_visible_fraction: tuple[float, ...]
    marker_met: tuple[bool, ...]
    constraints_met: int
    shaping: float
    fitness: float

    @property
    def all_met(self) -> bool:
        return self.path_found and self.constraints_met == len(self.marker_met)


def visibility_matrix(eyes: np.ndarray, yaws: np.ndarray, camera: CameraModel,
                      markers: Sequence[ObjectiveMarker], occluders: np.ndarray) -> np.ndarray:
    """``(S, K)`` visibility for eye positions ``(S, 3)`` against K markers.

    ``occluders`` is an ``(M, 2, 3)`` box array.
    """
    n_s, n_k = len(eyes), len(markers)
    if n_s == 0 or n_k == 0:
        return np.zeros((n_s, n_k), dtype=bool)
    verts = box_vertices_array(boxes_to_array([m.box for m in markers]))  # (K, 8, 3)
    rel = verts[None, :, :, :] - eyes[:, None, None, :]
    in_view = frustum_test(rel[..., 0], rel[..., 1], rel[..., 2],
                           yaws[:, None, None], camera)  # (S, K, 8)
    clear = in_view.copy()
    if occluders.shape[0] and in_view.any():
        s_idx, k_idx, v_idx = np.nonzero(in_view)
        blocked = segments_occluded(eyes[s_idx], verts[k_idx, v_idx], occluders)
        clear[s_idx[blocked], k_idx[blocked], v_idx[blocked]] = False
    return clear.any(axis=2)


def marker_visible_at(pose: Pose, camera: CameraModel, marker: ObjectiveMarker,
                      occluders: Sequence[Aabb]) -> bool:
    eye = np.array([tuple(pose.position)])
    yaw = np.array([pose.yaw])
    return bool(visibility_matrix(eye, yaw, camera, [marker], boxes_to_array(occluders))[0, 0])


def score(template: LevelTemplate, fractions: Sequence[float], params: EvalParams,
          path_found: bool = True) -> FitnessReport:
    """Constraint count plus a sub-unit shaping term that orders equal counts."""
    met = []
    shaping_terms = []
    for marker, frac in zip(template.markers, fractions):
        if marker.constraint is MarkerConstraint.MUST_SEE:
            met.append(frac >= params.tau_see)
            shaping_terms.append(frac)
        else:
            met.append(frac <= params.tau_hide)
            shaping_terms.append(1.0 - frac)
    fractions = tuple(float(f) for f in fractions)
    if not path_found:
        return FitnessReport(False, fractions, tuple(False for _ in met), 0, 0.0, 0.0)
    n_met = int(sum(met))
    shaping = float(np.mean(shaping_terms)) if shaping_terms else 1.0
    return FitnessReport(True, fractions, tuple(bool(m) for m in met), n_met, shaping, n_met + shaping)


def walkthrough(template: LevelTemplate, footprints: Sequence[Rect], params: EvalParams):
    """A* path and its resampled walk; ``None`` when start cannot reach end."""
    grid = build_navgrid(template, footprints, params.cell_size, params.agent_radius)
    if grid.infeasible:
        return grid, None, None
    path = astar(grid, grid.start_cell, grid.end_cell)
    if path is None:
        return grid, None, None
    return grid, path, polyline_resample(path_polyline(path, grid), params.sample_spacing)


def evaluate_level(template: LevelTemplate, occluders: Sequence[Aabb],
                   params: EvalParams | None = None, *, check: bool = True
                   ) -> tuple[FitnessReport, VisibilityTrace]:
    params = params or EvalParams()
    if check:
        require_valid(template)
    ids = tuple(template.marker_ids())
    footprints = [b.footprint() for b in occluders if b.min.y < params.walk_clearance]
    _, path, walk = walkthrough(template, footprints, params)
    if walk is None:
        empty = VisibilityTrace([], np.zeros((0, len(ids)), dtype=bool), ids)
        return score(template, [0.0] * len(ids), params, path_found=False), empty

    xz, yaw, arc = walk
    eyes = np.column_stack([xz[:, 0], np.full(len(xz), template.eye_height), xz[:, 1]])
    visible = visibility_matrix(eyes, yaw, params.camera, template.markers, boxes_to_array(occluders))
    fractions = visible.mean(axis=0) if len(ids) else np.zeros(0)
    samples = [WalkSample(Pose(Vec3(*map(float, e)), float(a)), float(s))
               for e, a, s in zip(eyes, yaw, arc)]
    trace = VisibilityTrace(samples, visible, ids, tuple(path))
    return score(template, fractions.tolist(), params), trace

