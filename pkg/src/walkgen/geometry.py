"""3D primitives: vectors, axis-aligned boxes, rays and a pinhole frustum.

Coordinates are metres with y up. A yaw of 0 looks down +z and yaw grows
counter-clockwise when seen from above, so the forward vector of a pose is
``(sin yaw, 0, cos yaw)``. Pitch is always 0.

The array helpers (``frustum_mask``, ``segments_occluded``) are the hot path
for level evaluation; the scalar functions are thin wrappers over them so both
routes share the same arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

SEGMENT_EPS = 1e-4


@dataclass(frozen=True, slots=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite vector component in {self!r}")

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y
        yield self.z

    def __add__(self, other: Vec3) -> Vec3:
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Vec3) -> Vec3:
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, k: float) -> Vec3:
        return Vec3(self.x * k, self.y * k, self.z * k)

    __rmul__ = __mul__

    def dot(self, other: Vec3) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True, slots=True)
class Rect:
    """Ground rectangle on the x/z plane."""

    x0: float
    z0: float
    x1: float
    z1: float

    def __post_init__(self) -> None:
        if self.x0 > self.x1 or self.z0 > self.z1:
            raise ValueError(f"inverted rectangle {self!r}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def depth(self) -> float:
        return self.z1 - self.z0

    def overlaps(self, other: Rect) -> bool:
        """Open-interior overlap: touching edges do not count."""
        return (self.x0 < other.x1 and other.x0 < self.x1
                and self.z0 < other.z1 and other.z0 < self.z1)

    def contains_rect(self, other: Rect) -> bool:
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.z0 <= other.z0 and other.z1 <= self.z1)


@dataclass(frozen=True, slots=True)
class Aabb:
    min: Vec3
    max: Vec3

    def __post_init__(self) -> None:
        if self.min.x > self.max.x or self.min.y > self.max.y or self.min.z > self.max.z:
            raise ValueError(f"box min exceeds max: {self.min} > {self.max}")

    @classmethod
    def from_bounds(cls, lo: Sequence[float], hi: Sequence[float]) -> Aabb:
        return cls(Vec3(*map(float, lo)), Vec3(*map(float, hi)))

    @property
    def volume(self) -> float:
        return ((self.max.x - self.min.x) * (self.max.y - self.min.y)
                * (self.max.z - self.min.z))

    @property
    def center(self) -> Vec3:
        return (self.min + self.max) * 0.5

    def footprint(self) -> Rect:
        return Rect(self.min.x, self.min.z, self.max.x, self.max.z)

    def contains(self, p: Vec3) -> bool:
        return (self.min.x <= p.x <= self.max.x and self.min.y <= p.y <= self.max.y
                and self.min.z <= p.z <= self.max.z)


def _default_vfov() -> float:
    return math.radians(60.0)


@dataclass(frozen=True, slots=True)
class CameraModel:
    vertical_fov: float = field(default_factory=_default_vfov)
    aspect: float = 16.0 / 9.0
    near: float = 0.1
    far: float = 200.0

    def __post_init__(self) -> None:
        if not 0.0 < self.vertical_fov < math.pi:
            raise ValueError("vertical_fov must lie in (0, pi)")
        if self.aspect <= 0.0:
            raise ValueError("aspect must be positive")
        if not 0.0 < self.near < self.far:
            raise ValueError("need 0 < near < far")

    @property
    def tan_half_v(self) -> float:
        return math.tan(self.vertical_fov / 2.0)

    @property
    def tan_half_h(self) -> float:
        return self.aspect * self.tan_half_v


def normalize_yaw(yaw: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    wrapped = math.fmod(yaw + math.pi, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    out = wrapped - math.pi
    # fmod rounding can land exactly on +pi
    return -math.pi if out >= math.pi else out


@dataclass(frozen=True, slots=True)
class Pose:
    position: Vec3
    yaw: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "yaw", normalize_yaw(float(self.yaw)))

    @property
    def forward(self) -> Vec3:
        return Vec3(math.sin(self.yaw), 0.0, math.cos(self.yaw))


def yaw_towards(dx: float, dz: float) -> float:
    return math.atan2(dx, dz)


def ray_aabb(origin: Vec3, direction: Vec3, box: Aabb) -> float | None:
    """Slab test. Smallest t >= 0 with ``origin + t*direction`` in the closed box."""
    if direction.x == 0.0 and direction.y == 0.0 and direction.z == 0.0:
        raise ValueError("ray direction must be nonzero")
    t_enter, t_exit = 0.0, math.inf
    for o, d, lo, hi in zip(origin, direction, box.min, box.max):
        if d == 0.0:
            if o < lo or o > hi:
                return None
            continue
        ta = (lo - o) / d
        tb = (hi - o) / d
        if ta > tb:
            ta, tb = tb, ta
        if ta > t_enter:
            t_enter = ta
        if tb < t_exit:
            t_exit = tb
        if t_enter > t_exit:
            return None
    return t_enter


def aabb_vertices(box: Aabb) -> list[Vec3]:
    """The 8 corners, lexicographically ordered by (x, y, z)."""
    return [Vec3(x, y, z) for x, y, z in itertools.product(
        (box.min.x, box.max.x), (box.min.y, box.max.y), (box.min.z, box.max.z))]


def boxes_to_array(boxes: Sequence[Aabb]) -> np.ndarray:
    """Pack boxes into an ``(M, 2, 3)`` array of (min, max) rows."""
    if not boxes:
        return np.zeros((0, 2, 3))
    return np.array([[tuple(b.min), tuple(b.max)] for b in boxes], dtype=float)


def box_vertices_array(boxes: np.ndarray) -> np.ndarray:
    """``(M, 2, 3)`` boxes -> ``(M, 8, 3)`` vertices in ``aabb_vertices`` order."""
    sel = np.array(list(itertools.product((0, 1), repeat=3)))  # (8, 3) of min/max picks
    return np.stack([boxes[:, sel[:, axis], axis] for axis in range(3)], axis=-1)


def frustum_test(rel_x, rel_y, rel_z, yaw, camera: CameraModel):
    """Inclusive frustum membership for eye-relative coordinates.

    All array arguments broadcast against each other.
    """
    s = np.sin(yaw)
    c = np.cos(yaw)
    depth = rel_x * s + rel_z * c
    lateral = rel_x * c - rel_z * s
    return ((depth >= camera.near) & (depth <= camera.far)
            & (np.abs(lateral) <= depth * camera.tan_half_h)
            & (np.abs(rel_y) <= depth * camera.tan_half_v))


def frustum_mask(pose: Pose, camera: CameraModel, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    eye = pose.position
    return frustum_test(points[:, 0] - eye.x, points[:, 1] - eye.y, points[:, 2] - eye.z,
                        pose.yaw, camera)


def frustum_contains(pose: Pose, camera: CameraModel, point: Vec3) -> bool:
    return bool(frustum_mask(pose, camera, np.array([tuple(point)]))[0])


def segments_occluded(p: np.ndarray, q: np.ndarray, boxes: np.ndarray,
                      eps: float = SEGMENT_EPS) -> np.ndarray:
    """Row-wise occlusion test of segments ``p[i] -> q[i]`` against ``(M, 2, 3)`` boxes.

    A segment is occluded when some box meets it at a parameter strictly inside
    ``(eps, 1 - eps)``. Endpoints are put in lexicographic order first so the
    result is bit-identical under swapping p and q.
    """
    p = np.asarray(p, dtype=float).reshape(-1, 3)
    q = np.asarray(q, dtype=float).reshape(-1, 3)
    n = p.shape[0]
    if n == 0 or boxes.shape[0] == 0:
        return np.zeros(n, dtype=bool)

    diff = q - p
    nonzero = diff != 0.0
    first = np.argmax(nonzero, axis=1)
    lead = diff[np.arange(n), first]
    swap = lead < 0.0
    a = np.where(swap[:, None], q, p)
    d = np.where(swap[:, None], -diff, diff)

    lo = boxes[None, :, 0, :]
    hi = boxes[None, :, 1, :]
    a3 = a[:, None, :]
    d3 = d[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ta = (lo - a3) / d3
        tb = (hi - a3) / d3
    t_lo = np.minimum(ta, tb)
    t_hi = np.maximum(ta, tb)
    flat = d3 == 0.0
    in_slab = (a3 >= lo) & (a3 <= hi)
    t_lo = np.where(flat, np.where(in_slab, -np.inf, np.inf), t_lo)
    t_hi = np.where(flat, np.where(in_slab, np.inf, -np.inf), t_hi)
    enter = t_lo.max(axis=2)
    leave = t_hi.min(axis=2)
    hit = (enter <= leave) & (enter < 1.0 - eps) & (leave > eps)
    return hit.any(axis=1)


def segment_occluded(p: Vec3, q: Vec3, occluders: Sequence[Aabb]) -> bool:
    return bool(segments_occluded(np.array([tuple(p)]), np.array([tuple(q)]),
                                  boxes_to_array(occluders))[0])
