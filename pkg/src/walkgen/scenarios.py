"""Ready-made level templates.

Both two-marker scenarios use a 20 x 20 m surface with the walker starting in
the bottom-left corner and finishing top-right. The "top" marker sits in the
upper-left quarter, the "bottom" marker in the lower-right quarter, where an
empty level shows it plainly during the first leg of the walk.
"""

from __future__ import annotations

from .geometry import Aabb, Vec3
from .template import LevelTemplate, MarkerConstraint, ObjectiveMarker, Surface

TOP_MARKER = Aabb.from_bounds((2.5, 0.0, 16.5), (3.5, 1.0, 17.5))
BOTTOM_MARKER = Aabb.from_bounds((13.5, 0.0, 4.5), (14.5, 1.0, 5.5))


def _base(markers: tuple[ObjectiveMarker, ...]) -> LevelTemplate:
    return LevelTemplate(Surface(20.0, 20.0), Vec3(1.0, 0.0, 1.0), Vec3(19.0, 0.0, 19.0), markers)


def both_markers_visible() -> LevelTemplate:
    return _base((
        ObjectiveMarker("top", TOP_MARKER, MarkerConstraint.MUST_SEE),
        ObjectiveMarker("bottom", BOTTOM_MARKER, MarkerConstraint.MUST_SEE),
    ))


def top_marker_only() -> LevelTemplate:
    return _base((
        ObjectiveMarker("top", TOP_MARKER, MarkerConstraint.MUST_SEE),
        ObjectiveMarker("bottom", BOTTOM_MARKER, MarkerConstraint.MUST_STAY_HIDDEN),
    ))


def empty_level() -> LevelTemplate:
    return _base(())


SCENARIOS = {
    "both-visible": both_markers_visible,
    "top-only": top_marker_only,
    "empty": empty_level,
}
