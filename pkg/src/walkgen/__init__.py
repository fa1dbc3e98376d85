"""Search-based level generation driven by what a walking player can see."""

from .geometry import Aabb, CameraModel, Pose, Rect, Vec3
from .template import LevelTemplate, MarkerConstraint, ObjectiveMarker, Surface, load_template
from .visibility import EvalParams, FitnessReport, evaluate_level

__version__ = "0.1.0"

__all__ = [
    "Aabb", "CameraModel", "EvalParams", "FitnessReport", "LevelTemplate", "MarkerConstraint",
    "ObjectiveMarker", "Pose", "Rect", "Surface", "Vec3", "evaluate_level", "load_template",
]
