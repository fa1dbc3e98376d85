"""Level templates: a flat surface, start/end points and objective markers."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Any

from .geometry import Aabb, Vec3


class MarkerConstraint(enum.Enum):
    MUST_SEE = "must_see"
    MUST_STAY_HIDDEN = "must_stay_hidden"


@dataclass(frozen=True)
class ObjectiveMarker:
    id: str
    box: Aabb
    constraint: MarkerConstraint


@dataclass(frozen=True)
class Surface:
    x: float
    z: float


@dataclass(frozen=True)
class LevelTemplate:
    surface: Surface
    start: Vec3
    end: Vec3
    markers: tuple[ObjectiveMarker, ...] = ()
    eye_height: float = 1.6

    def marker_ids(self) -> list[str]:
        return [m.id for m in self.markers]


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


class TemplateParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class TemplateValidationError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(f"{v.code}: {v.message}" for v in violations))


def _on_surface(p: Vec3, s: Surface) -> bool:
    return 0.0 <= p.x <= s.x and 0.0 <= p.z <= s.z


def validate(template: LevelTemplate) -> list[Violation]:
    """Every invariant violation, in a fixed order. Empty list means valid."""
    out: list[Violation] = []
    s = template.surface
    if not (s.x > 0 and s.z > 0):
        out.append(Violation("nonpositive-surface", f"surface extents must be positive, got {s.x} x {s.z}"))
    if template.eye_height <= 0:
        out.append(Violation("nonpositive-eye-height", f"eye_height must be positive, got {template.eye_height}"))
    for name, p in (("start", template.start), ("end", template.end)):
        if p.y != 0.0:
            out.append(Violation(f"{name}-off-ground", f"{name} must lie at y=0, got y={p.y}"))
        if not _on_surface(p, s):
            out.append(Violation(f"{name}-outside-surface", f"{name} ({p.x}, {p.z}) is outside the surface"))
    if template.start == template.end:
        out.append(Violation("start-equals-end", "start and end coincide"))
    seen: set[str] = set()
    for m in template.markers:
        if m.id in seen:
            out.append(Violation("duplicate-marker-id", f"marker id {m.id!r} is used more than once"))
        seen.add(m.id)
        if m.box.volume <= 0:
            out.append(Violation("marker-empty-volume", f"marker {m.id!r} has zero volume"))
        b = m.box
        if b.min.x < 0 or b.min.z < 0 or b.max.x > s.x or b.max.z > s.z:
            out.append(Violation("marker-outside-surface", f"marker {m.id!r} extends past the surface"))
    return out


def require_valid(template: LevelTemplate) -> None:
    violations = validate(template)
    if violations:
        raise TemplateValidationError(violations)


_TOP_KEYS = {"surface", "start", "end", "eye_height", "markers"}
_REQUIRED_TOP = ("surface", "start", "end", "markers")
_MARKER_KEYS = {"id", "min", "max", "constraint"}


def _check_keys(obj: Any, allowed: set[str], required: tuple[str, ...], where: str) -> None:
    if not isinstance(obj, dict):
        raise TemplateParseError(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise TemplateParseError(f"unknown field(s) in {where}: {', '.join(unknown)}")
    for key in required:
        if key not in obj:
            raise TemplateParseError(f"missing field {key!r} in {where}")


def _numbers(value: Any, n: int, where: str) -> list[float]:
    if (not isinstance(value, list) or len(value) != n
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise TemplateParseError(f"{where} must be a list of {n} numbers")
    return [float(v) for v in value]


def template_from_dict(doc: Any) -> LevelTemplate:
    _check_keys(doc, _TOP_KEYS, _REQUIRED_TOP, "template")
    _check_keys(doc["surface"], {"x", "z"}, ("x", "z"), "surface")
    sx, sz = _numbers([doc["surface"]["x"], doc["surface"]["z"]], 2, "surface")
    sx0, sz0 = _numbers(doc["start"], 2, "start")
    ex0, ez0 = _numbers(doc["end"], 2, "end")
    eye = _numbers([doc.get("eye_height", 1.6)], 1, "eye_height")[0]
    if not isinstance(doc["markers"], list):
        raise TemplateParseError("markers must be a list")
    markers = []
    for i, m in enumerate(doc["markers"]):
        where = f"markers[{i}]"
        _check_keys(m, _MARKER_KEYS, ("id", "min", "max", "constraint"), where)
        if not isinstance(m["id"], str):
            raise TemplateParseError(f"{where}.id must be a string")
        try:
            constraint = MarkerConstraint(m["constraint"])
        except ValueError:
            raise TemplateParseError(f"{where}.constraint must be 'must_see' or 'must_stay_hidden'") from None
        try:
            box = Aabb.from_bounds(_numbers(m["min"], 3, f"{where}.min"), _numbers(m["max"], 3, f"{where}.max"))
        except ValueError as exc:
            if isinstance(exc, TemplateParseError):
                raise
            raise TemplateParseError(f"{where}: {exc}") from None
        markers.append(ObjectiveMarker(m["id"], box, constraint))
    return LevelTemplate(
        surface=Surface(sx, sz),
        start=Vec3(sx0, 0.0, sz0),
        end=Vec3(ex0, 0.0, ez0),
        markers=tuple(markers),
        eye_height=eye,
    )


def template_to_dict(t: LevelTemplate) -> dict[str, Any]:
    return {
        "surface": {"x": t.surface.x, "z": t.surface.z},
        "start": [t.start.x, t.start.z],
        "end": [t.end.x, t.end.z],
        "eye_height": t.eye_height,
        "markers": [
            {"id": m.id, "min": list(m.box.min), "max": list(m.box.max), "constraint": m.constraint.value}
            for m in t.markers
        ],
    }


def load_template(text: str, *, check: bool = True) -> LevelTemplate:
    """Parse a template document; raises TemplateParseError or TemplateValidationError."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TemplateParseError(exc.msg, exc.lineno, exc.colno) from None
    template = template_from_dict(doc)
    if check:
        require_valid(template)
    return template


def save_template(template: LevelTemplate) -> str:
    return json.dumps(template_to_dict(template), indent=2) + "\n"
