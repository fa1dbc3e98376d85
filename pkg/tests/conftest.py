import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from walkgen.geometry import Aabb, Vec3  # noqa: E402
from walkgen.template import LevelTemplate, MarkerConstraint, ObjectiveMarker, Surface  # noqa: E402


def make_template(markers=(), size=(20.0, 20.0), start=(1.0, 1.0), end=(19.0, 19.0)) -> LevelTemplate:
    ms = tuple(ObjectiveMarker(mid, Aabb.from_bounds(lo, hi), MarkerConstraint(c)) for mid, lo, hi, c in markers)
    return LevelTemplate(Surface(*size), Vec3(start[0], 0.0, start[1]), Vec3(end[0], 0.0, end[1]), ms)


@pytest.fixture
def template_factory():
    return make_template


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
