"""File formats: genomes, model libraries, reports, islands, CSV exports and
run configuration overrides.

JSON floats are written with ``repr`` (the json default), so a value read back
is bit-identical to the one written.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .evolve.config import AestheticConfig, EvolutionConfig
from .evolve.genome import (Block, BlockGenome, Genome, ModelDef, ModelGenome, ModelLibrary,
                            Placement)
from .evolve.search import HistoryRow
from .explorer import ExplorationReport, ExplorerParams, PointState, TrajectoryStep
from .geometry import Aabb, CameraModel, Rect
from .islandgen import (Decoration, DecorParams, DogParams, DogTick, IslandMap, IslandParams,
                        VoronoiMap)
from .visibility import EvalParams, FitnessReport, VisibilityTrace


class FormatError(ValueError):
    """A document parsed as JSON but does not match the expected layout."""


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _loads(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{what}: {exc.msg} at line {exc.lineno}, column {exc.colno}") from None


def _keys(obj: Any, allowed: set[str], where: str) -> dict:
    if not isinstance(obj, dict):
        raise FormatError(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise FormatError(f"unknown field(s) in {where}: {', '.join(unknown)}")
    missing = sorted(allowed - set(obj))
    if missing:
        raise FormatError(f"missing field(s) in {where}: {', '.join(missing)}")
    return obj


def _floats(value: Any, n: int, where: str) -> tuple[float, ...]:
    if (not isinstance(value, list) or len(value) != n
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise FormatError(f"{where} must be a list of {n} numbers")
    return tuple(float(v) for v in value)


# --- genomes and model libraries ----------------------------------------


def genome_to_dict(genome: Genome) -> dict:
    if isinstance(genome, BlockGenome):
        return {"mode": "blocks",
                "blocks": [{"center": list(b.center), "size": list(b.size)} for b in genome.blocks]}
    return {"mode": "models",
            "placements": [{"model": p.model_id, "pos": list(p.position), "yaw_deg": p.yaw_deg}
                           for p in genome.placements]}


def genome_from_dict(doc: Any) -> Genome:
    if not isinstance(doc, dict) or doc.get("mode") not in ("blocks", "models"):
        raise FormatError("genome must be an object with mode 'blocks' or 'models'")
    try:
        if doc["mode"] == "blocks":
            _keys(doc, {"mode", "blocks"}, "genome")
            blocks = []
            for i, b in enumerate(doc["blocks"]):
                _keys(b, {"center", "size"}, f"blocks[{i}]")
                size = _floats(b["size"], 3, f"blocks[{i}].size")
                if not all(v > 0 and np.isfinite(v) for v in size):
                    raise FormatError(f"genome: blocks[{i}].size must be positive")
                blocks.append(Block(_floats(b["center"], 2, f"blocks[{i}].center"), size))
            return BlockGenome(tuple(blocks))
        _keys(doc, {"mode", "placements"}, "genome")
        placements = []
        for i, p in enumerate(doc["placements"]):
            _keys(p, {"model", "pos", "yaw_deg"}, f"placements[{i}]")
            if not isinstance(p["model"], str) or not isinstance(p["yaw_deg"], int):
                raise FormatError(f"placements[{i}] has a bad model id or yaw")
            placements.append(Placement(p["model"], _floats(p["pos"], 2, f"placements[{i}].pos"),
                                        p["yaw_deg"]))
        return ModelGenome(tuple(placements))
    except TypeError as exc:
        raise FormatError(f"genome: {exc}") from None


def load_genome(text: str) -> Genome:
    try:
        return genome_from_dict(_loads(text, "genome"))
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(f"genome: {exc}") from None


def save_genome(genome: Genome) -> str:
    return dumps(genome_to_dict(genome))


def library_to_list(library: ModelLibrary) -> list:
    return [{"id": m.id,
             "occluders": [{"min": list(b.min), "max": list(b.max)} for b in m.occluders],
             "footprint": [m.footprint.x0, m.footprint.z0, m.footprint.x1, m.footprint.z1]}
            for m in library.values()]


def load_library(text: str) -> dict[str, ModelDef]:
    doc = _loads(text, "model library")
    if not isinstance(doc, list):
        raise FormatError("model library must be a JSON list")
    out: dict[str, ModelDef] = {}
    for i, m in enumerate(doc):
        _keys(m, {"id", "occluders", "footprint"}, f"models[{i}]")
        boxes = []
        for j, b in enumerate(m["occluders"]):
            _keys(b, {"min", "max"}, f"models[{i}].occluders[{j}]")
            try:
                boxes.append(Aabb.from_bounds(_floats(b["min"], 3, "min"), _floats(b["max"], 3, "max")))
            except FormatError:
                raise
            except ValueError as exc:
                raise FormatError(f"models[{i}].occluders[{j}]: {exc}") from None
        try:
            out[m["id"]] = ModelDef(m["id"], tuple(boxes), Rect(*_floats(m["footprint"], 4, "footprint")))
        except FormatError:
            raise
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    return out


# --- reports --------------------------------------------------------------


def report_to_dict(report: FitnessReport, marker_ids: Sequence[str]) -> dict:
    return {
        "path_found": report.path_found,
        "constraints_met": report.constraints_met,
        "shaping": report.shaping,
        "fitness": report.fitness,
        "markers": [{"id": mid, "visible_fraction": frac, "met": met}
                    for mid, frac, met in zip(marker_ids, report.per_marker_visible_fraction,
                                              report.marker_met)],
    }


def exploration_to_dict(report: ExplorationReport) -> dict:
    d = dataclasses.asdict(report)
    d["coverage"] = report.points_observed_fraction
    return d


def _csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def trace_csv(trace: VisibilityTrace) -> str:
    header = ["sample_index", "arc_length", "x", "z", "yaw", *trace.marker_ids]
    rows = []
    for i, s in enumerate(trace.samples):
        flags = [int(v) for v in trace.visible[i]] if len(trace.marker_ids) else []
        rows.append([i, float(s.arc_length), s.pose.position.x, s.pose.position.z, s.pose.yaw, *flags])
    return _csv(header, rows)


def history_csv(history: Sequence[HistoryRow]) -> str:
    return _csv(["generation", "best_fitness", "mean_fitness", "best_constraints_met"],
                ([h.generation, h.best_fitness, h.mean_fitness, h.best_constraints_met] for h in history))


def trajectory_csv(trajectory: Sequence[TrajectoryStep]) -> str:
    return _csv(["tick", "x", "z", "yaw"], ([t.tick, t.x, t.z, t.yaw] for t in trajectory))


def belief_csv(snapshots: Sequence[np.ndarray]) -> str:
    """Long format: one row per (tick, point)."""
    rows = ([tick, i, PointState(int(s)).letter]
            for tick, snap in enumerate(snapshots) for i, s in enumerate(snap))
    return _csv(["tick", "point", "state"], rows)


def dog_csv(trace: Sequence[DogTick]) -> str:
    return _csv(["tick", "dog_x", "dog_z", "mode", "in_view"],
                ([d.tick, d.x, d.z, d.mode, int(d.in_view)] for d in trace))


# --- islands --------------------------------------------------------------


def island_to_dict(island: IslandMap) -> dict:
    vm = island.voronoi
    return {
        "extent": list(vm.extent),
        "sites": vm.sites.tolist(),
        "cells": [p.tolist() for p in vm.polygons],
        "adjacency": [list(a) for a in vm.adjacency],
        "shared_edges": [[i, j, list(a), list(b)] for (i, j), (a, b) in sorted(vm.shared_edges.items())],
        "land": [bool(v) for v in island.land],
        "decorations": [
            {"kind": d.kind, "x": d.x, "z": d.z, "cell": d.cell,
             **({"segment": [list(d.segment[0]), list(d.segment[1])]} if d.segment else {})}
            for d in island.decorations
        ],
        "path_cells": list(island.path_cells),
        "spawn": island.spawn,
        "campsite": island.campsite,
    }


def island_from_dict(doc: Any) -> IslandMap:
    _keys(doc, {"extent", "sites", "cells", "adjacency", "shared_edges", "land", "decorations",
                "path_cells", "spawn", "campsite"}, "island")
    try:
        shared = {(int(i), int(j)): (tuple(a), tuple(b)) for i, j, a, b in doc["shared_edges"]}
        vm = VoronoiMap(tuple(doc["extent"]), np.array(doc["sites"], dtype=float),
                        [np.array(c, dtype=float).reshape(-1, 2) for c in doc["cells"]],
                        tuple(tuple(a) for a in doc["adjacency"]), shared)
        decorations = tuple(
            Decoration(d["kind"], float(d["x"]), float(d["z"]), int(d["cell"]),
                       (tuple(d["segment"][0]), tuple(d["segment"][1])) if "segment" in d else None)
            for d in doc["decorations"])
        return IslandMap(vm, np.array(doc["land"], dtype=bool), decorations,
                         tuple(doc["path_cells"]), doc["spawn"], doc["campsite"])
    except (TypeError, ValueError, KeyError) as exc:
        raise FormatError(f"island: {exc}") from None


def load_island(text: str) -> IslandMap:
    return island_from_dict(_loads(text, "island"))


def save_island(island: IslandMap) -> str:
    return dumps(island_to_dict(island))


# --- run configuration ------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Every tunable default, grouped by module. A JSON config overrides any subset."""

    camera: CameraModel = field(default_factory=CameraModel)
    evaluation: EvalParams = field(default_factory=EvalParams)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    aesthetic: AestheticConfig | None = None
    explorer: ExplorerParams = field(default_factory=ExplorerParams)
    island: IslandParams = field(default_factory=IslandParams)
    dog: DogParams = field(default_factory=DogParams)
    dog_ticks: int = 60
    player_speed: float = 0.5  # metres per tick for the scripted walk

    def eval_params(self) -> EvalParams:
        return dataclasses.replace(self.evaluation, camera=self.camera)

    def evolution_config(self, seed: int, workers: int | None = None) -> EvolutionConfig:
        cfg = dataclasses.replace(self.evolution, master_seed=seed, aesthetic=self.aesthetic,
                                  evaluation=self.eval_params())
        if workers is not None:
            cfg = dataclasses.replace(cfg, workers=workers)
        return cfg

    def explorer_params(self) -> ExplorerParams:
        return dataclasses.replace(self.explorer, camera=self.camera)


_NESTED = {
    "camera": CameraModel, "evaluation": EvalParams, "evolution": EvolutionConfig,
    "aesthetic": AestheticConfig, "explorer": ExplorerParams, "island": IslandParams,
    "decor": DecorParams, "dog": DogParams,
}
# fields that the CLI fills from elsewhere, so a config may not set them
_RESERVED = {"master_seed", "evaluation", "aesthetic", "camera"}


def _coerce(default: Any, value: Any, where: str) -> Any:
    if isinstance(default, bool) or isinstance(value, bool):
        if not isinstance(value, bool) or not isinstance(default, bool):
            raise FormatError(f"{where} must be a boolean")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list) or len(value) != len(default):
            raise FormatError(f"{where} must be a list of {len(default)} values")
        return tuple(_coerce(d, v, f"{where}[{i}]") for i, (d, v) in enumerate(zip(default, value)))
    if isinstance(default, float):
        if not isinstance(value, (int, float)):
            raise FormatError(f"{where} must be a number")
        return float(value)
    if isinstance(default, int) and not isinstance(value, int):
        raise FormatError(f"{where} must be an integer")
    return value


def _override(obj: Any, changes: Any, where: str, reserved: set[str] = frozenset()) -> Any:
    if not isinstance(changes, dict):
        raise FormatError(f"{where} must be a JSON object")
    names = {f.name for f in dataclasses.fields(obj)} - reserved
    unknown = sorted(set(changes) - names)
    if unknown:
        raise FormatError(f"unknown config key(s) in {where}: {', '.join(unknown)}")
    updates = {}
    for key, value in changes.items():
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            updates[key] = _override(current, value, f"{where}.{key}")
        elif key in _NESTED and value is not None:
            updates[key] = _override(_NESTED[key](), value, f"{where}.{key}")
        elif current is None or value is None:
            updates[key] = value
        else:
            updates[key] = _coerce(current, value, f"{where}.{key}")
    try:
        return dataclasses.replace(obj, **updates)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from None


def run_config_from_dict(doc: Mapping[str, Any]) -> RunConfig:
    cfg = RunConfig()
    if not isinstance(doc, dict):
        raise FormatError("config must be a JSON object")
    unknown = sorted(set(doc) - {f.name for f in dataclasses.fields(RunConfig)})
    if unknown:
        raise FormatError(f"unknown config key(s): {', '.join(unknown)}")
    updates = {}
    for key, value in doc.items():
        current = getattr(cfg, key)
        if key == "aesthetic":
            updates[key] = None if value is None else _override(AestheticConfig(), value, key)
        elif dataclasses.is_dataclass(current):
            reserved = _RESERVED if key in ("evaluation", "evolution", "explorer") else set()
            updates[key] = _override(current, value, key, reserved)
        else:
            updates[key] = _coerce(current, value, key)
    return dataclasses.replace(cfg, **updates)


def load_run_config(text: str) -> RunConfig:
    return run_config_from_dict(_loads(text, "config"))
