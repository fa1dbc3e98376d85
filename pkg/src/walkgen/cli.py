"""Command-line entry point: ``walkgen <subcommand> ...``.

Exit codes: 0 success, 1 I/O or parse error, 2 validation failure,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

from . import io as wio
from . import plotting, render
from .evolve import (BlockGenome, EvolutionConfig, InvariantError, default_model_library, evolve,
                     genome_to_occluders)
from .evolve.genome import genome_violations
from .explorer import run_exploration
from .geometry import Pose, Vec3, yaw_towards
from .islandgen import generate_island, simulate_dog
from .template import TemplateParseError, TemplateValidationError, load_template
from .visibility import evaluate_level

log = logging.getLogger("walkgen")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_INVARIANT = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read(path: str | None, what: str) -> str:
    if path is None:
        raise CliError(f"missing {what} path", EXIT_IO)
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {what} {path}: {exc.strerror}", EXIT_IO) from None


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _template(args):
    text = _read(args.template, "template")
    try:
        return load_template(text)
    except TemplateParseError as exc:
        where = f" (line {exc.line}, column {exc.column})" if exc.line is not None else ""
        raise CliError(f"template parse error{where}: {exc}", EXIT_IO) from None
    except TemplateValidationError as exc:
        raise CliError(f"invalid template: {exc}", EXIT_INVALID) from None


def _library(args):
    if getattr(args, "library", None) is None:
        return default_model_library()
    try:
        return wio.load_library(_read(args.library, "model library"))
    except wio.FormatError as exc:
        raise CliError(str(exc), EXIT_IO) from None


def _genome(args, template, config: wio.RunConfig, library):
    if getattr(args, "genome", None) is None:
        return BlockGenome()
    try:
        genome = wio.load_genome(_read(args.genome, "genome"))
    except wio.FormatError as exc:
        raise CliError(str(exc), EXIT_IO) from None
    if getattr(genome, "placements", None):
        missing = sorted({p.model_id for p in genome.placements} - set(library))
        if missing:
            raise CliError(f"genome uses unknown model(s): {', '.join(missing)}", EXIT_INVALID)
    return genome


def _config(args) -> wio.RunConfig:
    if args.config is None:
        return wio.RunConfig()
    try:
        return wio.load_run_config(_read(args.config, "config"))
    except wio.FormatError as exc:
        raise CliError(f"config: {exc}", EXIT_IO) from None


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def cmd_evaluate(args) -> int:
    config = _config(args)
    template = _template(args)
    library = _library(args)
    genome = _genome(args, template, config, library)
    occluders = genome_to_occluders(genome, library)
    report, trace = evaluate_level(template, occluders, config.eval_params())
    out = Path(args.out)
    _write(out, "report.json", wio.dumps(wio.report_to_dict(report, template.marker_ids())))
    _write(out, "trace.csv", wio.trace_csv(trace))
    path = [(s.pose.position.x, s.pose.position.z) for s in trace.samples]
    _write(out, "level.svg", render.render_level(template, occluders, report, path or None))
    _say(args, f"path_found={report.path_found} constraints_met={report.constraints_met} "
               f"fitness={report.fitness:.4f}")
    return EXIT_OK


def cmd_evolve(args) -> int:
    if args.seed is None:
        raise CliError("evolve needs --seed", EXIT_INVALID)
    config = _config(args)
    template = _template(args)
    library = _library(args)
    evo: EvolutionConfig = config.evolution_config(args.seed, args.workers)
    if args.mode is not None:
        evo = dataclasses.replace(evo, mode=args.mode)
    try:
        result = evolve(template, evo, library)
    except InvariantError as exc:
        raise CliError(f"invariant violation: {exc}", EXIT_INVARIANT) from None
    problems = genome_violations(result.best_genome, evo, template, library)
    best = result.best
    occluders = genome_to_occluders(best.genome, library)
    report, trace = evaluate_level(template, occluders, evo.evaluation)
    out = Path(args.out)
    _write(out, "best_genome.json", wio.save_genome(best.genome))
    _write(out, "history.csv", wio.history_csv(result.history))
    summary = wio.report_to_dict(report, template.marker_ids())
    summary.update(generations_run=result.generations_run, solved=result.solved,
                   penalty=best.penalty, combined_fitness=best.fitness, seed=args.seed, mode=evo.mode)
    _write(out, "report.json", wio.dumps(summary))
    _write(out, "trace.csv", wio.trace_csv(trace))
    path = [(s.pose.position.x, s.pose.position.z) for s in trace.samples]
    _write(out, "best.svg", render.render_level(template, occluders, report, path or None))
    plotting.save_png(plotting.history_figure(result.history, len(template.markers)), out / "history.png")
    _say(args, f"generations={result.generations_run} solved={result.solved} "
               f"constraints_met={report.constraints_met}/{len(template.markers)} fitness={best.fitness:.4f}")
    if problems:
        print("invariant violation: " + "; ".join(problems), file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_explore(args) -> int:
    config = _config(args)
    template = _template(args)
    library = _library(args)
    genome = _genome(args, template, config, library)
    occluders = genome_to_occluders(genome, library)
    try:
        run = run_exploration(template, occluders, config.explorer_params())
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None
    out = Path(args.out)
    _write(out, "exploration.json", wio.dumps(wio.exploration_to_dict(run.report)))
    _write(out, "trajectory.csv", wio.trajectory_csv(run.trajectory))
    _write(out, "belief.csv", wio.belief_csv(run.snapshots))
    last = len(run.snapshots) - 1
    every = max(1, args.frame_every)
    for t in sorted(set(range(0, last + 1, every)) | {last}):
        step = run.trajectory[t]
        trail = [(s.x, s.z) for s in run.trajectory[:t + 1]]
        svg = render.render_level(template, occluders, None, trail if len(trail) > 1 else None,
                                  (run.lattice, run.snapshots[t]), (step.x, step.z))
        _write(out, f"frames/frame_{t:05d}.svg", svg)
    plotting.save_png(plotting.coverage_figure(run.coverage, float(run.reachable.mean())),
                      out / "coverage.png")
    r = run.report
    _say(args, f"ticks={r.ticks_used} coverage={r.points_observed_fraction:.4f} "
               f"reachable_coverage={r.reachable_observed_fraction:.4f} termination={r.termination}")
    if run.violations:
        print("invariant violation: " + run.violations[0], file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def straight_walk(start, goal, ticks: int, eye_height: float, speed: float = 1.0) -> list[Pose]:
    """Player walking from ``start`` toward ``goal`` at ``speed`` per tick, then standing."""
    (x0, z0), (x1, z1) = start, goal
    length = math.hypot(x1 - x0, z1 - z0)
    yaw = yaw_towards(x1 - x0, z1 - z0) if length > 0 else 0.0
    poses = []
    for t in range(ticks):
        f = 0.0 if length == 0 else min(1.0, t * speed / length)
        poses.append(Pose(Vec3(x0 + f * (x1 - x0), eye_height, z0 + f * (z1 - z0)), yaw))
    return poses


def cmd_island(args) -> int:
    if args.seed is None:
        raise CliError("island needs --seed", EXIT_INVALID)
    config = _config(args)
    try:
        island = generate_island(config.island, args.seed)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None
    out = Path(args.out)
    _write(out, "island.json", wio.save_island(island))
    dog_xz = player_xz = None
    if args.dog:
        if island.spawn is None:
            raise CliError("dog simulation needs at least two land cells", EXIT_INVALID)
        a = island.voronoi.centroid(island.spawn)
        b = island.voronoi.centroid(island.campsite)
        poses = straight_walk(tuple(a), tuple(b), config.dog_ticks, 1.6, config.player_speed)
        run = simulate_dog(island, poses, config.camera, config.dog, seed=args.seed)
        _write(out, "dog.csv", wio.dog_csv(run.trace))
        player_xz = [(p.position.x, p.position.z) for p in poses]
        dog_xz = [(d.x, d.z) for d in run.trace]
        plotting.save_png(plotting.dog_figure(run.trace, player_xz), out / "dog.png")
        _say(args, f"dog_in_view_fraction={run.in_view_fraction:.4f}")
    _write(out, "island.svg", render.render_island(island, dog_xz, player_xz))
    _say(args, f"land_cells={int(island.land.sum())} decorations={len(island.decorations)} "
               f"path_cells={len(island.path_cells)}")
    return EXIT_OK


def cmd_render(args) -> int:
    text = _read(args.input, "input")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"parse error (line {exc.lineno}, column {exc.colno}): {exc.msg}", EXIT_IO) from None
    out = Path(args.out)
    if isinstance(doc, dict) and "cells" in doc:
        try:
            island = wio.island_from_dict(doc)
        except wio.FormatError as exc:
            raise CliError(str(exc), EXIT_IO) from None
        _write(out, "island.svg", render.render_island(island))
        return EXIT_OK
    args.template = args.input
    config = _config(args)
    template = _template(args)
    library = _library(args)
    occluders = genome_to_occluders(_genome(args, template, config, library), library)
    _write(out, "level.svg", render.render_level(template, occluders))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (required by evolve and island)")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--config", help="JSON file overriding module defaults")
    common.add_argument("--quiet", action="store_true", help="suppress the summary line")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    level = argparse.ArgumentParser(add_help=False)
    level.add_argument("--genome", help="genome JSON (default: no occluders)")
    level.add_argument("--library", help="model library JSON for model genomes")

    parser = argparse.ArgumentParser(prog="walkgen", description="Visibility-driven level generation tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", parents=[common, level], help="score one level")
    p.add_argument("template")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("evolve", parents=[common], help="evolve occluders for a template")
    p.add_argument("template")
    p.add_argument("--library", help="model library JSON for models mode")
    p.add_argument("--mode", choices=("blocks", "models"), help="genome mode (overrides config)")
    p.add_argument("--workers", type=int, help="evaluation processes")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("explore", parents=[common, level], help="run the curious explorer")
    p.add_argument("template")
    p.add_argument("--frame-every", type=int, default=10, help="write an SVG frame every N ticks")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("island", parents=[common], help="generate an island")
    p.add_argument("--dog", action="store_true", help="simulate the dog along a straight player walk")
    p.set_defaults(func=cmd_island)

    p = sub.add_parser("render", parents=[common, level], help="render a template or island to SVG")
    p.add_argument("input")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"walkgen: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"walkgen: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
