"""Level genomes and their variation operators.

Two encodings share the operators: ``BlockGenome`` (grounded boxes with free
position and size) and ``ModelGenome`` (placements of fixed-shape models with
free position and a yaw in 90 degree steps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence, Union

import numpy as np

from ..geometry import Aabb, Rect, Vec3
from ..template import LevelTemplate
from .config import AestheticConfig, EvolutionConfig

MAX_REROLLS = 16
YAWS = (0, 90, 180, 270)
_COS_SIN = {0: (1, 0), 90: (0, 1), 180: (-1, 0), 270: (0, -1)}


@dataclass(frozen=True)
class Block:
    center: tuple[float, float]
    size: tuple[float, float, float]  # width (x), depth (z), height (y)

    def footprint(self) -> Rect:
        (cx, cz), (w, d, _) = self.center, self.size
        return Rect(cx - w / 2, cz - d / 2, cx + w / 2, cz + d / 2)

    def to_aabb(self) -> Aabb:
        fp = self.footprint()
        return Aabb(Vec3(fp.x0, 0.0, fp.z0), Vec3(fp.x1, self.size[2], fp.z1))


@dataclass(frozen=True)
class BlockGenome:
    blocks: tuple[Block, ...] = ()
    mode = "blocks"

    @property
    def genes(self) -> tuple[Block, ...]:
        return self.blocks

    def with_genes(self, genes: Sequence[Block]) -> BlockGenome:
        return BlockGenome(tuple(genes))


@dataclass(frozen=True)
class ModelDef:
    id: str
    occluders: tuple[Aabb, ...]
    footprint: Rect

    def __post_init__(self) -> None:
        if not self.occluders:
            raise ValueError(f"model {self.id!r} has no occluders")
        for box in self.occluders:
            if not self.footprint.contains_rect(box.footprint()):
                raise ValueError(f"model {self.id!r}: footprint does not cover occluder {box}")


@dataclass(frozen=True)
class Placement:
    model_id: str
    position: tuple[float, float]
    yaw_deg: int = 0

    def __post_init__(self) -> None:
        if self.yaw_deg not in _COS_SIN:
            raise ValueError(f"yaw must be a multiple of 90 degrees in [0, 360), got {self.yaw_deg}")


@dataclass(frozen=True)
class ModelGenome:
    placements: tuple[Placement, ...] = ()
    mode = "models"

    @property
    def genes(self) -> tuple[Placement, ...]:
        return self.placements

    def with_genes(self, genes: Sequence[Placement]) -> ModelGenome:
        return ModelGenome(tuple(genes))


Genome = Union[BlockGenome, ModelGenome]
ModelLibrary = Mapping[str, ModelDef]


def default_model_library() -> dict[str, ModelDef]:
    """A low rock and a tree whose canopy sits above eye height."""
    rock = ModelDef(
        "rock",
        (Aabb.from_bounds((-1.0, 0.0, -0.75), (1.0, 1.2, 0.75)),
         Aabb.from_bounds((-0.6, 1.2, -0.5), (0.5, 1.9, 0.4))),
        Rect(-1.0, -0.75, 1.0, 0.75),
    )
    tree = ModelDef(
        "tree",
        (Aabb.from_bounds((-0.15, 0.0, -0.15), (0.15, 2.4, 0.15)),
         Aabb.from_bounds((-1.1, 2.4, -1.1), (1.1, 4.8, 1.1))),
        Rect(-1.1, -1.1, 1.1, 1.1),
    )
    return {"rock": rock, "tree": tree}


def rotate_rect(r: Rect, yaw_deg: int) -> Rect:
    c, s = _COS_SIN[yaw_deg]
    xs, zs = [], []
    for x, z in ((r.x0, r.z0), (r.x1, r.z1)):
        xs.append(x * c + z * s)
        zs.append(-x * s + z * c)
    return Rect(min(xs), min(zs), max(xs), max(zs))


def _translate(r: Rect, dx: float, dz: float) -> Rect:
    return Rect(r.x0 + dx, r.z0 + dz, r.x1 + dx, r.z1 + dz)


def placement_footprint(p: Placement, library: ModelLibrary) -> Rect:
    model = _model(p.model_id, library)
    return _translate(rotate_rect(model.footprint, p.yaw_deg), *p.position)


def placement_occluders(p: Placement, library: ModelLibrary) -> list[Aabb]:
    model = _model(p.model_id, library)
    out = []
    for box in model.occluders:
        fp = _translate(rotate_rect(box.footprint(), p.yaw_deg), *p.position)
        out.append(Aabb(Vec3(fp.x0, box.min.y, fp.z0), Vec3(fp.x1, box.max.y, fp.z1)))
    return out


def _model(model_id: str, library: ModelLibrary | None) -> ModelDef:
    if not library or model_id not in library:
        raise KeyError(f"unknown model id {model_id!r}")
    return library[model_id]


def genome_to_occluders(genome: Genome, model_library: ModelLibrary | None = None) -> list[Aabb]:
    if isinstance(genome, BlockGenome):
        return [b.to_aabb() for b in genome.blocks]
    boxes: list[Aabb] = []
    for p in genome.placements:
        boxes.extend(placement_occluders(p, model_library))
    return boxes


def genome_footprints(genome: Genome, model_library: ModelLibrary | None = None) -> list[Rect]:
    if isinstance(genome, BlockGenome):
        return [b.footprint() for b in genome.blocks]
    return [placement_footprint(p, model_library) for p in genome.placements]


def protected_cells(template: LevelTemplate, cell_size: float) -> list[Rect]:
    """Navigation cells holding the start and end points."""
    nx = max(1, math.ceil(template.surface.x / cell_size - 1e-9))
    nz = max(1, math.ceil(template.surface.z / cell_size - 1e-9))
    out = []
    for p in (template.start, template.end):
        col = min(max(int(math.floor(p.x / cell_size)), 0), nx - 1)
        row = min(max(int(math.floor(p.z / cell_size)), 0), nz - 1)
        out.append(Rect(col * cell_size, row * cell_size, (col + 1) * cell_size, (row + 1) * cell_size))
    return out


class _Context:
    """Everything the operators need to judge a single gene."""

    def __init__(self, config: EvolutionConfig, template: LevelTemplate,
                 library: ModelLibrary | None):
        self.config = config
        self.template = template
        self.library = library
        self.surface = Rect(0.0, 0.0, template.surface.x, template.surface.z)
        # absorbs rounding from centre +- half-size arithmetic
        self.bounds = Rect(-1e-9, -1e-9, template.surface.x + 1e-9, template.surface.z + 1e-9)
        self.protected = protected_cells(template, config.evaluation.cell_size)
        self.model_ids = sorted(library) if library else []
        if config.mode == "models" and not self.model_ids:
            raise ValueError("models mode needs a non-empty model library")
        if config.mode == "blocks":
            if config.max_dim[0] > template.surface.x or config.max_dim[1] > template.surface.z:
                raise ValueError("max block footprint exceeds the surface")

    def footprint(self, gene) -> Rect:
        if isinstance(gene, Block):
            return gene.footprint()
        return placement_footprint(gene, self.library)

    def gene_ok(self, gene) -> bool:
        fp = self.footprint(gene)
        if not self.bounds.contains_rect(fp):
            return False
        return not any(fp.overlaps(cell) for cell in self.protected)

    def clamp(self, gene):
        """Shift a gene so its footprint lies on the surface."""
        if isinstance(gene, Block):
            lo, hi = self.config.min_dim, self.config.max_dim
            w, d, h = (float(min(max(v, a), b)) for v, a, b in zip(gene.size, lo, hi))
            cx = float(min(max(gene.center[0], w / 2), self.surface.x1 - w / 2))
            cz = float(min(max(gene.center[1], d / 2), self.surface.z1 - d / 2))
            return Block((cx, cz), (w, d, h))
        local = rotate_rect(_model(gene.model_id, self.library).footprint, gene.yaw_deg)
        px = float(min(max(gene.position[0], -local.x0), self.surface.x1 - local.x1))
        pz = float(min(max(gene.position[1], -local.z0), self.surface.z1 - local.z1))
        return replace(gene, position=(px, pz))

    def random_gene(self, rng: np.random.Generator):
        if self.config.mode == "blocks":
            lo, hi = self.config.min_dim, self.config.max_dim
            w, d, h = (float(rng.uniform(a, b)) for a, b in zip(lo, hi))
            cx = float(rng.uniform(w / 2, self.surface.x1 - w / 2))
            cz = float(rng.uniform(d / 2, self.surface.z1 - d / 2))
            return Block((cx, cz), (w, d, h))
        model_id = self.model_ids[int(rng.integers(len(self.model_ids)))]
        yaw = YAWS[int(rng.integers(4))]
        local = rotate_rect(self.library[model_id].footprint, yaw)
        px = float(rng.uniform(-local.x0, self.surface.x1 - local.x1))
        pz = float(rng.uniform(-local.z0, self.surface.z1 - local.z1))
        return Placement(model_id, (px, pz), yaw)

    def valid_random_gene(self, rng: np.random.Generator, attempts: int = MAX_REROLLS):
        for _ in range(attempts):
            gene = self.random_gene(rng)
            if self.gene_ok(gene):
                return gene
        return None

    def repair(self, genes: list, rng: np.random.Generator) -> list:
        """Re-roll genes that cover start/end; drop the hopeless; top up to the minimum."""
        out = []
        for gene in genes:
            if self.gene_ok(gene):
                out.append(gene)
                continue
            fresh = self.valid_random_gene(rng)
            if fresh is not None:
                out.append(fresh)
        while len(out) < self.config.min_blocks:
            fresh = self.valid_random_gene(rng, attempts=1000)
            if fresh is None:
                raise RuntimeError("cannot place a gene clear of the start and end cells")
            out.append(fresh)
        return out


def _empty(config: EvolutionConfig) -> Genome:
    return BlockGenome() if config.mode == "blocks" else ModelGenome()


def random_genome(config: EvolutionConfig, template: LevelTemplate, rng: np.random.Generator,
                  model_library: ModelLibrary | None = None) -> Genome:
    ctx = _Context(config, template, model_library)
    count = int(rng.integers(config.min_blocks, config.max_blocks + 1))
    genes = [ctx.random_gene(rng) for _ in range(count)]
    return _empty(config).with_genes(ctx.repair(genes, rng))


def mutate(genome: Genome, config: EvolutionConfig, template: LevelTemplate,
           rng: np.random.Generator, model_library: ModelLibrary | None = None) -> Genome:
    """Each operator fires independently with its configured rate.

    In model mode the resize operator turns a placement by a random multiple of
    90 degrees instead, since models cannot be reshaped.
    """
    ctx = _Context(config, template, model_library)
    genes = list(genome.genes)
    roll_add, roll_remove, roll_move, roll_resize = rng.random(4)
    changed = False

    if roll_add < config.add_rate and len(genes) < config.max_blocks:
        gene = ctx.valid_random_gene(rng)
        if gene is not None:
            genes.append(gene)
            changed = True
    if roll_remove < config.remove_rate and len(genes) > config.min_blocks:
        del genes[int(rng.integers(len(genes)))]
        changed = True
    if roll_move < config.move_rate and genes:
        i = int(rng.integers(len(genes)))
        dx, dz = rng.normal(0.0, config.sigma_move, 2)
        g = genes[i]
        if isinstance(g, Block):
            genes[i] = ctx.clamp(Block((g.center[0] + dx, g.center[1] + dz), g.size))
        else:
            genes[i] = ctx.clamp(replace(g, position=(g.position[0] + dx, g.position[1] + dz)))
        changed = True
    if roll_resize < config.resize_rate and genes:
        i = int(rng.integers(len(genes)))
        g = genes[i]
        if isinstance(g, Block):
            delta = rng.normal(0.0, config.sigma_size, 3)
            genes[i] = ctx.clamp(Block(g.center, tuple(float(v + dv) for v, dv in zip(g.size, delta))))
        else:
            turn = 90 * int(rng.integers(1, 4))
            genes[i] = ctx.clamp(replace(g, yaw_deg=(g.yaw_deg + turn) % 360))
        changed = True

    if not changed:
        return genome
    return genome.with_genes(ctx.repair(genes, rng))


def crossover(a: Genome, b: Genome, rng: np.random.Generator,
              config: EvolutionConfig | None = None) -> Genome:
    if type(a) is not type(b):
        raise ValueError(f"cannot cross a {a.mode} genome with a {b.mode} genome")
    ga, gb = a.genes, b.genes
    shared = min(len(ga), len(gb))
    picks = rng.random(shared) < 0.5
    child = [ga[i] if picks[i] else gb[i] for i in range(shared)]
    longer = ga if len(ga) > len(gb) else gb
    tail = longer[shared:]
    keep = rng.random(len(tail)) < 0.5
    child.extend(g for g, k in zip(tail, keep) if k)
    if config is not None:
        child = child[:config.max_blocks]
    return a.with_genes(child)


def aesthetic_score(placements: Sequence[Placement], config: AestheticConfig | None) -> float:
    """Penalty for straying from target model counts and nearest-neighbour spacing."""
    if config is None:
        return 0.0
    penalty = 0.0
    by_model: dict[str, list[tuple[float, float]]] = {}
    for p in placements:
        by_model.setdefault(p.model_id, []).append(p.position)
    if config.w_qty:
        for model_id, target in sorted(config.target_counts.items()):
            penalty += config.w_qty * abs(len(by_model.get(model_id, ())) - target)
    if config.w_pair:
        for model_id, target in sorted(config.target_spacing.items()):
            pts = np.array(by_model.get(model_id, ()), dtype=float).reshape(-1, 2)
            if len(pts) < 2:
                continue
            dist = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
            np.fill_diagonal(dist, np.inf)
            penalty += config.w_pair * float(np.abs(dist.min(axis=1) - target).sum())
    return penalty


def genome_violations(genome: Genome, config: EvolutionConfig, template: LevelTemplate,
                      model_library: ModelLibrary | None = None) -> list[str]:
    """Invariant breaches of a genome; empty when the genome is valid."""
    ctx = _Context(config, template, model_library)
    out = []
    if genome.mode != config.mode:
        out.append(f"mode {genome.mode} != configured {config.mode}")
    n = len(genome.genes)
    if not config.min_blocks <= n <= config.max_blocks:
        out.append(f"gene count {n} outside [{config.min_blocks}, {config.max_blocks}]")
    for i, gene in enumerate(genome.genes):
        if isinstance(gene, Block):
            for axis, (v, lo, hi) in enumerate(zip(gene.size, config.min_dim, config.max_dim)):
                if not lo <= v <= hi:
                    out.append(f"block {i} axis {axis} size {v} outside [{lo}, {hi}]")
        elif gene.model_id not in (model_library or {}):
            out.append(f"placement {i} uses unknown model {gene.model_id!r}")
            continue
        fp = ctx.footprint(gene)
        if not ctx.bounds.contains_rect(fp):
            out.append(f"gene {i} footprint leaves the surface")
        if any(fp.overlaps(c) for c in ctx.protected):
            out.append(f"gene {i} covers the start or end cell")
    return out
