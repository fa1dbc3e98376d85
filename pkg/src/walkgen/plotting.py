"""Matplotlib figures for the CLI report path.

Figures are built on ``matplotlib.figure.Figure`` with the Agg canvas, never
through pyplot, so nothing leaks between calls. PNGs are saved without the
software tag so repeated runs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
from matplotlib.backends.backend_agg import FigureCanvasAgg  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from .evolve.search import HistoryRow  # noqa: E402
from .islandgen import DogTick  # noqa: E402

RC = {"font.size": 9, "axes.spines.top": False, "axes.spines.right": False, "svg.hashsalt": "walkgen"}


def _figure(size=(5.0, 3.2)) -> Figure:
    fig = Figure(figsize=size, dpi=100, layout="constrained")
    FigureCanvasAgg(fig)
    return fig


def save_png(fig: Figure, path: Path | str) -> None:
    with matplotlib.rc_context(RC):
        fig.savefig(path, format="png", metadata={"Software": None})


def history_figure(history: Sequence[HistoryRow], n_markers: int) -> Figure:
    with matplotlib.rc_context(RC):
        fig = _figure()
        ax = fig.add_subplot()
        gens = [h.generation for h in history]
        ax.plot(gens, [h.best_fitness for h in history], label="best", color="#1f77b4")
        ax.plot(gens, [h.mean_fitness for h in history], label="mean", color="#ff7f0e", lw=1)
        ax.axhline(n_markers + 1, color="0.6", ls=":", lw=1)
        ax.set(xlabel="generation", ylabel="fitness", ylim=(0, n_markers + 1.1))
        ax.legend(frameon=False, loc="lower right")
    return fig


def coverage_figure(coverage: Sequence[float], reachable_fraction: float) -> Figure:
    with matplotlib.rc_context(RC):
        fig = _figure()
        ax = fig.add_subplot()
        ax.plot(range(len(coverage)), coverage, color="#2ca02c")
        ax.axhline(reachable_fraction, color="0.6", ls=":", lw=1, label="reachable")
        ax.set(xlabel="tick", ylabel="points observed", ylim=(0, 1.02))
        ax.legend(frameon=False, loc="lower right")
    return fig


def dog_figure(trace: Sequence[DogTick], player_xz: Sequence[tuple[float, float]]) -> Figure:
    """Distance from dog to player per tick, shaded where the dog is out of view."""
    with matplotlib.rc_context(RC):
        fig = _figure()
        ax = fig.add_subplot()
        ticks = [d.tick for d in trace]
        dist = [((d.x - px) ** 2 + (d.z - pz) ** 2) ** 0.5 for d, (px, pz) in zip(trace, player_xz)]
        ax.plot(ticks, dist, color="#c62828")
        for d in trace:
            if not d.in_view:
                ax.axvspan(d.tick - 0.5, d.tick + 0.5, color="0.85", lw=0)
        ax.set(xlabel="tick", ylabel="dog distance (m)")
    return fig
