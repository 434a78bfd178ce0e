"""Figures written next to the CSV/JSON outputs."""

from __future__ import annotations

from collections.abc import Iterable
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

from .bench import BenchResult  # noqa: E402
from .clustering import Clustering  # noqa: E402
from .core import HotspotGraph, Poi  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "savefig.dpi": 150,
    "svg.hashsalt": "metatrail",
}

# keeps PNG bytes identical across runs
_METADATA = {"Software": None}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, bbox_inches="tight", metadata=_METADATA if path.suffix == ".png" else None)
    plt.close(fig)
    return path


def plot_benchmark(result: BenchResult, path: str | Path) -> Path:
    """Grouped bars of mean clustering time per sparse ratio, one group per algorithm."""
    algs = result.algorithms()
    ratios = result.ratios()
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 2.8))
        width = 0.8 / max(len(ratios), 1)
        x = np.arange(len(algs))
        for k, q in enumerate(ratios):
            heights = [result.mean_seconds(a, q) for a in algs]
            ax.bar(x + (k - (len(ratios) - 1) / 2) * width, heights, width, label=f"{q:.0%}")
        ax.set_xticks(x, [a.upper() if a == "mcl" else "K-means" for a in algs])
        ax.set_ylabel("time (s)")
        ax.legend(title="sparse ratio", ncols=min(len(ratios), 5), frameon=False,
                  loc="upper left", bbox_to_anchor=(0, 1.25))
        return _save(fig, path)


def plot_network(
    g: HotspotGraph,
    pois: Iterable[Poi],
    path: str | Path,
    clustering: Clustering | None = None,
) -> Path:
    """POIs at their coordinates, edges drawn with width by weight, colored by subnetwork."""
    where = {p.poi_id: p.position for p in pois}
    verts = [v for v in g.vertices if v in where]
    color_of: dict[str, int] = {}
    if clustering is not None:
        for k, sub in enumerate(clustering.subnetworks):
            for v in sub.members:
                color_of[v] = k
    cmap = plt.get_cmap("tab10")
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        wmax = max(g.edges.values(), default=1.0) or 1.0
        for (u, v), w in sorted(g.edges.items()):
            if u in where and v in where and u != v:
                a, b = where[u], where[v]
                ax.annotate("", xy=(b.lon, b.lat), xytext=(a.lon, a.lat),
                            arrowprops=dict(arrowstyle="-|>", lw=0.5 + 2.5 * w / wmax,
                                            color="0.35", alpha=0.7, shrinkA=4, shrinkB=4))
        fmax = max((g.frequencies[v] for v in verts), default=1) or 1
        for v in verts:
            p = where[v]
            c = cmap(color_of[v] % 10) if v in color_of else "tab:red"
            ax.scatter([p.lon], [p.lat], s=20 + 120 * g.frequencies[v] / fmax, color=c, zorder=3)
            ax.annotate(v, (p.lon, p.lat), xytext=(3, 3), textcoords="offset points", fontsize=7)
        ax.ticklabel_format(useOffset=False)
        ax.xaxis.set_major_locator(MaxNLocator(4))
        ax.set_xlabel("longitude")
        ax.set_ylabel("latitude")
        ax.set_aspect("equal", adjustable="datalim")
        return _save(fig, path)
