"""Synthetic graphs and the MCL vs. K-means timing harness."""

from __future__ import annotations

import csv
import json
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import MclParams, kmeans_cluster, markov_cluster
from .core import HotspotGraph
from .errors import ValidationError

DEFAULT_RATIOS = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True, slots=True)
class SynthSpec:
    """Random digraph recipe.

    ``sparse_ratio`` is the fraction of the n(n-1) possible directed edges
    that are present. Weights are uniform on the half-open interval
    ``(low, high]``.
    """

    n: int
    sparse_ratio: float
    weight_range: tuple[float, float] = (0.0, 1.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        if not 0 < self.sparse_ratio <= 1:
            raise ValidationError(f"sparse_ratio must be in (0, 1], got {self.sparse_ratio}")
        low, high = self.weight_range
        if not 0 <= low < high:
            raise ValidationError(f"weight_range needs 0 <= low < high, got {self.weight_range}")


def vertex_ids(n: int) -> list[str]:
    width = len(str(max(n - 1, 0)))
    return [f"v{i:0{width}d}" for i in range(n)]


def _graph(ids: list[str], src: np.ndarray, dst: np.ndarray, w: np.ndarray) -> HotspotGraph:
    deg = np.zeros(len(ids))
    np.add.at(deg, src, w)
    np.add.at(deg, dst, w)
    edges = {(ids[a], ids[b]): float(x) for a, b, x in zip(src.tolist(), dst.tolist(), w.tolist())}
    return HotspotGraph({v: float(d) for v, d in zip(ids, deg)}, edges)


def edge_count(n: int, sparse_ratio: float) -> int:
    return round(sparse_ratio * n * (n - 1))


def synth_graph(spec: SynthSpec) -> HotspotGraph:
    """Uniformly sample ``round(ratio * n(n-1))`` distinct non-loop edges.

    Vertex frequencies are set to the weighted degree.
    """
    n = spec.n
    m = edge_count(n, spec.sparse_ratio)
    rng = np.random.default_rng(spec.seed)
    slots = np.sort(rng.choice(n * (n - 1), size=m, replace=False)) if m else np.zeros(0, dtype=np.int64)
    src = slots // max(n - 1, 1)
    off = slots % max(n - 1, 1)
    dst = off + (off >= src)  # skip the diagonal
    low, high = spec.weight_range
    w = high - rng.random(m) * (high - low)
    return _graph(vertex_ids(n), src, dst, w)


def planted_partition(
    blocks: Sequence[int], p_in: float, p_out: float, seed: int = 0
) -> tuple[HotspotGraph, dict[str, int]]:
    """Unit-weight digraph with known blocks.

    Each ordered pair of distinct vertices is an edge with probability
    ``p_in`` inside a block and ``p_out`` across blocks. Returns the graph
    and the block index of every vertex.
    """
    if not 0 <= p_out < p_in <= 1:
        raise ValidationError(f"need 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}")
    if not blocks or any(b < 1 for b in blocks):
        raise ValidationError(f"block sizes must be positive, got {list(blocks)}")
    labels = np.repeat(np.arange(len(blocks)), blocks)
    n = len(labels)
    rng = np.random.default_rng(seed)
    prob = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    adj = rng.random((n, n)) < prob
    np.fill_diagonal(adj, False)
    src, dst = np.nonzero(adj)
    ids = vertex_ids(n)
    g = _graph(ids, src, dst, np.ones(len(src)))
    return g, {v: int(b) for v, b in zip(ids, labels)}


@dataclass(frozen=True, slots=True)
class BenchRecord:
    algorithm: str
    ratio: float
    trial: int
    seconds: float
    iterations: int
    clusters: int


@dataclass
class BenchResult:
    """Timing records plus per-ratio and overall means per algorithm."""

    records: list[BenchRecord] = field(default_factory=list)

    def algorithms(self) -> list[str]:
        return sorted({r.algorithm for r in self.records})

    def ratios(self) -> list[float]:
        return sorted({r.ratio for r in self.records})

    def mean_seconds(self, algorithm: str, ratio: float | None = None) -> float:
        xs = [r.seconds for r in self.records
              if r.algorithm == algorithm and (ratio is None or r.ratio == ratio)]
        if not xs:
            raise ValidationError(f"no records for {algorithm!r} at ratio {ratio}")
        return float(np.mean(xs))

    def mean_of_ratio_means(self, algorithm: str) -> float:
        return float(np.mean([self.mean_seconds(algorithm, q) for q in self.ratios()]))

    def summary(self) -> dict:
        return {
            "per_ratio": {
                a: {str(q): self.mean_seconds(a, q) for q in self.ratios()} for a in self.algorithms()
            },
            "overall_mean": {a: self.mean_seconds(a) for a in self.algorithms()},
            "mean_of_ratio_means": {a: self.mean_of_ratio_means(a) for a in self.algorithms()},
            "trials": len({r.trial for r in self.records}),
        }


def run_benchmark(
    n: int = 500,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    trials: int = 3,
    mcl: MclParams = MclParams(),
    k: int = 10,
    seed: int = 0,
    kmeans_iters: int | None = None,
    ratio_means_absent: bool = False,
) -> BenchResult:
    """Time MCL and K-means on freshly synthesized graphs.

    Trial ``t`` uses seed ``seed + t`` for both the graph and the K-means
    initialization. Only the clustering calls are timed. K-means runs
    ``kmeans_iters`` iterations (default: ``mcl.max_iterations``). With
    ``ratio_means_absent`` a ratio gives the fraction of missing edges.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    iters = mcl.max_iterations if kmeans_iters is None else kmeans_iters
    result = BenchResult()
    for t in range(trials):
        s = seed + t
        for q in ratios:
            density = 1.0 - q if ratio_means_absent else q
            g = synth_graph(SynthSpec(n, density, seed=s))

            t0 = time.perf_counter()
            c = markov_cluster(g, mcl)
            dt = time.perf_counter() - t0
            result.records.append(BenchRecord("mcl", q, t, dt, c.iterations, len(c)))

            t0 = time.perf_counter()
            c = kmeans_cluster(g, k, iters, seed=s)
            dt = time.perf_counter() - t0
            result.records.append(BenchRecord("kmeans", q, t, dt, c.iterations, len(c)))
    return result


def write_bench(result: BenchResult, prefix: str | Path) -> dict[str, Path]:
    """Write ``<prefix>.csv`` (one row per run), ``.json`` (means) and ``.dat`` (gnuplot)."""
    prefix = Path(prefix)
    paths = {ext: prefix.with_name(prefix.name + "." + ext) for ext in ("csv", "json", "dat")}
    with open(paths["csv"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "ratio", "trial", "seconds", "clusters"])
        for r in result.records:
            w.writerow([r.algorithm, r.ratio, r.trial, f"{r.seconds:.6f}", r.clusters])
    with open(paths["json"], "w", encoding="utf-8") as fh:
        json.dump(result.summary(), fh, indent=2)
        fh.write("\n")
    algs = result.algorithms()
    with open(paths["dat"], "w", encoding="utf-8") as fh:
        fh.write("# ratio " + " ".join(algs) + "  (mean seconds)\n")
        for q in result.ratios():
            fh.write(f"{q:g} " + " ".join(f"{result.mean_seconds(a, q):.6f}" for a in algs) + "\n")
    return paths
