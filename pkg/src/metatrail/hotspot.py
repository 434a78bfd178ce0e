"""Hotspot network construction and transition probabilities."""

from __future__ import annotations

import csv
import json
from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from .core import (
    HotspotGraph,
    Poi,
    TransitionMatrix,
    VisitSequence,
    format_number,
    weight_matrix,
)
from .errors import UnknownVertexError, ValidationError


def transition_graph(seqs: Iterable[VisitSequence], app_filter: str | None = None) -> HotspotGraph:
    """Count POI-to-POI transitions over all visit sequences.

    With ``app_filter`` only visits carrying that app label take part. Each
    consecutive pair of distinct POIs adds 1 to the edge weight; vertex
    frequencies are the number of (kept) visits.
    """
    freqs: Counter[str] = Counter()
    edges: dict[tuple[str, str], float] = {}
    for seq in seqs:
        visits = [v for v in seq.visits if app_filter is None or v.app_label == app_filter]
        freqs.update(v.poi_id for v in visits)
        for a, b in zip(visits, visits[1:]):
            if a.poi_id != b.poi_id:
                key = (a.poi_id, b.poi_id)
                edges[key] = edges.get(key, 0.0) + 1.0
    return HotspotGraph(dict(freqs), edges)


def trace_tree(g: HotspotGraph, r: str, threshold: float) -> set[str]:
    """``r`` and its distance-one neighbors (either direction) visited at least ``threshold`` times."""
    if g.frequency(r) < threshold:
        raise ValidationError(
            f"seed {r!r} has frequency {g.frequency(r)} below threshold {threshold}"
        )
    return {r} | {v for v in g.neighbors(r) if g.frequencies[v] >= threshold}


def build_hotspot_network(g: HotspotGraph, seeds: Sequence[str], threshold: float) -> HotspotGraph:
    """Grow the hotspot network outward from ``seeds`` until no qualifying neighbor is left.

    Returns the subgraph of ``g`` induced by the retained vertices.
    """
    if not seeds:
        raise ValidationError("at least one seed is required")
    adj: dict[str, set[str]] = {v: set() for v in g.frequencies}
    for u, v in g.edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    for s in seeds:
        if s not in g:
            raise UnknownVertexError(s)
        if g.frequencies[s] < threshold:
            raise ValidationError(f"seed {s!r} has frequency {g.frequencies[s]} below threshold {threshold}")
    kept = set(seeds)
    frontier = list(kept)
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in kept and g.frequencies[v] >= threshold:
                    kept.add(v)
                    nxt.append(v)
        frontier = nxt
    return g.subgraph(kept)


def percentile_threshold(g: HotspotGraph, q: float = 90.0) -> float:
    """The ``q``-th percentile of vertex frequencies (linear interpolation)."""
    if not len(g):
        raise ValidationError("graph has no vertices")
    if not 0 <= q <= 100:
        raise ValidationError(f"percentile must be in [0, 100], got {q}")
    return float(np.percentile(np.fromiter(g.frequencies.values(), dtype=float), q))


def default_seeds(g: HotspotGraph, threshold: float) -> list[str]:
    return [v for v in g.vertices if g.frequencies[v] >= threshold]


def build_transition_matrix(g: HotspotGraph) -> TransitionMatrix:
    """Normalize outgoing weights per vertex; sinks get an all-zero column."""
    order = g.vertices
    w = weight_matrix(g, order)
    out = w.sum(axis=0)
    np.divide(w, out, out=w, where=out > 0)
    return TransitionMatrix(order, w)


def equilibrium(
    tm: TransitionMatrix,
    start: np.ndarray | None = None,
    tol: float = 1e-12,
    max_steps: int = 10_000,
) -> tuple[np.ndarray, int]:
    """Repeatedly apply ``tm`` to a distribution until it stops changing.

    Starts from the uniform distribution unless ``start`` is given. Returns
    the final vector and the number of steps taken. Mass leaks out through
    sink columns, so the result need not sum to 1.
    """
    n = len(tm.order)
    p = np.full(n, 1.0 / n) if start is None else np.asarray(start, dtype=float)
    for step in range(1, max_steps + 1):
        q = tm.entries @ p
        if np.abs(q - p).max() < tol:
            return q, step
        p = q
    return p, max_steps


def write_matrix_csv(tm: TransitionMatrix, path: str | Path) -> None:
    """Square CSV: header row and first column carry the poi ids, cell (dst, src)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["poi_id", *tm.order])
        for j, dst in enumerate(tm.order):
            w.writerow([dst, *(f"{x:.12g}" for x in tm.entries[j])])


def read_matrix_csv(path: str | Path) -> TransitionMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty matrix file")
    order = tuple(rows[0][1:])
    if [r[0] for r in rows[1:]] != list(order):
        raise ValidationError(f"{path}: row labels do not match header")
    return TransitionMatrix(order, np.array([[float(x) for x in r[1:]] for r in rows[1:]]).reshape(len(order), len(order)))


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: HotspotGraph, name: str = "hotspots") -> str:
    """Graphviz source; edges labeled with their weight."""
    lines = [f"digraph {_dot_id(name)} {{"]
    for v in g.vertices:
        lines.append(f"  {_dot_id(v)} [frequency={format_number(g.frequencies[v])}];")
    for u, v in sorted(g.edges):
        w = format_number(g.edges[(u, v)])
        lines.append(f"  {_dot_id(u)} -> {_dot_id(v)} [label={_dot_id(w)}, weight={w}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_geojson(g: HotspotGraph, pois: Iterable[Poi]) -> dict:
    """FeatureCollection with a Point per vertex and a LineString per edge."""
    where = {p.poi_id: p for p in pois}
    missing = [v for v in g.vertices if v not in where]
    if missing:
        raise ValidationError(f"no coordinates for vertices {missing[:5]}")
    features = []
    for v in g.vertices:
        p = where[v]
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [p.position.lon, p.position.lat]},
            "properties": {"poi_id": v, "name": p.name, "frequency": g.frequencies[v]},
        })
    for u, v in sorted(g.edges):
        a, b = where[u].position, where[v].position
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [[a.lon, a.lat], [b.lon, b.lat]]},
            "properties": {"src": u, "dst": v, "weight": g.edges[(u, v)]},
        })
    return {"type": "FeatureCollection", "features": features}


def write_geojson(g: HotspotGraph, pois: Iterable[Poi], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_geojson(g, pois), fh, indent=2)
        fh.write("\n")
