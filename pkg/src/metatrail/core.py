"""Domain types and the directed weighted graph shared by every analysis step."""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np

from .errors import UnknownVertexError, ValidationError

Edge = tuple[str, str]

STOCHASTIC_TOL = 1e-9


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """WGS84 coordinate in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValidationError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValidationError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValidationError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True, slots=True)
class TrailPoint:
    """One location sample.

    Attributes:
        position: Where the sample was taken.
        timestamp: Unix epoch milliseconds.
        app_label: Opaque tag of the app producing the sample; may be empty.
    """

    position: GeoPoint
    timestamp: int
    app_label: str = ""

    def __post_init__(self) -> None:
        if self.timestamp < 0:
            raise ValidationError(f"negative timestamp {self.timestamp}")


@dataclass(frozen=True, slots=True)
class Metatrail:
    trail_id: str
    points: tuple[TrailPoint, ...]

    def __post_init__(self) -> None:
        if not self.points:
            raise ValidationError(f"trail {self.trail_id!r} has no points")
        ts = [p.timestamp for p in self.points]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValidationError(f"trail {self.trail_id!r} timestamps decrease")


@dataclass(frozen=True, slots=True)
class Poi:
    poi_id: str
    name: str
    position: GeoPoint


@dataclass(frozen=True, slots=True)
class Visit:
    """A maximal stay at one POI: arrival and departure in epoch milliseconds."""

    poi_id: str
    enter: int
    exit: int
    app_label: str = ""

    def __post_init__(self) -> None:
        if self.enter > self.exit:
            raise ValidationError(
                f"visit to {self.poi_id!r} exits ({self.exit}) before it enters ({self.enter})"
            )


@dataclass(frozen=True, slots=True)
class VisitSequence:
    """A trail snapped to POIs."""

    trail_id: str
    visits: tuple[Visit, ...] = ()

    def __post_init__(self) -> None:
        for a, b in zip(self.visits, self.visits[1:]):
            if a.poi_id == b.poi_id:
                raise ValidationError(
                    f"trail {self.trail_id!r}: consecutive visits share POI {a.poi_id!r}"
                )
            if b.enter < a.enter:
                raise ValidationError(f"trail {self.trail_id!r}: visits out of order")


@dataclass(frozen=True)
class HotspotGraph:
    """Directed weighted graph over POI ids.

    ``frequencies`` maps every vertex to its visit frequency and so defines
    the vertex set. ``edges`` maps ``(src, dst)`` to a non-negative weight.
    Both mappings are read-only after construction.
    """

    frequencies: Mapping[str, float]
    edges: Mapping[Edge, float] = field(default_factory=dict)
    _out: Mapping[str, float] = field(init=False, repr=False, compare=False)
    _in: Mapping[str, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        freqs = dict(self.frequencies)
        edges = dict(self.edges)
        for v, f in freqs.items():
            if not isinstance(v, str) or not v:
                raise ValidationError(f"vertex id must be a nonempty string, got {v!r}")
            if f < 0:
                raise ValidationError(f"vertex {v!r} has negative frequency {f}")
        out_w = dict.fromkeys(freqs, 0.0)
        in_w = dict.fromkeys(freqs, 0.0)
        for (u, v), w in edges.items():
            if u not in freqs or v not in freqs:
                raise ValidationError(f"edge ({u!r}, {v!r}) has an endpoint outside the vertex set")
            if not w >= 0:
                raise ValidationError(f"edge ({u!r}, {v!r}) has negative weight {w}")
            out_w[u] += w
            in_w[v] += w
        object.__setattr__(self, "frequencies", MappingProxyType(freqs))
        object.__setattr__(self, "edges", MappingProxyType(edges))
        object.__setattr__(self, "_out", MappingProxyType(out_w))
        object.__setattr__(self, "_in", MappingProxyType(in_w))

    @property
    def directed(self) -> bool:
        return True

    @property
    def vertices(self) -> tuple[str, ...]:
        """Vertex ids in sorted order."""
        return tuple(sorted(self.frequencies))

    def __len__(self) -> int:
        return len(self.frequencies)

    def __contains__(self, v: object) -> bool:
        return v in self.frequencies

    def frequency(self, v: str) -> float:
        try:
            return self.frequencies[v]
        except KeyError:
            raise UnknownVertexError(v) from None

    def weight(self, u: str, v: str) -> float:
        return self.edges.get((u, v), 0.0)

    def neighbors(self, v: str) -> set[str]:
        """In- and out-neighbors of ``v``, self excluded."""
        if v not in self:
            raise UnknownVertexError(v)
        return {b if a == v else a for a, b in self.edges if v in (a, b)} - {v}

    def total_weight(self) -> float:
        return float(sum(self.edges.values()))

    def subgraph(self, keep: Iterable[str]) -> HotspotGraph:
        """Induced subgraph; edges and frequencies are preserved."""
        keep = set(keep)
        for v in keep:
            if v not in self:
                raise UnknownVertexError(v)
        return HotspotGraph(
            {v: self.frequencies[v] for v in keep},
            {e: w for e, w in self.edges.items() if e[0] in keep and e[1] in keep},
        )

    def without_self_loops(self) -> HotspotGraph:
        return HotspotGraph(self.frequencies, {e: w for e, w in self.edges.items() if e[0] != e[1]})


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Column-stochastic transition matrix.

    ``entries[j, i]`` is the probability of moving from ``order[i]`` to
    ``order[j]``. Columns of vertices without outgoing weight are all zero.
    """

    order: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=float)
        n = len(self.order)
        if m.shape != (n, n):
            raise ValidationError(f"matrix shape {m.shape} does not match order of length {n}")
        if len(set(self.order)) != n:
            raise ValidationError("duplicate vertex ids in matrix order")
        if n:
            if m.min() < 0 or m.max() > 1 + STOCHASTIC_TOL:
                raise ValidationError("transition probabilities must lie in [0, 1]")
            sums = m.sum(axis=0)
            bad = (np.abs(sums) > STOCHASTIC_TOL) & (np.abs(sums - 1.0) > STOCHASTIC_TOL)
            if bad.any():
                col = self.order[int(np.flatnonzero(bad)[0])]
                raise ValidationError(f"column {col!r} sums to neither 0 nor 1")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def index(self, v: str) -> int:
        try:
            return self.order.index(v)
        except ValueError:
            raise UnknownVertexError(v) from None

    def probability(self, src: str, dst: str) -> float:
        return float(self.entries[self.index(dst), self.index(src)])

    def column(self, src: str) -> dict[str, float]:
        """Nonzero outgoing probabilities of ``src`` keyed by destination."""
        col = self.entries[:, self.index(src)]
        return {self.order[j]: float(col[j]) for j in np.flatnonzero(col)}


def graph_from_edge_list(
    edges: Iterable[tuple[str, str, float]],
    frequencies: Mapping[str, float] | None = None,
) -> HotspotGraph:
    """Build a graph from ``(src, dst, weight)`` triples.

    Duplicate pairs have their weights summed. The vertex set is the union of
    edge endpoints and the keys of ``frequencies``; vertices without a given
    frequency get 0.
    """
    merged: dict[Edge, float] = {}
    freqs: dict[str, float] = {}
    for src, dst, w in edges:
        for v in (src, dst):
            if not isinstance(v, str) or not v:
                raise ValidationError(f"edge ({src!r}, {dst!r}): ids must be nonempty strings")
        w = float(w)
        if not w >= 0:
            raise ValidationError(f"edge ({src!r}, {dst!r}) has negative weight {w}")
        merged[(src, dst)] = merged.get((src, dst), 0.0) + w
        freqs.setdefault(src, 0)
        freqs.setdefault(dst, 0)
    if frequencies:
        freqs.update(frequencies)
    return HotspotGraph(freqs, merged)


def out_weight(g: HotspotGraph, v: str) -> float:
    """Total weight of edges leaving ``v``."""
    if v not in g:
        raise UnknownVertexError(v)
    return g._out[v]


def in_weight(g: HotspotGraph, v: str) -> float:
    """Total weight of edges entering ``v``."""
    if v not in g:
        raise UnknownVertexError(v)
    return g._in[v]


def weight_matrix(g: HotspotGraph, order: tuple[str, ...] | None = None) -> np.ndarray:
    """Dense matrix with ``W[j, i] = weight(i -> j)``, rows/columns in ``order``."""
    order = g.vertices if order is None else order
    idx = {v: k for k, v in enumerate(order)}
    w = np.zeros((len(order), len(order)))
    if g.edges:
        src = np.fromiter((idx[e[0]] for e in g.edges), dtype=np.intp, count=len(g.edges))
        dst = np.fromiter((idx[e[1]] for e in g.edges), dtype=np.intp, count=len(g.edges))
        w[dst, src] = np.fromiter(g.edges.values(), dtype=float, count=len(g.edges))
    return w


def format_number(x: float) -> str:
    """Shortest text that round-trips ``x``; integral values print without a decimal point."""
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def frequency_sidecar(path: str | Path) -> Path:
    """Path of the vertex-frequency CSV that accompanies an edge-list CSV."""
    path = Path(path)
    return path.with_name(path.stem + ".vertices.csv")


def write_graph_csv(g: HotspotGraph, path: str | Path) -> tuple[Path, Path]:
    """Write ``src,dst,weight`` plus a ``poi_id,frequency`` sidecar. Returns both paths."""
    path = Path(path)
    side = frequency_sidecar(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst", "weight"])
        for (u, v) in sorted(g.edges):
            w.writerow([u, v, format_number(g.edges[(u, v)])])
    with open(side, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["poi_id", "frequency"])
        for v in g.vertices:
            w.writerow([v, format_number(g.frequencies[v])])
    return path, side


def _number(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"{where}: {text!r} is not a number") from None


def read_graph_csv(path: str | Path) -> HotspotGraph:
    """Inverse of :func:`write_graph_csv`. The sidecar is optional."""
    path = Path(path)
    edges = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"src", "dst", "weight"} <= set(reader.fieldnames):
            raise ValidationError(f"{path}: expected header src,dst,weight")
        for lineno, row in enumerate(reader, start=2):
            edges.append((row["src"], row["dst"], _number(row["weight"], f"{path}:{lineno}")))
    freqs: dict[str, float] = {}
    side = frequency_sidecar(path)
    if side.exists():
        with open(side, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"poi_id", "frequency"} <= set(reader.fieldnames):
                raise ValidationError(f"{side}: expected header poi_id,frequency")
            for lineno, row in enumerate(reader, start=2):
                f = _number(row["frequency"], f"{side}:{lineno}")
                freqs[row["poi_id"]] = int(f) if f.is_integer() else f
    return graph_from_edge_list(edges, freqs)
