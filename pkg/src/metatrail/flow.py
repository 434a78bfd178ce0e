"""Flow directions and capacities on a hotspot network."""

from __future__ import annotations

import csv
import enum
import json
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .core import Edge, HotspotGraph, format_number, in_weight, out_weight
from .errors import UnknownVertexError, ValidationError

RESIDUAL_EPS = 1e-12


@dataclass(frozen=True)
class FlowResult:
    """Maximum flow between two hotspots and a minimum cut certifying it.

    ``flows`` gives the flow on every edge that carries any.
    """

    source: str
    sink: str
    max_flow: float
    flows: dict[Edge, float]
    min_cut_edges: frozenset[Edge]
    saturated: frozenset[Edge]
    source_side: frozenset[str]


@dataclass(frozen=True)
class PairDirection:
    u: str
    v: str
    forward: float
    backward: float

    @property
    def imbalance(self) -> float:
        return self.forward - self.backward

    @property
    def balanced(self) -> bool:
        return math.isclose(self.forward, self.backward, rel_tol=0.0, abs_tol=1e-12)

    @property
    def dominant(self) -> tuple[str, str] | None:
        if self.balanced:
            return None
        return (self.u, self.v) if self.imbalance > 0 else (self.v, self.u)


@dataclass(frozen=True)
class DirectionReport:
    """Net outflow per vertex and the dominant direction of every connected pair."""

    net: dict[str, float]
    pairs: tuple[PairDirection, ...]


class BoundStatus(str, enum.Enum):
    UNDERFLOW = "underflow"
    WITHIN = "within"
    OVERFLOW = "overflow"


@dataclass(frozen=True)
class BoundReport:
    max_flow: float
    lower: float
    upper: float
    status: BoundStatus


def direction_report(g: HotspotGraph) -> DirectionReport:
    net = {v: out_weight(g, v) - in_weight(g, v) for v in g.vertices}
    pairs = {}
    for (a, b) in g.edges:
        if a == b:
            continue
        u, v = min(a, b), max(a, b)
        if (u, v) not in pairs:
            pairs[(u, v)] = PairDirection(u, v, g.weight(u, v), g.weight(v, u))
    return DirectionReport(net, tuple(pairs[k] for k in sorted(pairs)))


def max_flow(g: HotspotGraph, source: str, sink: str) -> FlowResult:
    """Edmonds-Karp: augment along shortest residual paths until none remain.

    Edge weights are the capacities. The minimum cut consists of the edges
    leaving the set of vertices still reachable from ``source`` in the final
    residual network.
    """
    for v in (source, sink):
        if v not in g:
            raise UnknownVertexError(v)
    if source == sink:
        raise ValidationError("source and sink must differ")

    cap: dict[str, dict[str, float]] = {v: {} for v in g.vertices}
    for (u, v), w in g.edges.items():
        if u != v:
            cap[u][v] = cap[u].get(v, 0.0) + w
            cap[v].setdefault(u, 0.0)
    # net flow, skew-symmetric: flow[u][v] == -flow[v][u]
    flow: dict[str, dict[str, float]] = {u: dict.fromkeys(nb, 0.0) for u, nb in cap.items()}

    def residual(u: str, v: str) -> float:
        return cap[u][v] - flow[u][v]

    def bfs() -> dict[str, str | None]:
        parent: dict[str, str | None] = {source: None}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in cap[u]:
                if v not in parent and residual(u, v) > RESIDUAL_EPS:
                    parent[v] = u
                    if v == sink:
                        return parent
                    queue.append(v)
        return parent

    total = 0.0
    while True:
        parent = bfs()
        if sink not in parent:
            break
        path = []
        v = sink
        while parent[v] is not None:
            path.append((parent[v], v))
            v = parent[v]
        push = min(residual(u, v) for u, v in path)
        for u, v in path:
            flow[u][v] += push
            flow[v][u] -= push
        total += push

    reach = frozenset(parent)
    edge_flows: dict[Edge, float] = {}
    for (u, v), w in g.edges.items():
        if u == v:
            continue
        f = flow[u][v]
        if f > 0:
            edge_flows[(u, v)] = min(f, w)
    cut = frozenset(e for e in g.edges if e[0] in reach and e[1] not in reach)
    saturated = frozenset(
        e for e, f in edge_flows.items() if math.isclose(f, g.edges[e], rel_tol=1e-12, abs_tol=1e-12)
    )
    return FlowResult(source, sink, total, edge_flows, cut, saturated, reach)


def check_capacity_bounds(f: FlowResult, lower: float, upper: float) -> BoundReport:
    """Classify the maximum flow against inclusive ``[lower, upper]`` bounds."""
    if lower < 0:
        raise ValidationError(f"lower bound must be >= 0, got {lower}")
    if lower > upper:
        raise ValidationError(f"lower bound {lower} exceeds upper bound {upper}")
    if f.max_flow < lower:
        status = BoundStatus.UNDERFLOW
    elif f.max_flow > upper:
        status = BoundStatus.OVERFLOW
    else:
        status = BoundStatus.WITHIN
    return BoundReport(f.max_flow, lower, upper, status)


def flow_to_dict(f: FlowResult, bounds: BoundReport | None = None) -> dict:
    out = {
        "source": f.source,
        "sink": f.sink,
        "max_flow": f.max_flow,
        "min_cut_edges": [[u, v] for u, v in sorted(f.min_cut_edges)],
        "saturated": [[u, v] for u, v in sorted(f.saturated)],
        "flows": [{"src": u, "dst": v, "flow": x} for (u, v), x in sorted(f.flows.items())],
    }
    if bounds is not None:
        out["bounds"] = {"lower": bounds.lower, "upper": bounds.upper, "status": bounds.status.value}
    return out


def write_flow_json(f: FlowResult, path: str | Path, bounds: BoundReport | None = None,
                    directions: DirectionReport | None = None) -> None:
    obj = flow_to_dict(f, bounds)
    if directions is not None:
        obj["net_flow"] = {v: x for v, x in sorted(directions.net.items())}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def write_directions_csv(r: DirectionReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "v", "forward_weight", "backward_weight", "imbalance"])
        for p in r.pairs:
            w.writerow([p.u, p.v, format_number(p.forward), format_number(p.backward),
                        format_number(p.imbalance)])
