"""Affinity subnetworks: Markov clustering, a K-means baseline, hubs and contraction."""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import HotspotGraph, TransitionMatrix, weight_matrix
from .errors import ValidationError
from .hotspot import build_transition_matrix

log = logging.getLogger(__name__)

PRUNE_BELOW = 1e-12
CLUSTER_PREFIX = "cluster:"


@dataclass(frozen=True, slots=True)
class MclParams:
    """Markov clustering settings.

    Attributes:
        expansion_power: Matrix power taken at each step.
        inflation_power: Entrywise power applied before column renormalization.
        max_iterations: Hard cap on the number of steps.
        convergence_eps: Stop once no entry changes by this much in one step.
        self_loop_weight: Added to every vertex's self-loop before normalizing.
    """

    expansion_power: int = 2
    inflation_power: float = 2.0
    max_iterations: int = 500
    convergence_eps: float = 1e-9
    self_loop_weight: float = 1.0

    def __post_init__(self) -> None:
        if not isinstance(self.expansion_power, (int, np.integer)) or self.expansion_power < 1:
            raise ValidationError(f"expansion_power must be an integer >= 1, got {self.expansion_power}")
        if not (self.inflation_power >= 1 and math.isfinite(self.inflation_power)):
            raise ValidationError(f"inflation_power must be >= 1, got {self.inflation_power}")
        if self.max_iterations < 1:
            raise ValidationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.convergence_eps > 0:
            raise ValidationError(f"convergence_eps must be > 0, got {self.convergence_eps}")
        if not self.self_loop_weight >= 0:
            raise ValidationError(f"self_loop_weight must be >= 0, got {self.self_loop_weight}")


@dataclass(frozen=True)
class AffinitySubnetwork:
    """A cluster of hotspots with its hub.

    ``edges`` holds the induced edge weights; it is empty when the
    subnetwork was loaded from a clustering file.
    """

    members: tuple[str, ...]
    hub: str
    edges: Mapping[tuple[str, str], float] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.members:
            raise ValidationError("subnetwork has no members")
        object.__setattr__(self, "members", tuple(sorted(self.members)))
        if self.hub not in self.members:
            raise ValidationError(f"hub {self.hub!r} is not a member")

    @property
    def cluster_id(self) -> str:
        return CLUSTER_PREFIX + self.hub


@dataclass(frozen=True)
class Clustering:
    """A partition of a graph's vertices into subnetworks.

    ``converged`` and ``iterations`` describe the run that produced it.
    """

    subnetworks: tuple[AffinitySubnetwork, ...]
    converged: bool = True
    iterations: int = 0

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for sub in self.subnetworks:
            overlap = seen.intersection(sub.members)
            if overlap:
                raise ValidationError(f"vertices {sorted(overlap)[:5]} belong to more than one subnetwork")
            seen.update(sub.members)

    def __len__(self) -> int:
        return len(self.subnetworks)

    def labels(self) -> dict[str, str]:
        """Map each member to its subnetwork's cluster id."""
        return {v: s.cluster_id for s in self.subnetworks for v in s.members}

    def members(self) -> set[str]:
        return {v for s in self.subnetworks for v in s.members}


def find_hub(g: HotspotGraph, members: Iterable[str]) -> str:
    """Member with the most incident edges inside the group, ties to the smallest id."""
    members = set(members)
    degree = dict.fromkeys(members, 0)
    for u, v in g.edges:
        if u != v and u in members and v in members:
            degree[u] += 1
            degree[v] += 1
    return min(degree, key=lambda v: (-degree[v], v))


def subnetwork(g: HotspotGraph, members: Iterable[str]) -> AffinitySubnetwork:
    members = set(members)
    induced = {e: w for e, w in g.edges.items() if e[0] in members and e[1] in members}
    return AffinitySubnetwork(tuple(members), find_hub(g, members), induced)


def _from_groups(g: HotspotGraph, groups: Iterable[Iterable[str]], converged: bool, iterations: int) -> Clustering:
    subs = [subnetwork(g, grp) for grp in groups]
    subs.sort(key=lambda s: s.members[0])
    return Clustering(tuple(subs), converged, iterations)


def initial_distribution(g: HotspotGraph) -> np.ndarray:
    """Uniform starting distribution over the vertices (in sorted order)."""
    if not len(g):
        raise ValidationError("graph has no vertices")
    return np.full(len(g), 1.0 / len(g))


def _normalize_columns(m: np.ndarray) -> np.ndarray:
    s = m.sum(axis=0)
    np.divide(m, s, out=m, where=s > 0)
    return m


def _step(m: np.ndarray, expansion: int, inflation: float) -> np.ndarray:
    e = m.copy() if expansion == 1 else np.linalg.matrix_power(m, expansion)
    if inflation == 2.0:
        e *= e
    elif inflation != 1.0:
        np.power(e, inflation, out=e)
    e[e < PRUNE_BELOW] = 0.0
    return _normalize_columns(e)


def mcl_step(m: TransitionMatrix, p: MclParams = MclParams()) -> TransitionMatrix:
    """One expansion followed by one inflation."""
    return TransitionMatrix(m.order, _step(np.array(m.entries), p.expansion_power, p.inflation_power))


def _attractor_groups(m: np.ndarray) -> list[list[int]]:
    """Group vertex indices by the attractor holding most of their column mass.

    Attractors that share support are merged. A vertex whose column is empty
    forms its own group.
    """
    n = m.shape[0]
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    mass = m.sum(axis=0)
    home = np.argmax(m, axis=0)  # first maximum = smallest id in sorted order
    for i in range(n):
        if mass[i] > 0:
            union(i, int(home[i]))
    attractors = np.flatnonzero(m.sum(axis=1) > 0)
    sub = m[np.ix_(attractors, attractors)]
    for a, b in zip(*np.nonzero(sub)):
        union(int(attractors[a]), int(attractors[b]))

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def markov_cluster(g: HotspotGraph, p: MclParams = MclParams()) -> Clustering:
    """Markov clustering of ``g``.

    Self-loops are added, columns normalized, and expansion/inflation
    repeated until the largest entry change drops below
    ``p.convergence_eps`` or ``p.max_iterations`` steps have run. A run that
    hits the cap is returned with ``converged=False``.
    """
    if not len(g):
        raise ValidationError("graph has no vertices")
    order = g.vertices
    m = weight_matrix(g, order)
    m[np.diag_indices_from(m)] += p.self_loop_weight
    m = _normalize_columns(m)

    converged = False
    it = 0
    while it < p.max_iterations:
        nxt = _step(m, p.expansion_power, p.inflation_power)
        it += 1
        delta = np.abs(nxt - m).max()
        m = nxt
        if delta < p.convergence_eps:
            converged = True
            break
    if not converged:
        log.warning("MCL stopped at %d iterations without converging", it)
    groups = [[order[i] for i in grp] for grp in _attractor_groups(m)]
    return _from_groups(g, groups, converged, it)


def kmeans_cluster(
    g: HotspotGraph,
    k: int,
    iters: int = 500,
    seed: int = 0,
    tol: float | None = None,
) -> Clustering:
    """Lloyd's K-means on the columns of the transition matrix.

    Initial centroids are ``k`` distinct vertices drawn with ``seed``. All
    ``iters`` iterations are run unless ``tol`` is given, in which case the
    loop stops once no centroid moves by more than ``tol``. An emptied
    cluster takes the point farthest from its current centroid.
    """
    n = len(g)
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of vertices ({n})")
    if iters < 1:
        raise ValidationError(f"iters must be >= 1, got {iters}")
    order = g.vertices
    if k == n:
        # zero-cost optimum; sidesteps ties between identical feature vectors
        return _from_groups(g, [[v] for v in order], True, 0)

    x = np.ascontiguousarray(build_transition_matrix(g).entries.T)
    rng = np.random.default_rng(seed)
    centroids = x[np.sort(rng.choice(n, size=k, replace=False))].copy()
    sq = np.einsum("ij,ij->i", x, x)

    converged = tol is None
    it = 0
    labels = np.zeros(n, dtype=np.intp)
    for it in range(1, iters + 1):
        d = sq[:, None] - 2.0 * (x @ centroids.T) + np.einsum("ij,ij->i", centroids, centroids)[None, :]
        labels = np.argmin(d, axis=1)
        dist = d[np.arange(n), labels]
        new = np.empty_like(centroids)
        taken: set[int] = set()
        for j in range(k):
            mask = labels == j
            if mask.any():
                new[j] = x[mask].mean(axis=0)
                continue
            for far in np.argsort(-dist, kind="stable"):
                if int(far) not in taken:
                    break
            taken.add(int(far))
            labels[far] = j
            dist[far] = 0.0
            new[j] = x[far]
        shift = np.abs(new - centroids).max()
        centroids = new
        if tol is not None and shift <= tol:
            converged = True
            break

    groups: dict[int, list[str]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(order[i])
    return _from_groups(g, groups.values(), converged, it)


def check_partition(g: HotspotGraph, c: Clustering) -> None:
    """Raise unless ``c`` covers exactly the vertices of ``g``."""
    covered = c.members()
    missing = set(g.frequencies) - covered
    extra = covered - set(g.frequencies)
    if missing or extra:
        raise ValidationError(
            f"clustering is not a partition of the graph: missing {sorted(missing)[:5]}, "
            f"unknown {sorted(extra)[:5]}"
        )


def contract(g: HotspotGraph, c: Clustering) -> HotspotGraph:
    """Collapse every subnetwork to one vertex ``cluster:<hub>``.

    Inter-cluster weights are summed, intra-cluster weights dropped, and
    member frequencies summed.
    """
    check_partition(g, c)
    label = c.labels()
    freqs: dict[str, float] = {}
    for sub in c.subnetworks:
        freqs[sub.cluster_id] = sum(g.frequencies[v] for v in sub.members)
    edges: dict[tuple[str, str], float] = {}
    for (u, v), w in g.edges.items():
        a, b = label[u], label[v]
        if a != b:
            edges[(a, b)] = edges.get((a, b), 0.0) + w
    return HotspotGraph(freqs, edges)


def clustering_to_dict(c: Clustering) -> dict:
    return {
        "subnetworks": [{"hub": s.hub, "members": list(s.members)} for s in c.subnetworks],
        "converged": c.converged,
        "iterations": c.iterations,
    }


def write_clustering(c: Clustering, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(clustering_to_dict(c), fh, indent=2)
        fh.write("\n")


def read_clustering(path: str | Path) -> Clustering:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        subs = tuple(
            AffinitySubnetwork(tuple(str(m) for m in s["members"]), str(s["hub"]))
            for s in obj["subnetworks"]
        )
        return Clustering(subs, bool(obj.get("converged", True)), int(obj.get("iterations", 0)))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: bad clustering file ({exc})") from None


def singleton_clustering(g: HotspotGraph, vertices: Sequence[str] | None = None) -> Clustering:
    """Every vertex in its own subnetwork."""
    vs = g.vertices if vertices is None else sorted(vertices)
    return _from_groups(g, [[v] for v in vs], True, 0)
