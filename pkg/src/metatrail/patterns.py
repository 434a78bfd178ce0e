"""Visiting orders inside a subnetwork and between subnetworks."""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path

from .clustering import AffinitySubnetwork, Clustering
from .core import Visit, VisitSequence
from .errors import ValidationError


@dataclass(frozen=True, slots=True)
class SequentialPattern:
    """A visiting order and the number of trails that follow it."""

    sequence: tuple[str, ...]
    support: int

    def __post_init__(self) -> None:
        if not self.sequence:
            raise ValidationError("pattern sequence is empty")
        if any(a == b for a, b in zip(self.sequence, self.sequence[1:])):
            raise ValidationError(f"pattern {self.sequence} repeats a unit back to back")
        if self.support < 1:
            raise ValidationError(f"support must be >= 1, got {self.support}")


def _latest_order(units: Iterable[tuple[str, int]]) -> list[tuple[str, int]]:
    latest: dict[str, int] = {}
    for unit, ts in units:
        if unit not in latest or ts >= latest[unit]:
            latest[unit] = ts
    # stable on equal timestamps: first-seen order of the unit
    return sorted(latest.items(), key=lambda kv: kv[1])


def project_trail(seq: VisitSequence, members: Iterable[str]) -> list[tuple[str, int]]:
    """Visits to ``members`` reduced to one per POI (the latest arrival), in arrival order."""
    members = set(members)
    return _latest_order((v.poi_id, v.enter) for v in seq.visits if v.poi_id in members)


def _aggregate(orders: Iterable[tuple[str, ...]], min_support: int) -> list[SequentialPattern]:
    if min_support < 1:
        raise ValidationError(f"min_support must be >= 1, got {min_support}")
    counts = Counter(o for o in orders if len(o) >= 2)
    kept = [SequentialPattern(seq, n) for seq, n in counts.items() if n >= min_support]
    kept.sort(key=lambda p: (-p.support, p.sequence))
    return kept


def mine_intra_patterns(
    seqs: Iterable[VisitSequence], sub: AffinitySubnetwork, min_support: int = 2
) -> list[SequentialPattern]:
    """Visiting orders over the hotspots of one subnetwork, most supported first."""
    orders = (tuple(u for u, _ in project_trail(s, sub.members)) for s in seqs)
    return _aggregate(orders, min_support)


def relabel(visits: Iterable[Visit], labels: Mapping[str, str]) -> list[tuple[str, int]]:
    """Map visits to cluster ids, merging consecutive visits to the same cluster.

    A merged run keeps the arrival time of its first visit. Visits to POIs
    outside ``labels`` are skipped.
    """
    out: list[tuple[str, int]] = []
    for v in visits:
        lab = labels.get(v.poi_id)
        if lab is None:
            continue
        if out and out[-1][0] == lab:
            continue
        out.append((lab, v.enter))
    return out


def mine_inter_patterns(
    seqs: Iterable[VisitSequence], c: Clustering, min_support: int = 2
) -> list[SequentialPattern]:
    """Visiting orders over whole subnetworks (ids ``cluster:<hub>``), most supported first."""
    labels = c.labels()
    orders = (tuple(u for u, _ in _latest_order(relabel(s.visits, labels))) for s in seqs)
    return _aggregate(orders, min_support)


def patterns_to_dict(patterns: Iterable[SequentialPattern], scope: str, subnetwork: str | None) -> dict:
    if scope not in ("intra", "inter"):
        raise ValidationError(f"scope must be 'intra' or 'inter', got {scope!r}")
    return {
        "scope": scope,
        "subnetwork": subnetwork,
        "patterns": [{"sequence": list(p.sequence), "support": p.support} for p in patterns],
    }


def write_patterns(blocks: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(blocks, fh, indent=2)
        fh.write("\n")
