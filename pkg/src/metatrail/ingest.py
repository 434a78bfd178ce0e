"""Reading trails and POI catalogs, and snapping trails onto POIs."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import GeoPoint, Metatrail, Poi, TrailPoint, Visit, VisitSequence
from .errors import TrailParseError, ValidationError

log = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True, slots=True)
class SnapConfig:
    """Parameters for :func:`snap_trail`.

    Attributes:
        radius_m: A point snaps to the nearest POI no farther than this.
        min_dwell_ms: Visits lasting less than this are discarded.
    """

    radius_m: float = 50.0
    min_dwell_ms: int = 0

    def __post_init__(self) -> None:
        if not (self.radius_m > 0 and math.isfinite(self.radius_m)):
            raise ValidationError(f"radius_m must be a positive number, got {self.radius_m}")
        if self.min_dwell_ms < 0:
            raise ValidationError(f"min_dwell_ms must be >= 0, got {self.min_dwell_ms}")


@dataclass
class ParseReport:
    """Outcome of :func:`parse_trails`: accepted trails plus per-line diagnostics."""

    trails: list[Metatrail] = field(default_factory=list)
    errors: list[tuple[int, str]] = field(default_factory=list)
    warnings: list[tuple[int, str]] = field(default_factory=list)


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters. Works elementwise on numpy arrays."""
    lat1, lon1, lat2, lon2 = map(np.radians, (lat1, lon1, lat2, lon2))
    a = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _parse_point(raw, k: int) -> TrailPoint:
    if not isinstance(raw, dict):
        raise ValidationError(f"point {k} is not an object")
    for key in ("lat", "lon", "ts"):
        if key not in raw:
            raise ValidationError(f"point {k} lacks {key!r}")
    if not (_is_number(raw["lat"]) and _is_number(raw["lon"])):
        raise ValidationError(f"point {k}: lat/lon must be numbers")
    ts = raw["ts"]
    if isinstance(ts, float) and ts.is_integer():
        ts = int(ts)
    if not isinstance(ts, int) or isinstance(ts, bool):
        raise ValidationError(f"point {k}: ts must be an integer (epoch ms)")
    app = raw.get("app", "")
    if not isinstance(app, str):
        raise ValidationError(f"point {k}: app must be a string")
    return TrailPoint(GeoPoint(float(raw["lat"]), float(raw["lon"])), ts, app)


def parse_trails(lines: Iterable[str]) -> ParseReport:
    """Parse line-delimited JSON trails.

    Each nonblank line is ``{"trail_id": str, "points": [{"lat", "lon",
    "ts", "app"}]}``. Bad lines are recorded in ``report.errors`` and
    skipped; points are sorted by timestamp, with a warning when the input
    order was different.

    Raises:
        TrailParseError: if not a single trail is valid.
    """
    report = ParseReport()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValidationError("record is not a JSON object")
            trail_id = obj.get("trail_id")
            if not isinstance(trail_id, str) or not trail_id:
                raise ValidationError("trail_id must be a nonempty string")
            raw_points = obj.get("points")
            if not isinstance(raw_points, list) or not raw_points:
                raise ValidationError("points must be a nonempty list")
            points = [_parse_point(p, k) for k, p in enumerate(raw_points)]
        except (json.JSONDecodeError, ValidationError) as exc:
            report.errors.append((lineno, str(exc)))
            log.warning("line %d rejected: %s", lineno, exc)
            continue
        ordered = sorted(points, key=lambda p: p.timestamp)
        if ordered != points:
            msg = f"trail {trail_id!r}: points re-sorted by timestamp"
            report.warnings.append((lineno, msg))
            log.warning("line %d: %s", lineno, msg)
        report.trails.append(Metatrail(trail_id, tuple(ordered)))
    if not report.trails:
        raise TrailParseError("no valid trails", report.errors)
    return report


def read_trails(path: str | Path) -> ParseReport:
    with open(path, encoding="utf-8") as fh:
        return parse_trails(fh)


def read_pois(path: str | Path) -> list[Poi]:
    """Read a ``poi_id,name,lat,lon`` CSV catalog."""
    pois: list[Poi] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"poi_id", "name", "lat", "lon"} <= set(reader.fieldnames):
            raise ValidationError(f"{path}: expected header poi_id,name,lat,lon")
        for lineno, row in enumerate(reader, start=2):
            pid = row["poi_id"]
            if not pid:
                raise ValidationError(f"{path}:{lineno}: empty poi_id")
            if pid in seen:
                raise ValidationError(f"{path}:{lineno}: duplicate poi_id {pid!r}")
            try:
                pos = GeoPoint(float(row["lat"]), float(row["lon"]))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            seen.add(pid)
            pois.append(Poi(pid, row["name"], pos))
    return pois


def _label(counts: Counter) -> str:
    # most frequent label, ties to the lexicographically smallest
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def nearest_pois(trail: Metatrail, pois: Sequence[Poi], radius_m: float) -> list[str | None]:
    """For each trail point, the nearest POI within ``radius_m`` (ties to the smaller id) or None."""
    if not pois:
        raise ValidationError("POI catalog is empty")
    catalog = sorted(pois, key=lambda p: p.poi_id)
    plat = np.array([p.position.lat for p in catalog])
    plon = np.array([p.position.lon for p in catalog])
    lat = np.array([p.position.lat for p in trail.points])
    lon = np.array([p.position.lon for p in trail.points])
    d = haversine_m(lat[:, None], lon[:, None], plat[None, :], plon[None, :])
    best = np.argmin(d, axis=1)  # first minimum -> smaller poi_id
    near = d[np.arange(len(best)), best] <= radius_m
    return [catalog[k].poi_id if ok else None for k, ok in zip(best.tolist(), near.tolist())]


def snap_trail(trail: Metatrail, pois: Sequence[Poi], cfg: SnapConfig = SnapConfig()) -> VisitSequence:
    """Turn a trail into POI visits.

    Every point goes to the nearest POI within ``cfg.radius_m`` or is
    dropped. Consecutive snapped points at one POI form a single visit;
    dropped points in between do not break the run. The visit's app label
    is the most frequent one among its points (ties to the smallest).
    """
    # runs of [poi_id, enter, exit, label counter]
    runs: list[list] = []
    for pt, pid in zip(trail.points, nearest_pois(trail, pois, cfg.radius_m)):
        if pid is None:
            continue
        if runs and runs[-1][0] == pid:
            runs[-1][2] = pt.timestamp
            runs[-1][3][pt.app_label] += 1
        else:
            runs.append([pid, pt.timestamp, pt.timestamp, Counter([pt.app_label])])

    kept: list[list] = []
    for run in runs:
        if run[2] - run[1] < cfg.min_dwell_ms:
            continue
        if kept and kept[-1][0] == run[0]:
            kept[-1][2] = run[2]
            kept[-1][3] += run[3]
        else:
            kept.append(run)
    return VisitSequence(trail.trail_id, tuple(Visit(p, a, b, _label(c)) for p, a, b, c in kept))


def visit_frequency(seqs: Iterable[VisitSequence]) -> dict[str, int]:
    """Number of visits (not trails) per POI."""
    counts: Counter[str] = Counter()
    for seq in seqs:
        counts.update(v.poi_id for v in seq.visits)
    return dict(sorted(counts.items()))


def visits_to_json(seq: VisitSequence) -> str:
    return json.dumps(
        {
            "trail_id": seq.trail_id,
            "visits": [
                {"poi_id": v.poi_id, "enter": v.enter, "exit": v.exit, "app": v.app_label}
                for v in seq.visits
            ],
        }
    )


def write_visits(seqs: Iterable[VisitSequence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq in seqs:
            fh.write(visits_to_json(seq) + "\n")


def read_visits(path: str | Path) -> list[VisitSequence]:
    seqs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                visits = tuple(
                    Visit(str(v["poi_id"]), int(v["enter"]), int(v["exit"]), str(v.get("app", "")))
                    for v in obj["visits"]
                )
                seqs.append(VisitSequence(str(obj["trail_id"]), visits))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad visit record ({exc})") from None
    return seqs
