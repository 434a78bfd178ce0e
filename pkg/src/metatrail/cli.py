"""Command-line pipeline: snap -> hotspot -> cluster -> patterns -> flow, plus bench.

Exit codes: 0 success, 2 invalid input, 1 internal error. Defaults can be
set in a ``key=value`` file passed with ``--config``; explicit flags win.
``METATRAIL_SEED`` sets the default seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from .clustering import (
    MclParams,
    contract,
    kmeans_cluster,
    markov_cluster,
    read_clustering,
    write_clustering,
)
from .core import read_graph_csv, write_graph_csv
from .errors import TrailParseError, UnknownVertexError, ValidationError
from .flow import check_capacity_bounds, direction_report, max_flow, write_directions_csv, write_flow_json
from .hotspot import (
    build_hotspot_network,
    build_transition_matrix,
    default_seeds,
    percentile_threshold,
    to_dot,
    transition_graph,
    write_geojson,
    write_matrix_csv,
)
from .ingest import SnapConfig, nearest_pois, read_pois, read_trails, read_visits, snap_trail, write_visits
from .patterns import mine_inter_patterns, mine_intra_patterns, patterns_to_dict, write_patterns

log = logging.getLogger("metatrail")

SEED_ENV = "METATRAIL_SEED"


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _csv_strings(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{SEED_ENV}={raw!r} is not an integer") from None


def cmd_snap(args) -> int:
    cfg = SnapConfig(args.radius_m, args.min_dwell_ms)
    report = read_trails(args.trails)
    for lineno, msg in report.errors:
        print(f"{args.trails}:{lineno}: {msg}", file=sys.stderr)
    pois = read_pois(args.pois)
    seqs, dropped = [], 0
    for trail in report.trails:
        dropped += sum(pid is None for pid in nearest_pois(trail, pois, cfg.radius_m))
        seqs.append(snap_trail(trail, pois, cfg))
    write_visits(seqs, args.out)
    n_visits = sum(len(s.visits) for s in seqs)
    print(f"trails read: {len(report.trails)}  rejected lines: {len(report.errors)}  "
          f"points dropped: {dropped}  visits emitted: {n_visits}")
    return 0


def cmd_hotspot(args) -> int:
    seqs = read_visits(args.visits)
    full = transition_graph(seqs, args.app)
    if not len(full):
        log.warning("empty network: no visits%s", f" with app label {args.app!r}" if args.app else "")
        net = full
        threshold = 0.0
    else:
        threshold = (args.threshold if args.threshold is not None
                     else percentile_threshold(full, args.threshold_percentile))
        seeds = args.seeds if args.seeds else default_seeds(full, threshold)
        net = build_hotspot_network(full, seeds, threshold)

    if args.format == "csv":
        write_graph_csv(net, args.out_graph)
    elif args.format == "dot":
        Path(args.out_graph).write_text(to_dot(net), encoding="utf-8")
    else:
        if not args.pois:
            raise ValidationError("--format geojson needs --pois")
        write_geojson(net, read_pois(args.pois), args.out_graph)
    if args.out_matrix:
        write_matrix_csv(build_transition_matrix(net), args.out_matrix)
    if args.figure:
        if not args.pois:
            raise ValidationError("--figure needs --pois")
        from .plotting import plot_network
        plot_network(net, read_pois(args.pois), args.figure)
    print(f"threshold: {threshold:g}  vertices: {len(net)}  edges: {len(net.edges)}")
    return 0


def cmd_cluster(args) -> int:
    g = read_graph_csv(args.graph)
    if not len(g):
        raise ValidationError(f"{args.graph}: graph has no vertices")
    if args.algo == "mcl":
        params = MclParams(args.expansion, args.inflation, args.iters, args.eps, args.self_loop)
        c = markov_cluster(g, params)
    else:
        c = kmeans_cluster(g, args.k, args.iters, args.seed)
    write_clustering(c, args.out)
    if args.contract_out:
        write_graph_csv(contract(g, c), args.contract_out)
    if args.figure:
        if not args.pois:
            raise ValidationError("--figure needs --pois")
        from .plotting import plot_network
        plot_network(g, read_pois(args.pois), args.figure, c)
    print(f"subnetworks: {len(c)}  iterations: {c.iterations}  converged: {str(c.converged).lower()}")
    for s in c.subnetworks:
        print(f"  hub {s.hub}: {len(s.members)} members")
    return 0


def cmd_patterns(args) -> int:
    seqs = read_visits(args.visits)
    c = read_clustering(args.clustering)
    visited = {v.poi_id for s in seqs for v in s.visits}
    unknown = sorted(c.members() - visited)
    if unknown:
        raise ValidationError(f"clustering members never visited: {unknown[:5]}")
    if args.scope == "intra":
        blocks = [patterns_to_dict(mine_intra_patterns(seqs, sub, args.min_support), "intra", sub.cluster_id)
                  for sub in c.subnetworks]
    else:
        blocks = [patterns_to_dict(mine_inter_patterns(seqs, c, args.min_support), "inter", None)]
    write_patterns(blocks, args.out)
    print(f"patterns: {sum(len(b['patterns']) for b in blocks)}")
    return 0


def cmd_flow(args) -> int:
    g = read_graph_csv(args.graph)
    f = max_flow(g, args.source, args.sink)
    bounds = None
    if args.lower is not None or args.upper is not None:
        lower = 0.0 if args.lower is None else args.lower
        upper = float("inf") if args.upper is None else args.upper
        bounds = check_capacity_bounds(f, lower, upper)
    directions = direction_report(g)
    write_flow_json(f, args.out, bounds, directions)
    dir_out = args.directions_out or Path(args.out).with_suffix(".directions.csv")
    write_directions_csv(directions, dir_out)
    line = f"max flow {args.source} -> {args.sink}: {f.max_flow:g}  cut edges: {len(f.min_cut_edges)}"
    if bounds is not None:
        line += f"  bounds: {bounds.status.value}"
    print(line)
    return 0


def cmd_bench(args) -> int:
    params = MclParams(args.expansion, args.inflation, args.iters, args.eps)
    for q in args.ratios:
        if not 0 < q <= 1:
            raise ValidationError(f"ratio {q} outside (0, 1]")
    result = bench_mod.run_benchmark(args.n, args.ratios, args.trials, params, args.k, args.seed,
                                     kmeans_iters=args.iters, ratio_means_absent=args.ratio_means_absent)
    paths = bench_mod.write_bench(result, args.out)
    if not args.no_figure:
        from .plotting import plot_benchmark
        plot_benchmark(result, Path(str(args.out) + ".png"))
    algs = result.algorithms()
    print("ratio   " + "  ".join(f"{a:>10}" for a in algs))
    for q in result.ratios():
        print(f"{q:<7g} " + "  ".join(f"{result.mean_seconds(a, q):10.4f}" for a in algs))
    print("mean    " + "  ".join(f"{result.mean_seconds(a):10.4f}" for a in algs))
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return 0


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="metatrail", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value defaults file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    subs: dict[str, argparse.ArgumentParser] = {}

    p = subs["snap"] = sub.add_parser("snap", help="snap trails to POIs")
    p.add_argument("trails")
    p.add_argument("pois")
    p.add_argument("--radius-m", type=float, default=50.0)
    p.add_argument("--min-dwell-ms", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_snap)

    p = subs["hotspot"] = sub.add_parser("hotspot", help="build the hotspot network and transition matrix")
    p.add_argument("visits")
    th = p.add_mutually_exclusive_group()
    th.add_argument("--threshold", type=float)
    th.add_argument("--threshold-percentile", type=float, default=90.0)
    p.add_argument("--app")
    p.add_argument("--seeds", type=_csv_strings)
    p.add_argument("--out-graph", required=True)
    p.add_argument("--out-matrix")
    p.add_argument("--format", choices=("csv", "dot", "geojson"), default="csv")
    p.add_argument("--pois", help="POI catalog, needed for geojson and --figure")
    p.add_argument("--figure", help="write a network map (PNG/PDF/SVG)")
    p.set_defaults(func=cmd_hotspot)

    p = subs["cluster"] = sub.add_parser("cluster", help="find affinity subnetworks")
    p.add_argument("graph")
    p.add_argument("--algo", choices=("mcl", "kmeans"), default="mcl")
    p.add_argument("--inflation", type=float, default=2.0)
    p.add_argument("--expansion", type=int, default=2)
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--self-loop", type=float, default=1.0)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--contract-out")
    p.add_argument("--pois")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_cluster)

    p = subs["patterns"] = sub.add_parser("patterns", help="mine sequential visiting patterns")
    p.add_argument("visits")
    p.add_argument("clustering")
    p.add_argument("--scope", choices=("intra", "inter"), default="intra")
    p.add_argument("--min-support", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_patterns)

    p = subs["flow"] = sub.add_parser("flow", help="flow directions and max-flow/min-cut")
    p.add_argument("graph")
    p.add_argument("--source", required=True)
    p.add_argument("--sink", required=True)
    p.add_argument("--lower", type=float)
    p.add_argument("--upper", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--directions-out")
    p.set_defaults(func=cmd_flow)

    p = subs["bench"] = sub.add_parser("bench", help="time MCL against K-means on random digraphs")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--ratios", type=_csv_floats, default=list(bench_mod.DEFAULT_RATIOS))
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--inflation", type=float, default=2.0)
    p.add_argument("--expansion", type=int, default=2)
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--seed", type=int)
    p.add_argument("--ratio-means-absent", action="store_true",
                   help="read each ratio as the fraction of missing edges")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_bench)
    return parser, subs


def read_config(path: str | Path) -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment, dashes in keys become underscores."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            cfg[key.replace("-", "_")] = value
    return cfg


def _apply_config(subs: dict[str, argparse.ArgumentParser], cfg: dict[str, str]) -> None:
    used = set()
    for p in subs.values():
        actions = {a.dest: a for a in p._actions}
        updates = {}
        for key, value in cfg.items():
            action = actions.get(key)
            if action is None or not action.option_strings:
                continue
            if isinstance(action, argparse._StoreTrueAction):
                updates[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                updates[key] = value  # string defaults go through the action's type
            used.add(key)
        p.set_defaults(**updates)
    for key in sorted(set(cfg) - used):
        log.warning("config key %r matches no option", key)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser, subs = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            _apply_config(subs, read_config(known.config))
        args = parser.parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        if getattr(args, "seed", 0) is None:
            args.seed = _env_seed()
        return args.func(args)
    except TrailParseError as exc:
        for lineno, msg in exc.errors:
            print(f"line {lineno}: {msg}", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, UnknownVertexError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
