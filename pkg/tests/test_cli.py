import json
import shutil

import pytest

from metatrail.cli import main
from metatrail.core import graph_from_edge_list, read_graph_csv, write_graph_csv
from metatrail.hotspot import read_matrix_csv

DIAMOND = [("s", "a", 3), ("s", "b", 2), ("a", "t", 2), ("b", "t", 3), ("a", "b", 1)]


def visits_line(tid, *pois, app=""):
    return json.dumps({"trail_id": tid, "visits": [
        {"poi_id": p, "enter": 100 * k, "exit": 100 * k + 50, "app": app} for k, p in enumerate(pois)]})


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


@pytest.fixture
def worked_visits(tmp_path):
    lines = [visits_line("t0", "v1", "v2")]
    lines += [visits_line(f"t{k}", "v1", "v3") for k in (1, 2)]
    lines += [visits_line(f"t{k}", "v1", "v4") for k in (3, 4, 5)]
    return write_lines(tmp_path / "worked.jsonl", lines)


@pytest.fixture
def clique_graph(tmp_path):
    edges = []
    for grp in (["a1", "a2", "a3"], ["b1", "b2", "b3"]):
        edges += [(u, v, 1) for u in grp for v in grp if u != v]
    edges.append(("a1", "b1", 1))
    path = tmp_path / "cliques.csv"
    write_graph_csv(graph_from_edge_list(edges), path)
    return path


def test_snap_fixture(fixtures_dir, tmp_path, capsys):
    out = tmp_path / "v.jsonl"
    assert main(["snap", str(fixtures_dir / "trails.jsonl"), str(fixtures_dir / "pois.csv"), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 27
    assert "trails read: 27" in capsys.readouterr().out


def test_snap_empty_trails(fixtures_dir, tmp_path, capsys):
    empty = write_lines(tmp_path / "empty.jsonl", [])
    code = main(["snap", str(empty), str(fixtures_dir / "pois.csv"), "--out", str(tmp_path / "v.jsonl")])
    assert code == 2
    assert "no valid trails" in capsys.readouterr().err


def test_snap_zero_radius(fixtures_dir, tmp_path, capsys):
    code = main(["snap", str(fixtures_dir / "trails.jsonl"), str(fixtures_dir / "pois.csv"),
                 "--radius-m", "0", "--out", str(tmp_path / "v.jsonl")])
    assert code == 2
    assert "radius" in capsys.readouterr().err


def test_snap_bad_line_reported(fixtures_dir, tmp_path, capsys):
    src = (fixtures_dir / "trails.jsonl").read_text().splitlines()
    trails = write_lines(tmp_path / "t.jsonl", src[:2] + ["{not json"])
    assert main(["snap", str(trails), str(fixtures_dir / "pois.csv"), "--out", str(tmp_path / "v.jsonl")]) == 0
    assert ":3:" in capsys.readouterr().err


def test_missing_input_file(tmp_path, capsys):
    assert main(["flow", str(tmp_path / "nope.csv"), "--source", "a", "--sink", "b",
                 "--out", str(tmp_path / "f.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_hotspot_worked_column(worked_visits, tmp_path):
    g, m = tmp_path / "g.csv", tmp_path / "m.csv"
    assert main(["hotspot", str(worked_visits), "--threshold", "0", "--out-graph", str(g), "--out-matrix", str(m)]) == 0
    tm = read_matrix_csv(m)
    for dst, want in (("v2", 1 / 6), ("v3", 2 / 6), ("v4", 3 / 6)):
        assert tm.probability("v1", dst) == pytest.approx(want, abs=1e-12)
    assert set(read_graph_csv(g).vertices) == {"v1", "v2", "v3", "v4"}


def test_hotspot_threshold_zero_is_seed_component(tmp_path):
    visits = write_lines(tmp_path / "v.jsonl", [visits_line("t0", "A", "B"), visits_line("t1", "C", "D")])
    g = tmp_path / "g.csv"
    assert main(["hotspot", str(visits), "--threshold", "0", "--seeds", "A", "--out-graph", str(g)]) == 0
    assert read_graph_csv(g).vertices == ("A", "B")


def test_hotspot_unknown_app_warns(worked_visits, tmp_path, caplog):
    g = tmp_path / "g.csv"
    assert main(["hotspot", str(worked_visits), "--app", "filterX", "--out-graph", str(g)]) == 0
    assert "empty network" in caplog.text
    assert len(read_graph_csv(g)) == 0


def test_hotspot_unknown_seed(worked_visits, tmp_path, capsys):
    code = main(["hotspot", str(worked_visits), "--seeds", "zz", "--out-graph", str(tmp_path / "g.csv")])
    assert code == 2
    assert "zz" in capsys.readouterr().err


@pytest.mark.parametrize("fmt,marker", [("dot", "digraph"), ("geojson", "FeatureCollection")])
def test_hotspot_formats(fixtures_dir, tmp_path, fmt, marker):
    v = tmp_path / "v.jsonl"
    main(["snap", str(fixtures_dir / "trails.jsonl"), str(fixtures_dir / "pois.csv"), "--out", str(v)])
    out = tmp_path / f"g.{fmt}"
    assert main(["hotspot", str(v), "--threshold", "3", "--format", fmt, "--pois", str(fixtures_dir / "pois.csv"),
                 "--out-graph", str(out)]) == 0
    assert marker in out.read_text()


def test_cluster_two_cliques(clique_graph, tmp_path):
    out = tmp_path / "c.json"
    assert main(["cluster", str(clique_graph), "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["subnetworks"]) == 2


def test_cluster_kmeans_one(clique_graph, tmp_path):
    out = tmp_path / "c.json"
    assert main(["cluster", str(clique_graph), "--algo", "kmeans", "--k", "1", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["subnetworks"]) == 1


def test_cluster_bad_algo(clique_graph, tmp_path, capsys):
    assert main(["cluster", str(clique_graph), "--algo", "louvain", "--out", str(tmp_path / "c.json")]) == 2
    assert "louvain" in capsys.readouterr().err


def test_cluster_singleton_contraction(tmp_path):
    g = graph_from_edge_list([("A", "B", 2), ("B", "C", 1), ("C", "C", 4), ("C", "A", 3)])
    path = tmp_path / "g.csv"
    write_graph_csv(g, path)
    out = tmp_path / "h.csv"
    # k == n gives every vertex its own cluster
    assert main(["cluster", str(path), "--algo", "kmeans", "--k", "3", "--out", str(tmp_path / "c.json"),
                 "--contract-out", str(out)]) == 0
    h = read_graph_csv(out)
    assert {(u.removeprefix("cluster:"), v.removeprefix("cluster:")): w for (u, v), w in h.edges.items()} \
        == dict(g.without_self_loops().edges)


def pattern_setup(tmp_path, visit_lines, clustering):
    v = write_lines(tmp_path / "v.jsonl", visit_lines)
    c = tmp_path / "c.json"
    c.write_text(json.dumps(clustering))
    return v, c


AB_ONLY = {"subnetworks": [{"hub": "A", "members": ["A", "B"]}], "converged": True, "iterations": 1}


def test_patterns_intra(tmp_path):
    v, c = pattern_setup(tmp_path, [visits_line(f"t{k}", "A", "B") for k in range(3)], AB_ONLY)
    out = tmp_path / "p.json"
    assert main(["patterns", str(v), str(c), "--min-support", "1", "--out", str(out)]) == 0
    (block,) = json.loads(out.read_text())
    assert block["scope"] == "intra" and block["subnetwork"] == "cluster:A"
    assert block["patterns"] == [{"sequence": ["A", "B"], "support": 3}]


def test_patterns_intra_empty(tmp_path):
    v, c = pattern_setup(tmp_path, [visits_line("t", "A"), visits_line("u", "B", "X")], AB_ONLY)
    out = tmp_path / "p.json"
    assert main(["patterns", str(v), str(c), "--min-support", "1", "--out", str(out)]) == 0
    assert json.loads(out.read_text())[0]["patterns"] == []


def test_patterns_inter_two_orders(tmp_path):
    clustering = {"subnetworks": [{"hub": "a1", "members": ["a1", "a2"]}, {"hub": "b1", "members": ["b1"]}]}
    v, c = pattern_setup(tmp_path, [visits_line("t", "a1", "b1"), visits_line("u", "b1", "a2")], clustering)
    out = tmp_path / "p.json"
    assert main(["patterns", str(v), str(c), "--scope", "inter", "--min-support", "1", "--out", str(out)]) == 0
    (block,) = json.loads(out.read_text())
    assert block["scope"] == "inter"
    assert sorted(p["sequence"] for p in block["patterns"]) == [["cluster:a1", "cluster:b1"],
                                                                ["cluster:b1", "cluster:a1"]]


def test_patterns_mismatch(tmp_path, capsys):
    v, c = pattern_setup(tmp_path, [visits_line("t", "A", "B")],
                         {"subnetworks": [{"hub": "Q", "members": ["Q"]}]})
    assert main(["patterns", str(v), str(c), "--out", str(tmp_path / "p.json")]) == 2
    assert "Q" in capsys.readouterr().err


@pytest.fixture
def diamond(tmp_path):
    path = tmp_path / "d.csv"
    write_graph_csv(graph_from_edge_list(DIAMOND), path)
    return path


def test_flow_diamond(diamond, tmp_path, capsys):
    out = tmp_path / "f.json"
    assert main(["flow", str(diamond), "--source", "s", "--sink", "t", "--lower", "2", "--upper", "10",
                 "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert obj["max_flow"] == 5 and obj["bounds"]["status"] == "within"
    assert "bounds: within" in capsys.readouterr().out
    assert (tmp_path / "f.directions.csv").read_text().startswith("u,v,")


def test_flow_no_path(diamond, tmp_path):
    out = tmp_path / "f.json"
    assert main(["flow", str(diamond), "--source", "t", "--sink", "s", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["max_flow"] == 0


def test_flow_source_is_sink(diamond, tmp_path):
    assert main(["flow", str(diamond), "--source", "s", "--sink", "s", "--out", str(tmp_path / "f.json")]) == 2


def test_flow_unknown_vertex(diamond, tmp_path, capsys):
    assert main(["flow", str(diamond), "--source", "s", "--sink", "q", "--out", str(tmp_path / "f.json")]) == 2
    assert "q" in capsys.readouterr().err


def bench_clusters(prefix):
    rows = prefix.with_name(prefix.name + ".csv").read_text().splitlines()[1:]
    return [(r.split(",")[0], r.split(",")[1], r.split(",")[2], r.split(",")[4]) for r in rows]


def test_bench_two_records(tmp_path, capsys):
    prefix = tmp_path / "b"
    assert main(["bench", "--n", "30", "--trials", "1", "--ratios", "0.5", "--k", "3", "--out", str(prefix)]) == 0
    assert len(bench_clusters(prefix)) == 2
    assert (tmp_path / "b.png").read_bytes()[:4] == b"\x89PNG"
    assert "mean" in capsys.readouterr().out


def test_bench_same_seed_same_clusters(tmp_path):
    args = ["bench", "--n", "30", "--trials", "2", "--ratios", "0.3,0.7", "--k", "3", "--seed", "5", "--no-figure"]
    assert main(args + ["--out", str(tmp_path / "x")]) == 0
    assert main(args + ["--out", str(tmp_path / "y")]) == 0
    assert bench_clusters(tmp_path / "x") == bench_clusters(tmp_path / "y")
    assert not (tmp_path / "x.png").exists()


@pytest.mark.parametrize("bad", [["--ratios", "1.5"], ["--ratios", "a,b"], ["--trials", "0"], ["--n", "0"]])
def test_bench_flag_validation(tmp_path, bad):
    assert main(["bench", "--n", "10", "--k", "2", "--no-figure", "--out", str(tmp_path / "b")] + bad) == 2


def test_config_defaults_and_flag_override(clique_graph, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nalgo = kmeans\nk = 1\n")
    out = tmp_path / "c.json"
    assert main(["--config", str(cfg), "cluster", str(clique_graph), "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["subnetworks"]) == 1
    assert main(["--config", str(cfg), "cluster", str(clique_graph), "--algo", "mcl", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["subnetworks"]) == 2


def test_config_bad_line(clique_graph, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("algo kmeans\n")
    assert main(["--config", str(cfg), "cluster", str(clique_graph), "--out", str(tmp_path / "c.json")]) == 2
    assert "key=value" in capsys.readouterr().err


def test_env_seed(clique_graph, tmp_path, monkeypatch):
    def run(name, *extra):
        out = tmp_path / name
        assert main(["cluster", str(clique_graph), "--algo", "kmeans", "--k", "2", "--out", str(out), *extra]) == 0
        return out.read_bytes()

    monkeypatch.setenv("METATRAIL_SEED", "7")
    assert run("a.json") == run("b.json", "--seed", "7")
    monkeypatch.setenv("METATRAIL_SEED", "seven")
    assert main(["cluster", str(clique_graph), "--algo", "kmeans", "--k", "2", "--out", str(tmp_path / "c.json")]) == 2


def test_figures_written(fixtures_dir, tmp_path):
    v, g = tmp_path / "v.jsonl", tmp_path / "g.csv"
    pois = str(fixtures_dir / "pois.csv")
    main(["snap", str(fixtures_dir / "trails.jsonl"), pois, "--out", str(v)])
    assert main(["hotspot", str(v), "--threshold", "3", "--out-graph", str(g), "--pois", pois,
                 "--figure", str(tmp_path / "net.png")]) == 0
    assert main(["cluster", str(g), "--out", str(tmp_path / "c.json"), "--pois", pois,
                 "--figure", str(tmp_path / "clusters.png")]) == 0
    a = (tmp_path / "clusters.png").read_bytes()
    shutil.move(tmp_path / "clusters.png", tmp_path / "first.png")
    main(["cluster", str(g), "--out", str(tmp_path / "c.json"), "--pois", pois, "--figure", str(tmp_path / "clusters.png")])
    assert a[:4] == b"\x89PNG" and a == (tmp_path / "clusters.png").read_bytes()
    assert (tmp_path / "net.png").stat().st_size > 1000


def test_figure_needs_pois(clique_graph, tmp_path):
    assert main(["cluster", str(clique_graph), "--out", str(tmp_path / "c.json"), "--figure", str(tmp_path / "x.png")]) == 2
