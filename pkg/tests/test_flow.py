import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metatrail.core import HotspotGraph, graph_from_edge_list
from metatrail.errors import UnknownVertexError, ValidationError
from metatrail.flow import (
    BoundStatus,
    check_capacity_bounds,
    direction_report,
    max_flow,
    write_directions_csv,
    write_flow_json,
)

from oracles import min_cut_bruteforce

DIAMOND = [("s", "a", 3), ("s", "b", 2), ("a", "t", 2), ("b", "t", 3), ("a", "b", 1)]


def random_digraph(rnd, n):
    vs = [f"n{i}" for i in range(n)]
    edges = {(u, v): round(rnd.uniform(0.1, 5.0), 3) for u in vs for v in vs if u != v and rnd.random() < 0.45}
    return HotspotGraph(dict.fromkeys(vs, 1), edges)


def test_direction_single_edge():
    r = direction_report(graph_from_edge_list([("A", "B", 3)]))
    assert r.net == {"A": 3, "B": -3}
    assert r.pairs[0].dominant == ("A", "B")


def test_direction_reciprocal_balanced():
    r = direction_report(graph_from_edge_list([("A", "B", 2), ("B", "A", 2)]))
    assert r.pairs[0].balanced and r.pairs[0].dominant is None


def test_direction_heavier_side_dominates():
    # inbound/outbound split like 8 of 11 stores on one side of the road
    r = direction_report(graph_from_edge_list([("home", "downtown", 8), ("downtown", "home", 3)]))
    (pair,) = r.pairs
    assert (pair.u, pair.v) == ("downtown", "home")
    assert pair.imbalance == -5
    assert pair.dominant == ("home", "downtown")


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_net_flows_sum_to_zero(seed):
    g = random_digraph(random.Random(seed), 6)
    assert abs(sum(direction_report(g).net.values())) <= 1e-9


def test_single_edge_flow():
    f = max_flow(graph_from_edge_list([("s", "t", 4.5)]), "s", "t")
    assert f.max_flow == 4.5 and f.min_cut_edges == {("s", "t")}


def test_no_path():
    f = max_flow(graph_from_edge_list([("t", "s", 4), ("s", "x", 1)]), "s", "t")
    assert f.max_flow == 0 and f.flows == {} and f.min_cut_edges == frozenset()


def test_diamond():
    g = graph_from_edge_list(DIAMOND)
    oracle = min_cut_bruteforce(g.vertices, dict(g.edges), "s", "t")
    assert oracle == 5
    f = max_flow(g, "s", "t")
    assert f.max_flow == pytest.approx(oracle, abs=1e-9)
    assert sum(g.edges[e] for e in f.min_cut_edges) == pytest.approx(5, abs=1e-9)


def test_flow_errors():
    g = graph_from_edge_list(DIAMOND)
    with pytest.raises(ValidationError):
        max_flow(g, "s", "s")
    with pytest.raises(UnknownVertexError):
        max_flow(g, "s", "nowhere")


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6))
def test_flow_properties(seed, n):
    rnd = random.Random(seed)
    g = random_digraph(rnd, n)
    s, t = rnd.sample(g.vertices, 2)
    f = max_flow(g, s, t)
    assert f.max_flow == pytest.approx(min_cut_bruteforce(g.vertices, dict(g.edges), s, t), abs=1e-9)
    assert f.max_flow == pytest.approx(sum(g.edges[e] for e in f.min_cut_edges), abs=1e-9)
    assert s in f.source_side and t not in f.source_side
    for e, x in f.flows.items():
        assert 0 <= x <= g.edges[e] + 1e-12
    for v in g.vertices:
        inflow = sum(x for (a, b), x in f.flows.items() if b == v)
        outflow = sum(x for (a, b), x in f.flows.items() if a == v)
        if v == s:
            assert outflow - inflow == pytest.approx(f.max_flow, abs=1e-9)
        elif v != t:
            assert abs(inflow - outflow) <= 1e-9
    assert f.saturated <= set(f.flows)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_flow_relabel_invariant(seed):
    rnd = random.Random(seed)
    g = random_digraph(rnd, 5)
    s, t = rnd.sample(g.vertices, 2)
    names = {v: f"z{rnd.random():.9f}" for v in g.vertices}
    h = HotspotGraph({names[v]: 1 for v in g.vertices}, {(names[a], names[b]): w for (a, b), w in g.edges.items()})
    assert max_flow(h, names[s], names[t]).max_flow == pytest.approx(max_flow(g, s, t).max_flow, abs=1e-9)


def test_reciprocal_edges():
    g = graph_from_edge_list([("s", "a", 2), ("a", "s", 5), ("a", "t", 1), ("t", "a", 1)])
    f = max_flow(g, "s", "t")
    assert f.max_flow == 1
    assert f.flows == {("s", "a"): 1, ("a", "t"): 1}


@pytest.mark.parametrize("flow,lower,upper,status", [
    (5, 2, 10, BoundStatus.WITHIN),
    (1, 2, 10, BoundStatus.UNDERFLOW),
    (5, 0, 5, BoundStatus.WITHIN),
    (11, 2, 10, BoundStatus.OVERFLOW),
])
def test_capacity_bounds(flow, lower, upper, status):
    f = max_flow(graph_from_edge_list([("s", "t", flow)]), "s", "t")
    assert check_capacity_bounds(f, lower, upper).status is status


def test_capacity_bounds_validation():
    f = max_flow(graph_from_edge_list([("s", "t", 1)]), "s", "t")
    with pytest.raises(ValidationError):
        check_capacity_bounds(f, 3, 2)
    with pytest.raises(ValidationError):
        check_capacity_bounds(f, -1, 2)


def test_exports(tmp_path):
    g = graph_from_edge_list(DIAMOND + [("b", "a", 1)])
    f = max_flow(g, "s", "t")
    r = direction_report(g)
    write_flow_json(f, tmp_path / "f.json", check_capacity_bounds(f, 2, 10), r)
    obj = json.loads((tmp_path / "f.json").read_text())
    assert obj["max_flow"] == 5 and obj["bounds"]["status"] == "within"
    assert obj["min_cut_edges"]
    write_directions_csv(r, tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "u,v,forward_weight,backward_weight,imbalance"
    assert "a,b,1,1,0" in lines
