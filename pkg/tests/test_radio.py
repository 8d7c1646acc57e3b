import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridv2v.mobility import VehicleState
from hybridv2v.radio import (
    Rsu,
    build_neighbor_tables,
    connectivity_graph,
    in_range,
    make_rsus,
    per_hop_delay,
)
from hybridv2v.routing import greedy_next_hop
from oracles import pairwise_edges


def world_at(*positions, d2d=None):
    d2d = d2d or [True] * len(positions)
    return [VehicleState(i, float(p), 0.0, 20.0, e) for i, (p, e) in enumerate(zip(positions, d2d))]


def random_world(seed, n, road):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, road, n)
    # rounded positions make exact range-boundary ties likely
    xs = np.where(rng.random(n) < 0.3, np.round(xs / 50.0) * 50.0, xs)
    return world_at(*xs)


def test_in_range_examples():
    assert in_range(0, 250, 250)
    assert not in_range(0, 250.001, 250)
    assert in_range(1000, 2500, 1500)


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(0.0, 1e4))
def test_in_range_symmetric(a, b, r):
    assert in_range(a, b, r) == in_range(b, a, r)


def test_tables_examples():
    assert len(build_neighbor_tables(world_at(5.0), 250.0)[0]) == 0
    t = build_neighbor_tables(world_at(0.0, 200.0, 400.0), 250.0, now_s=3.5)
    assert t[0].ids() == [1]
    assert sorted(t[1].ids()) == [0, 2]
    assert t[2].ids() == [1]
    assert all(e.last_seen_s == 3.5 for e in t[1].entries)


@pytest.mark.parametrize("seed", range(5))
def test_tables_match_pairwise_oracle(seed):
    world = random_world(seed, 100, 4000.0)
    tables = build_neighbor_tables(world, 250.0)
    pos = {v.id: v.position_m for v in world}
    edges = pairwise_edges(pos, 250.0)
    got = {(min(a, b), max(a, b)) for a in pos for b in tables[a].ids()}
    assert got == edges
    for a in pos:
        ids = tables[a].ids()
        assert a not in ids and len(ids) == len(set(ids))
        assert tables.degree(a) == len(ids)
        for b in ids:
            assert a in tables[b].ids()


def test_per_hop_delay_examples():
    assert per_hop_delay(50, 1, 0.02) == 50.0
    assert per_hop_delay(50, 11, 0.02) == pytest.approx(60.0, abs=1e-12)
    assert per_hop_delay(100, 5, 0) == 100.0
    with pytest.raises(ValueError):
        per_hop_delay(50, -1, 0.02)


@given(st.floats(0.1, 500.0), st.integers(0, 200), st.just(0.0) | st.floats(1e-6, 1.0))
def test_per_hop_delay_lower_bound(base, n, k):
    d = per_hop_delay(base, n, k)
    assert d >= base
    assert (d == base) == (n <= 1 or k == 0)
    if k > 0:
        assert per_hop_delay(base, n + 2, k) > per_hop_delay(base, n + 1, k)


def test_graph_examples():
    g = connectivity_graph([], [Rsu("rsu0", 100.0)], 250.0, 1000.0)
    assert g.nodes == {"rsu0"} and not g.edges
    g = connectivity_graph(world_at(0.0, 800.0), [], 550.0, 1000.0)
    assert g.edge_set("v2v") == set()
    assert g.edge_set("d2d") == {(0, 1)}


@pytest.mark.parametrize("seed", range(5))
def test_graph_matches_pairwise_oracle(seed):
    world = random_world(seed, 50, 3000.0)
    world = [VehicleState(v.id, v.position_m, 0.0, 20.0, v.id % 4 != 0) for v in world]
    rsus = make_rsus([0.0, 3000.0])
    g = connectivity_graph(world, rsus, 250.0, 1000.0)
    pos = {v.id: v.position_m for v in world}
    pos.update({r.id: r.position_m for r in rsus})
    expect_v2v = {
        e for e in pairwise_edges(pos, 250.0) if not (isinstance(e[0], str) and isinstance(e[1], str))
    }
    assert g.edge_set("v2v") == expect_v2v
    enabled = {v.id: v.position_m for v in world if v.d2d_enabled}
    assert g.edge_set("d2d") == pairwise_edges(enabled, 1000.0)


@given(st.lists(st.floats(0.0, 3000.0), max_size=40), st.floats(1.0, 600.0), st.floats(0.0, 600.0))
def test_graph_monotone_and_d2d_superset(xs, r1, extra):
    world = world_at(*xs)
    small = connectivity_graph(world, [], r1, r1)
    large = connectivity_graph(world, [], r1 + extra, r1 + extra)
    assert small.edge_set("v2v") <= large.edge_set("v2v")
    assert connectivity_graph(world, [], r1, r1 + extra).edge_set("d2d") >= small.edge_set("v2v")


def test_graph_csv(tmp_path):
    g = connectivity_graph(world_at(0.0, 100.0), make_rsus([150.0]), 120.0, 1000.0)
    path = tmp_path / "g.csv"
    g.write_csv(path)
    assert path.read_text() == "node_a,node_b,kind\n0,1,d2d\n0,1,v2v\n1,rsu0,v2v\n"


@given(
    st.lists(st.floats(0.0, 2000.0).map(lambda x: round(x / 25.0) * 25.0), min_size=1, max_size=40),
    st.floats(50.0, 600.0),
    st.sampled_from([-3000.0, 5000.0]),
    st.sets(st.integers(0, 39), max_size=10),
)
def test_indexed_hop_matches_table_scan(xs, r, target, exclude):
    """The bisection answer must equal a scan of the materialised table."""
    world = world_at(*xs)
    tables = build_neighbor_tables(world, r)
    for v in world:
        fast = tables.greedy_hop(v.id, target, exclude)
        slow = greedy_next_hop(v, target, tables[v.id], exclude)
        assert fast == slow
        assert tables.degree(v.id) == len(tables[v.id])


def test_within_and_with_range():
    tables = build_neighbor_tables(world_at(0.0, 100.0, 300.0), 150.0)
    assert tables.within(200.0, 100.0) == [1, 2]
    wider = tables.with_range(400.0)
    assert wider.range_m == 400.0 and sorted(wider[0].ids()) == [1, 2]
    assert tables[0].ids() == [1]
    with pytest.raises(ValueError):
        tables.greedy_hop(0, 100.0)
