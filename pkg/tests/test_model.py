from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from dtg.errors import DanglingEndpoint, DuplicateEdgeId, DuplicateId, UnknownNode
from dtg.model import DataNode, Dtg, NodeMeta, TransformEdge, check_subgraph, validate
from dtg.spans import line_span
from strategies import graphs


def make_node(nid: str, kind: str = "local") -> DataNode:
    return DataNode(id=nid, name=nid.rpartition("#")[0], kind=kind,
                    meta=NodeMeta(line_span("toy.py", 1, 1), "f"))


def toy_chain_graph() -> Dtg:
    """The three-state toy picture: id --sanitize--> cleaned_id --handle--> handled."""
    g = Dtg()
    for nid, kind in (
        ("utils.process_transactions.id#0", "argument"),
        ("utils.process_transactions.cleaned_id#0", "local"),
        ("utils.process_transactions.handled#0", "local"),
    ):
        g.add_node(make_node(nid, kind))
    g.add_edge(TransformEdge(
        edge_id="sanitize", src="utils.process_transactions.id#0",
        dst="utils.process_transactions.cleaned_id#0", plane="call", group="sanitize@L2",
    ))
    g.add_edge(TransformEdge(
        edge_id="handle", src="utils.process_transactions.cleaned_id#0",
        dst="utils.process_transactions.handled#0", plane="call", group="handle@L3",
    ))
    return g


def test_add_node_then_lookup():
    g = Dtg()
    g.add_node(make_node("utils.sanitize.id#0", "argument"))
    assert len(g.nodes) == 1 and len(g.edges) == 0
    assert g.node("utils.sanitize.id#0").kind == "argument"
    assert g.neighbors("utils.sanitize.id#0", "downstream") == []


def test_duplicate_node_id_rejected():
    g = Dtg()
    g.add_node(make_node("m.f.x#0"))
    with pytest.raises(DuplicateId):
        g.add_node(make_node("m.f.x#0"))


def test_thousand_distinct_nodes():
    g = Dtg()
    for i in range(1000):
        g.add_node(make_node(f"m.f.x{i}#0"))
    assert len(g.nodes) == 1000


def test_add_edge_appears_in_both_adjacency_lists():
    g = toy_chain_graph()
    assert "sanitize" in g.outgoing["utils.process_transactions.id#0"]
    assert "sanitize" in g.incoming["utils.process_transactions.cleaned_id#0"]


def test_edge_to_missing_node_rejected():
    g = Dtg()
    g.add_node(make_node("m.f.a#0"))
    with pytest.raises(DanglingEndpoint):
        g.add_edge(TransformEdge(edge_id="e", src="m.f.a#0", dst="m.f.missing#0", plane="call"))


def test_parallel_edges_with_distinct_ids():
    g = Dtg()
    g.add_node(make_node("m.f.a#0"))
    g.add_node(make_node("m.f.b#0"))
    g.add_edge(TransformEdge(edge_id="e0", src="m.f.a#0", dst="m.f.b#0", plane="call"))
    g.add_edge(TransformEdge(edge_id="e1", src="m.f.a#0", dst="m.f.b#0", plane="assignment"))
    assert len(g.edges) == 2
    with pytest.raises(DuplicateEdgeId):
        g.add_edge(TransformEdge(edge_id="e0", src="m.f.a#0", dst="m.f.b#0", plane="call"))


def test_toy_chain_neighbors_upstream():
    g = toy_chain_graph()
    assert g.neighbors("utils.process_transactions.cleaned_id#0", "upstream") == [
        ("sanitize", "utils.process_transactions.id#0")
    ]


def test_unknown_node_raises():
    g = toy_chain_graph()
    with pytest.raises(UnknownNode):
        g.neighbors("utils.process_transactions.ghost#0", "upstream")
    with pytest.raises(UnknownNode):
        g.subgraph_within_radius("utils.process_transactions.ghost#0", 1)


@given(graphs())
def test_neighbors_agree_with_edge_scan(g):
    for nid in g.nodes:
        for direction in ("upstream", "downstream"):
            assert g.neighbors(nid, direction) == oracles.edge_scan_neighbors(g, nid, direction)


def test_subgraph_radius_zero():
    g = toy_chain_graph()
    sub = g.subgraph_within_radius("utils.process_transactions.id#0", 0)
    assert set(sub.nodes) == {"utils.process_transactions.id#0"}
    assert sub.edges == {}


def test_subgraph_toy_chain_radius_one():
    g = toy_chain_graph()
    sub = g.subgraph_within_radius("utils.process_transactions.cleaned_id#0", 1)
    assert set(sub.nodes) == {
        "utils.process_transactions.id#0",
        "utils.process_transactions.cleaned_id#0",
        "utils.process_transactions.handled#0",
    }
    assert set(sub.edges) == {"sanitize", "handle"}


@given(graphs(max_nodes=14, max_edges=30), st.integers(0, 3))
def test_subgraph_matches_bfs_oracle(g, radius):
    center = sorted(g.nodes)[0]
    sub = g.subgraph_within_radius(center, radius)
    ball = oracles.bfs_ball(g, center, radius)
    assert set(sub.nodes) == ball
    assert set(sub.edges) == oracles.induced_edges(g, ball)
    assert check_subgraph(g, sub) == []


@given(graphs(), st.integers(0, 3))
def test_radius_monotonicity(g, radius):
    center = sorted(g.nodes)[0]
    inner = g.subgraph_within_radius(center, radius)
    outer = g.subgraph_within_radius(center, radius + 1)
    assert set(inner.nodes) <= set(outer.nodes)


@given(graphs())
def test_navigation_duality(g):
    for nid in g.nodes:
        for eid, nb in g.neighbors(nid, "downstream"):
            assert (eid, nid) in g.neighbors(nb, "upstream")
        for eid, nb in g.neighbors(nid, "upstream"):
            assert (eid, nid) in g.neighbors(nb, "downstream")


@given(graphs())
def test_constructed_graphs_validate_clean(g):
    assert validate(g).ok()


def test_validate_detects_removed_node():
    g = toy_chain_graph()
    del g.nodes["utils.process_transactions.id#0"]
    del g.outgoing["utils.process_transactions.id#0"]
    del g.incoming["utils.process_transactions.id#0"]
    codes = validate(g).codes()
    assert "DanglingEndpoint" in codes


# -- mutation harness -------------------------------------------------------
# Each mutation corrupts one invariant; validate must flag its class.


def _mutate_bad_kind(g):
    nid = sorted(g.nodes)[0]
    object.__setattr__(g.nodes[nid], "kind", "weird")
    return "BadKind"


def _mutate_bad_plane(g):
    eid = sorted(g.edges)[0]
    object.__setattr__(g.edges[eid], "plane", "sideways")
    return "BadPlane"


def _mutate_empty_constraint(g):
    nid = sorted(g.nodes)[0]
    object.__setattr__(g.nodes[nid], "constraints", ("",))
    return "EmptyConstraint"


def _mutate_name_mismatch(g):
    nid = sorted(g.nodes)[0]
    object.__setattr__(g.nodes[nid], "name", "entirely.other.name")
    return "NameMismatch"


def _mutate_bad_version(g):
    nid = sorted(g.nodes)[0]
    node = g.nodes.pop(nid)
    bad_id = node.name + "#-1"
    object.__setattr__(node, "id", bad_id)
    g.nodes[bad_id] = node
    g.outgoing[bad_id] = g.outgoing.pop(nid)
    g.incoming[bad_id] = g.incoming.pop(nid)
    return "BadVersion"


def _mutate_dangling(g):
    eid = sorted(g.edges)[0]
    victim = g.edges[eid].dst
    del g.nodes[victim]
    return "DanglingEndpoint"


def _mutate_self_loop(g):
    nid = sorted(g.nodes)[0]
    g.edges["loop"] = TransformEdge(edge_id="loop", src=nid, dst=nid, plane="call")
    g.outgoing[nid].append("loop")
    g.outgoing[nid].sort()
    g.incoming[nid].append("loop")
    g.incoming[nid].sort()
    return "SelfLoop"


def _mutate_drop_adjacency(g):
    eid = sorted(g.edges)[0]
    src = g.edges[eid].src
    g.outgoing[src].remove(eid)
    return "AdjacencyMismatch"


def _mutate_phantom_adjacency(g):
    nid = sorted(g.nodes)[0]
    g.outgoing[nid].append("phantom-edge")
    return "AdjacencyMismatch"


def _mutate_rekey(g):
    nid = sorted(g.nodes)[0]
    g.nodes["m.f.rekeyed#0"] = g.nodes.pop(nid)
    g.outgoing["m.f.rekeyed#0"] = g.outgoing.pop(nid)
    g.incoming["m.f.rekeyed#0"] = g.incoming.pop(nid)
    return "IdMismatch"


_MUTATIONS = [
    _mutate_bad_kind,
    _mutate_bad_plane,
    _mutate_empty_constraint,
    _mutate_name_mismatch,
    _mutate_bad_version,
    _mutate_dangling,
    _mutate_self_loop,
    _mutate_drop_adjacency,
    _mutate_phantom_adjacency,
    _mutate_rekey,
]


def test_mutation_harness_detects_each_class():
    for mutate in _MUTATIONS:
        g = toy_chain_graph()
        assert validate(g).ok()
        expected = mutate(g)
        assert expected in validate(g).codes(), f"{mutate.__name__} not detected"


@given(graphs())
@settings(max_examples=30)
def test_queries_are_deterministic(g):
    for nid in sorted(g.nodes)[:3]:
        assert g.neighbors(nid, "upstream") == g.neighbors(nid, "upstream")
        first = g.subgraph_within_radius(nid, 2)
        second = g.subgraph_within_radius(nid, 2)
        assert set(first.nodes) == set(second.nodes)
        assert set(first.edges) == set(second.edges)


def test_replace_edge_keeps_endpoints():
    g = toy_chain_graph()
    edge = g.edges["sanitize"]
    g.replace_edge(replace(edge, semantics="call: sanitize"))
    assert g.edges["sanitize"].semantics == "call: sanitize"
    with pytest.raises(ValueError):
        g.replace_edge(replace(edge, src="utils.process_transactions.handled#0"))
