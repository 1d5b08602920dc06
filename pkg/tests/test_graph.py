from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockgraph.graph import (
    Block,
    DuplicateEdge,
    DuplicateVertex,
    Edge,
    Graph,
    GraphUpdate,
    MissingEdge,
    MissingVertex,
    SelfLoop,
    apply_update,
    build_blocks,
    degree,
    merge_blocks,
    neighbors,
)


def test_add_vertex_to_empty_graph():
    g = apply_update(Graph(), GraphUpdate.add_vertex(1))
    assert g.vertices == [1]
    assert g.num_edges == 0


def test_remove_vertex_drops_incident_edges(triangle):
    apply_update(triangle, GraphUpdate.remove_vertex(2))
    assert list(triangle.edges()) == [(1, 3)]
    assert triangle.vertices == [1, 3]


def test_duplicate_edge_rejected_without_mutation(triangle):
    before = triangle.copy()
    with pytest.raises(DuplicateEdge):
        apply_update(triangle, GraphUpdate.add_edge(2, 1))
    assert triangle == before


@pytest.mark.parametrize(
    "upd, err",
    [
        (GraphUpdate.remove_edge(1, 4), MissingEdge),
        (GraphUpdate.remove_vertex(9), MissingVertex),
        (GraphUpdate.add_vertex(1), DuplicateVertex),
    ],
)
def test_invalid_updates_leave_graph_alone(triangle, upd, err):
    before = triangle.copy()
    with pytest.raises(err):
        apply_update(triangle, upd)
    assert triangle == before


def test_self_loop_rejected():
    with pytest.raises(SelfLoop):
        GraphUpdate.add_edge(3, 3)
    with pytest.raises(SelfLoop):
        Graph().add_edge(2, 2)


def test_error_carries_update_line():
    upd = GraphUpdate.remove_edge(1, 2, line=7)
    with pytest.raises(MissingEdge) as info:
        apply_update(Graph(), upd)
    assert info.value.update is upd
    assert str(info.value).startswith("line 7: ")


def test_negative_or_non_int_ids_rejected():
    with pytest.raises(ValueError):
        Graph().add_vertex(-1)
    with pytest.raises(ValueError):
        Graph().add_vertex("a")  # type: ignore[arg-type]


def test_edge_is_unordered():
    assert Edge(3, 1) == Edge(1, 3)
    assert Edge(3, 1).key() == (1, 3)
    assert Edge(1, 3, "x") == Edge(1, 3, "y")
    assert Edge(1, 3).other(3) == 1


def test_degree_examples(triangle):
    g = Graph()
    g.add_vertex(5)
    assert degree(g, 5) == 0
    assert all(degree(triangle, u) == 2 for u in triangle.vertices)
    star = Graph.from_edges([(0, i) for i in range(1, 6)])
    assert degree(star, 0) == 5
    with pytest.raises(MissingVertex):
        degree(star, 42)


def test_neighbors_examples(path3):
    assert neighbors(path3, 2) == [1, 3]
    assert path3.adj_lt(2) == [1]
    assert path3.adj_gt(2) == [3]
    g = Graph()
    g.add_vertex(4)
    assert neighbors(g, 4) == []
    with pytest.raises(MissingVertex):
        neighbors(g, 5)


def test_add_edge_creates_endpoints():
    g = Graph()
    g.add_edge(4, 1, value="w")
    assert g.vertices == [1, 4]
    assert g.edge_value(1, 4) == "w"


def test_inverse_of_vertex_removal_is_undefined():
    with pytest.raises(ValueError):
        GraphUpdate.remove_vertex(1).inverse()


def test_update_text_form():
    assert str(GraphUpdate.add_edge(2, 1)) == "A 1 2"
    assert str(GraphUpdate.remove_vertex(4)) == "DV 4"


def test_block_frontier_and_degree():
    g = Graph.from_edges([(1, 2), (2, 3), (3, 4)])
    blocks = build_blocks(g, {1: 0, 2: 0, 3: 1, 4: 1}, 2)
    b0, b1 = blocks
    assert b0.frontier == {(2, 3, 1)}
    assert b1.frontier == {(3, 2, 0)}
    assert b0.degree(2) == 2 and b0.neighbors(2) == [1, 3]
    for b in blocks:
        for local, remote, rb in b.frontier:
            assert not b.owns(remote) and rb != b.block_id
    assert merge_blocks(blocks) == g


def test_block_rejects_inward_frontier():
    b = Block(0)
    b.add_vertex(1)
    b.add_vertex(2)
    with pytest.raises(ValueError):
        b.add_frontier_edge(1, 2, 1)
    b.add_frontier_edge(1, 5, 1)
    with pytest.raises(DuplicateEdge):
        b.add_frontier_edge(1, 5, 1)
    assert b.remove_frontier_edge(1, 5) == 1
    with pytest.raises(MissingEdge):
        b.remove_frontier_edge(1, 5)


# -- properties ------------------------------------------------------------------

ops = st.lists(
    st.tuples(st.sampled_from(["A", "D", "AV", "DV"]), st.integers(0, 12), st.integers(0, 12)),
    max_size=60,
)


def _apply_ops(raw):
    g = Graph()
    applied = []
    for tag, u, v in raw:
        try:
            if tag == "A":
                upd = GraphUpdate.add_edge(u, v)
            elif tag == "D":
                upd = GraphUpdate.remove_edge(u, v)
            elif tag == "AV":
                upd = GraphUpdate.add_vertex(u)
            else:
                upd = GraphUpdate.remove_vertex(u)
            apply_update(g, upd)
            applied.append(upd)
        except (SelfLoop, DuplicateEdge, MissingEdge, MissingVertex, DuplicateVertex):
            pass
    return g, applied


@settings(max_examples=150, deadline=None)
@given(ops)
def test_apply_matches_rebuild(raw):
    g, _ = _apply_ops(raw)
    rebuilt = Graph.from_edges(g.edges(), vertices=g.vertices)
    assert g == rebuilt
    assert sum(g.degree(u) for u in g.vertices) == 2 * g.num_edges
    for u in g.vertices:
        for w in g.neighbors(u):
            assert u in g.neighbors(w)
        assert g.neighbors(u) == sorted(g.neighbors(u))


@settings(max_examples=150, deadline=None)
@given(ops, st.sampled_from(["A", "D", "AV"]), st.integers(0, 12), st.integers(0, 12))
def test_update_then_inverse_restores(raw, tag, u, v):
    g, _ = _apply_ops(raw)
    if tag == "A" and not (u in g and v in g):
        # implicit endpoint creation has no edge-level inverse
        return
    before = g.copy()
    try:
        upd = {"A": GraphUpdate.add_edge, "D": GraphUpdate.remove_edge}[tag](u, v) if tag != "AV" else GraphUpdate.add_vertex(u)
        apply_update(g, upd)
    except (SelfLoop, DuplicateEdge, MissingEdge, MissingVertex, DuplicateVertex):
        assert g == before
        return
    apply_update(g, upd.inverse())
    assert g == before
