from __future__ import annotations

import pytest

from blockgraph.algorithms import DegreeHooks
from blockgraph.algorithms.degree import degree_oracle
from blockgraph.graph import Graph, GraphUpdate, MissingEdge, apply_update, build_blocks
from blockgraph.runtime import HookFailure, Job, run_job

from conftest import gnp, random_stream, split


def two_block_graph():
    g = Graph.from_edges([(1, 2), (2, 3), (1, 3), (3, 4), (4, 5), (5, 6), (4, 6)])
    return g, build_blocks(g, {1: 0, 2: 0, 3: 0, 4: 1, 5: 1, 6: 1}, 2)


def test_init_counts_frontier_edges_once_per_endpoint():
    g, blocks = two_block_graph()
    res = run_job(blocks, [], DegreeHooks())
    assert res.state_of("degree") == degree_oracle(g)
    assert res.state_of("degree")[3] == 3


def test_empty_graph_has_no_states():
    res = run_job(build_blocks(Graph(), {}, 2), [], DegreeHooks())
    assert res.vertices == []


def test_single_block_matches_graph_degree():
    g = gnp(30, 0.2, 1)
    res = run_job(split(g, 1), [], DegreeHooks())
    assert res.state_of("degree") == {u: g.degree(u) for u in g.vertices}


def test_cross_block_insert_message_count():
    g, blocks = two_block_graph()
    with Job(blocks, DegreeHooks()) as job:
        job.start()
        job.apply(GraphUpdate.add_edge(4, 1))
        assert job.stats.per_update[-1] == {"M2W": 2, "W2M": 2, "W2W": 0, "Local": 0}
        deg = job.snapshot().state_of("degree")
    assert deg[4] == g.degree(4) + 1 and deg[1] == g.degree(1) + 1


def test_intra_block_update_needs_one_message():
    g, blocks = two_block_graph()
    with Job(blocks, DegreeHooks()) as job:
        job.start()
        job.apply(GraphUpdate.remove_edge(5, 6))
        intra = job.stats.per_update[-1]
        job.apply(GraphUpdate.remove_edge(3, 4))
        inter = job.stats.per_update[-1]
    assert intra["M2W"] == 1 and inter["M2W"] == 2
    assert intra["M2W"] + intra["W2M"] < inter["M2W"] + inter["W2M"]


def test_insert_then_remove_restores_degrees():
    g, blocks = two_block_graph()
    res = run_job(blocks, [GraphUpdate.add_edge(2, 6), GraphUpdate.remove_edge(2, 6)], DegreeHooks())
    assert res.state_of("degree") == degree_oracle(g)


def test_removing_missing_edge_fails():
    _, blocks = two_block_graph()
    with Job(blocks, DegreeHooks()) as job:
        job.start()
        with pytest.raises(HookFailure) as err:
            job.apply(GraphUpdate.remove_edge(1, 5, line=7))
    assert isinstance(err.value.cause, MissingEdge)
    assert "7" in str(err.value)


@pytest.mark.parametrize("seed", range(3))
def test_random_stream_matches_recount(seed):
    g = gnp(30, 0.15, seed)
    stream = random_stream(g, 50, seed)
    with Job(split(g, 3, seed), DegreeHooks()) as job:
        job.start()
        for upd in stream:
            job.apply(upd)
            apply_update(g, upd)
            assert job.snapshot().state_of("degree") == degree_oracle(g)
