from __future__ import annotations

import pytest

from blockgraph.algorithms import KCoreHooks
from blockgraph.algorithms.kcore import (
    KCoreEvent,
    batch_coreness,
    candidate_set,
    h_index,
    k_reachable,
    maintain_delete,
    maintain_insert,
    peel_candidates,
)
from blockgraph.graph import Graph, GraphUpdate, MissingEdge, apply_update, build_blocks
from blockgraph.runtime import HookFailure, Job

from conftest import gnp, random_stream, split


def job_on(g: Graph, owners: dict[int, int] | None = None, k: int = 1) -> Job:
    owners = owners or {u: 0 for u in g.vertices}
    job = Job(build_blocks(g, owners, k), KCoreHooks())
    job.start()
    return job


def coreness(job: Job) -> dict[int, int]:
    return job.snapshot().state_of("coreness")


# -- batch peeling -----------------------------------------------------------------


def test_triangle_is_a_2_core(triangle):
    assert batch_coreness(triangle) == {1: 2, 2: 2, 3: 2}


def test_isolated_vertex_has_coreness_zero():
    g = Graph.from_edges([(1, 2)], vertices=[9])
    assert batch_coreness(g) == {1: 1, 2: 1, 9: 0}


def test_clique_with_pendant():
    g = Graph.from_edges([(a, b) for a in range(4) for b in range(a + 1, 4)] + [(3, 10)])
    assert batch_coreness(g) == {0: 3, 1: 3, 2: 3, 3: 3, 10: 1}


@pytest.mark.parametrize("seed", range(5))
def test_batch_matches_networkx(seed):
    import networkx as nx

    g = gnp(60, 0.1, seed)
    G = nx.Graph(list(g.edges()))
    G.add_nodes_from(g.vertices)
    assert batch_coreness(g) == nx.core_number(G)


def test_h_index():
    assert h_index([3, 0, 6, 1, 5], cap=10) == 3
    assert h_index([3, 0, 6, 1, 5], cap=2) == 2
    assert h_index([], cap=4) == 0


def test_distributed_batch_phase_matches_peeling():
    g = gnp(50, 0.12, 4)
    with Job(split(g, 4, 2), KCoreHooks()) as job:
        job.start()
        assert coreness(job) == batch_coreness(g)


# -- k-reachability ------------------------------------------------------------------


def test_path_reaches_everything(path3):
    with job_on(path3) as job:
        assert k_reachable(job, 1) == {1, 2, 3}


def test_lonely_root():
    g = Graph.from_edges([(1, 2), (2, 3), (1, 3), (3, 4)])
    with job_on(g) as job:
        assert k_reachable(job, 4) == {4}


def test_six_cycle_across_two_blocks_uses_w2w():
    g = Graph.from_edges([(i, (i + 1) % 6) for i in range(6)])
    owners = {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1}
    with job_on(g, owners, 2) as job:
        before = job.stats.by_mode["W2W"]
        assert k_reachable(job, 0) == set(range(6))
        assert job.stats.by_mode["W2W"] - before >= 1


def test_wrong_level_gives_empty_set(triangle):
    with job_on(triangle) as job:
        assert k_reachable(job, 1, k=1) == set()


# -- candidates --------------------------------------------------------------------


def test_path_closing_edge_candidates(path3):
    with job_on(path3) as job:
        cs = candidate_set(job, 1, 3)
    assert cs.members == {1, 2, 3} and cs.k == 1


def test_star_and_far_triangle():
    star = [(0, i) for i in range(1, 5)]
    tri = [(10, 11), (11, 12), (10, 12)]
    g = Graph.from_edges(star + tri)
    with job_on(g) as job:
        cs = candidate_set(job, 1, 2)
    assert cs.members == {0, 1, 2, 3, 4}
    assert not cs.members & {10, 11, 12}


def test_mixed_levels_root_at_lower_endpoint():
    k4 = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    g = Graph.from_edges(k4 + [(20, 21), (21, 22)])
    with job_on(g) as job:
        cs = candidate_set(job, 0, 20)
    assert cs.roots == (20,) and cs.k == 1
    assert cs.members == {20, 21, 22}


# -- maintenance ---------------------------------------------------------------------


def test_insert_closing_a_path(path3):
    with job_on(path3) as job:
        assert maintain_insert(job, 1, 3) == {1: 2, 2: 2, 3: 2}


def test_insert_without_denser_structure_changes_nothing():
    k4 = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    tail = [(0, 4), (4, 5), (5, 6), (4, 6)]
    g = Graph.from_edges(k4 + tail)
    with job_on(g) as job:
        assert maintain_insert(job, 1, 5) == {}
        assert coreness(job) == batch_coreness(Graph.from_edges(k4 + tail + [(1, 5)]))


def test_triangle_delete(triangle):
    with job_on(triangle) as job:
        assert maintain_delete(job, 1, 3) == {1: 1, 2: 1, 3: 1}


def test_delete_leaves_lower_neighbour_alone():
    k4 = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    g = Graph.from_edges(k4 + [(3, 9)])
    owners = {0: 0, 1: 0, 2: 1, 3: 1, 9: 0}
    with job_on(g, owners, 2) as job:
        delta = maintain_delete(job, 2, 3)
        assert 9 not in delta
        assert coreness(job)[9] == 1


def test_insert_then_delete_is_neutral():
    g = gnp(30, 0.15, 7)
    u, v = next((a, b) for a in g.vertices for b in g.vertices if a < b and not g.has_edge(a, b))
    with Job(split(g, 3, 1), KCoreHooks()) as job:
        job.start()
        maintain_insert(job, u, v)
        maintain_delete(job, u, v)
        assert coreness(job) == batch_coreness(g)


def test_delete_missing_edge_fails(triangle):
    triangle.remove_edge(1, 3)
    with job_on(triangle) as job:
        with pytest.raises(HookFailure) as err:
            job.apply(GraphUpdate.remove_edge(1, 3))
    assert isinstance(err.value.cause, MissingEdge)


def test_hundred_insertions_on_fifty_nodes():
    g = gnp(50, 0.08, 11)
    non_edges = [(a, b) for a in g.vertices for b in g.vertices if a < b and not g.has_edge(a, b)]
    import random

    stream = random.Random(3).sample(non_edges, 100)
    with Job(split(g, 4, 5), KCoreHooks()) as job:
        job.start()
        for u, v in stream:
            maintain_insert(job, u, v)
            g.add_edge(u, v)
        assert coreness(job) == batch_coreness(g)


@pytest.mark.parametrize("seed", range(4))
def test_stream_properties(seed):
    """Exactness, soundness of candidates and the unit bound, step by step."""
    g = gnp(40, 0.1, seed)
    with Job(split(g, 4, seed), KCoreHooks()) as job:
        job.start()
        for upd in random_stream(g, 40, seed + 100):
            before = batch_coreness(g)
            job.apply(upd)
            apply_update(g, upd)
            after = batch_coreness(g)
            assert coreness(job) == after
            event: KCoreEvent = job.state.history[-1]
            changed = {w for w in after if after[w] != before.get(w)}
            assert changed <= event.candidates.members
            assert all(abs(after[w] - before[w]) <= 1 for w in before if w in after)


def test_intra_block_update_stays_local():
    left = [(0, 1), (1, 2), (0, 2)]
    right = [(10, 11), (11, 12), (10, 12)]
    g = Graph.from_edges(left + right + [(2, 10), (3, 0), (4, 0)])
    owners = {u: (0 if u < 10 else 1) for u in g.vertices}
    with job_on(g, owners, 2) as job:
        job.apply(GraphUpdate.add_edge(3, 4))
        assert job.stats.per_update[-1]["W2W"] == 0
        assert coreness(job)[3] == 2


def test_peel_candidates_rules():
    # two candidates at k=1 supporting each other plus one higher neighbour each
    cands = {1: (1, [2]), 2: (1, [1])}
    assert peel_candidates(cands, 1, insert=True) == {1: 2, 2: 2}
    cands = {1: (0, [2]), 2: (0, [1])}
    assert peel_candidates(cands, 1, insert=True) == {}
    assert peel_candidates({1: (1, []), 2: (2, [])}, 2, insert=False) == {1: 1}
