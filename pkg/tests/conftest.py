from __future__ import annotations

import random

import networkx as nx
import pytest

from blockgraph.graph import Graph, GraphUpdate, build_blocks
from blockgraph.partitioning import random_partition, vertex_owners

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def nx_to_graph(G: nx.Graph) -> Graph:
    return Graph.from_edges(G.edges(), vertices=G.nodes())


def gnp(n: int, p: float, seed: int) -> Graph:
    return nx_to_graph(nx.gnp_random_graph(n, p, seed=seed))


def split(g: Graph, k: int, seed: int = 0):
    """Edge-cut blocks from a random edge partition."""
    return build_blocks(g, vertex_owners(g, random_partition(g, k, seed)), k)


def random_stream(g: Graph, steps: int, seed: int) -> list[GraphUpdate]:
    """Valid mixed insert/delete stream against a copy of ``g``."""
    rng = random.Random(seed)
    h = g.copy()
    verts = h.vertices
    n = len(verts)
    out = []
    for _ in range(steps):
        full = h.num_edges == n * (n - 1) // 2
        if h.num_edges and (full or rng.random() < 0.5):
            u, v = rng.choice(list(h.edges()))
            h.remove_edge(u, v)
            out.append(GraphUpdate.remove_edge(u, v))
        else:
            while True:
                u, v = rng.sample(verts, 2)
                if not h.has_edge(u, v):
                    break
            h.add_edge(u, v)
            out.append(GraphUpdate.add_edge(u, v))
    return out


@pytest.fixture
def triangle() -> Graph:
    return Graph.from_edges([(1, 2), (2, 3), (1, 3)])


@pytest.fixture
def path3() -> Graph:
    return Graph.from_edges([(1, 2), (2, 3)])


def ego_facebook_path():
    """SNAP ego-Facebook edge list: $BLOCKGRAPH_EGO_FACEBOOK or data/facebook_combined.txt[.gz]."""
    from pathlib import Path
    import os

    env = os.environ.get("BLOCKGRAPH_EGO_FACEBOOK")
    if env:
        return Path(env)
    root = Path(__file__).resolve().parent.parent / "data"
    for name in ("facebook_combined.txt", "facebook_combined.txt.gz"):
        if (root / name).exists():
            return root / name
    return None
