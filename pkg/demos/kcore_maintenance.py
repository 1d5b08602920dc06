"""
Keeping coreness current
========================

A random graph on four workers. After each edge update the master
collects the vertices that might change, settles their new coreness and
leaves everything else alone. We compare with a fresh peeling at the end.
"""
from __future__ import annotations

import random

import networkx as nx

from blockgraph.algorithms import KCoreHooks
from blockgraph.algorithms.kcore import batch_coreness, candidate_set, k_reachable
from blockgraph.graph import Graph, GraphUpdate, build_blocks
from blockgraph.partitioning import random_partition, vertex_owners
from blockgraph.runtime import Job

G = nx.gnp_random_graph(80, 0.08, seed=3)
g = Graph.from_edges(G.edges(), vertices=G.nodes())
blocks = build_blocks(g, vertex_owners(g, random_partition(g, 4, seed=1)), 4)

# %%
# The batch phase converges on exact coreness by exchanging estimates
# between blocks.
job = Job(blocks, KCoreHooks())
job.start()
core = job.snapshot().state_of("coreness")
print("max coreness:", max(core.values()), "| agrees with peeling:", core == batch_coreness(g))

# %%
# Pick a missing edge and look at its candidates before inserting it.
rng = random.Random(5)
u, v = rng.choice([(a, b) for a in g.vertices for b in g.vertices if a < b and not g.has_edge(a, b)])
cs = candidate_set(job, u, v)
print(f"insert {u}-{v}: k={cs.k}, roots {cs.roots}, {len(cs.members)} candidates")
print("reachable from the first root:", len(k_reachable(job, cs.roots[0])))

# %%
# Apply a short mixed stream; each event records candidates and the delta.
for _ in range(15):
    if rng.random() < 0.5:
        a, b = rng.choice(list(g.edges()))
        upd = GraphUpdate.remove_edge(a, b)
        g.remove_edge(a, b)
    else:
        a, b = rng.choice([(a, b) for a in g.vertices for b in g.vertices if a < b and not g.has_edge(a, b)])
        upd = GraphUpdate.add_edge(a, b)
        g.add_edge(a, b)
    job.apply(upd)
    ev = job.state.history[-1]
    print(f"{str(upd):>10}  candidates={len(ev.candidates.members):3d}  changed={ev.delta}")

print("still exact:", job.snapshot().state_of("coreness") == batch_coreness(g))
job.close()
