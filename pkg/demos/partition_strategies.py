"""
Incremental versus naive repartitioning
=======================================

Partition 90% of a graph, then stream the other 10% in. The incremental
strategy places each new edge and touches nothing else; the naive one
partitions the whole graph again. The mutation counter tells them apart.
"""
from __future__ import annotations

import networkx as nx

from blockgraph.algorithms import PartitionHooks
from blockgraph.bench import holdout_split
from blockgraph.graph import Graph
from blockgraph.partitioning import assignment_from_blocks, check_repartition, edge_blocks, partition
from blockgraph.runtime import Job

G = nx.gnm_random_graph(1000, 4000, seed=11)
full = Graph.from_edges(G.edges(), vertices=G.nodes())

for method in ("hash", "random", "dfep"):
    for strategy in ("incremental", "naive"):
        g, held = holdout_split(full, 0.1, seed=0)
        blocks = edge_blocks(g, partition(g, 4, method, seed=0))
        with Job(blocks, PartitionHooks(method, strategy, seed=0)) as job:
            job.start()
            for upd in held:
                job.apply(upd)
            job.finish()
            pa = assignment_from_blocks(job.blocks)
            pa.check(full)
            decision = check_repartition(pa.sizes)
            print(
                f"{method:6s} {strategy:11s} mutations={job.state.pa.mutations:5d} "
                f"sizes={pa.sizes} verdict={decision.verdict}"
            )

# %%
# The trigger is a pure function of the block sizes.
print(check_repartition([30, 25, 25, 20], tau=1.15))
