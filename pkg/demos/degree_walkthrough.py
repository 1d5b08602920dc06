"""
Degrees on two blocks
=====================

Two triangles joined by one edge, split over two workers. We compute the
degrees, insert an edge across the blocks and count what went over the
wire.
"""
from __future__ import annotations

from blockgraph.algorithms import DegreeHooks
from blockgraph.graph import Graph, GraphUpdate, build_blocks
from blockgraph.runtime import Job

# %%
# Vertices 1-3 live on worker 0, vertices 4-6 on worker 1.
g = Graph.from_edges([(1, 2), (2, 3), (1, 3), (3, 4), (4, 5), (5, 6), (4, 6)])
blocks = build_blocks(g, {1: 0, 2: 0, 3: 0, 4: 1, 5: 1, 6: 1}, 2)
for b in blocks:
    print(f"block {b.block_id}: owns {b.owned_vertices()}, frontier {sorted(b.frontier)}")

# %%
# The batch phase fills in every degree; the frontier edge 3-4 counts once
# for each endpoint.
with Job(blocks, DegreeHooks(), trace=True) as job:
    job.start()
    print("degrees:", job.snapshot().state_of("degree"))

    # %%
    # Inserting 4-1 touches one vertex on each worker: two requests out,
    # two notifications back.
    job.apply(GraphUpdate.add_edge(4, 1))
    print("messages for 4-1:", job.stats.per_update[-1])

    # %%
    # An edge inside block 1 needs only one worker.
    job.apply(GraphUpdate.remove_edge(5, 6))
    print("messages for removing 5-6:", job.stats.per_update[-1])
    print("degrees now:", job.snapshot().state_of("degree"))

    # %%
    # The trace lists every framed message in send order.
    for seq, phase, msg_id, mode, src, dst, kind in job.stats.trace[-6:]:
        print(f"  #{seq} update {phase}: {mode} {src}->{dst} {kind}")
