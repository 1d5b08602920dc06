"""
Maximal cliques under edge updates
==================================

Each clique is stored in the prefix tree of its smallest vertex. An
insertion swallows cliques that the new edge completes; a deletion splits
cliques that contained both endpoints.
"""
from __future__ import annotations

from blockgraph.algorithms import MCEHooks
from blockgraph.algorithms.mce import all_cliques, mce_delete_edge, mce_insert_edge, tree_paths
from blockgraph.graph import Graph, build_blocks
from blockgraph.runtime import Job

g = Graph.from_edges([(1, 2), (2, 3), (3, 4), (4, 5), (3, 5), (5, 6)])
blocks = build_blocks(g, {1: 0, 2: 0, 3: 0, 4: 1, 5: 1, 6: 1}, 2)

with Job(blocks, MCEHooks()) as job:
    job.start()
    print("initial:", all_cliques(job.blocks))

    # %%
    # Closing 1-3 turns two edges into a triangle.
    removed, added = mce_insert_edge(job, 1, 3)
    print("insert 1-3: removed", removed, "added", added)

    # %%
    # 2-4 and 2-5 build a 4-clique across the two blocks.
    for u, v in [(2, 4), (2, 5)]:
        removed, added = mce_insert_edge(job, u, v)
        print(f"insert {u}-{v}: removed {removed} added {added}")

    # %%
    # Deleting 3-5 splits it again.
    removed, added = mce_delete_edge(job, 3, 5)
    print("delete 3-5: removed", removed, "added", added)

    # %%
    # Where the cliques live.
    for b in job.blocks:
        for w, st in sorted(b.vertex_states.items()):
            if tree_paths(st.clique_tree):
                print(f"  block {b.block_id}, T_{w}: {tree_paths(st.clique_tree)}")
