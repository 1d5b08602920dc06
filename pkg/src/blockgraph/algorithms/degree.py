"""Vertex degrees, computed per block and maintained under edge updates.

Inserting ``(u, v)`` sends one M2W message to the owner of each endpoint
(a single one when both live in the same block); each owner stores the
edge, bumps the degree and answers with a W2M notification.
"""
from __future__ import annotations

from typing import Any

from ..graph import Block, Graph
from ..runtime import Plan
from .base import BlockAlgorithm, BlockMasterState


class DegreeHooks(BlockAlgorithm):
    name = "degree"
    vertex_columns = ("degree",)

    def init_block(self, block: Block) -> dict:
        for u, state in block.vertex_states.items():
            state.degree = block.degree(u)
        return {}

    def insert_plan(self, state: BlockMasterState, u: int, v: int, value: Any = None) -> Plan:
        yield self.link_requests(state, "deg_link", u, v, value=value)

    def delete_plan(self, state: BlockMasterState, u: int, v: int) -> Plan:
        yield self.link_requests(state, "deg_unlink", u, v)

    def on_deg_link(self, block: Block, body: dict) -> dict:
        mine = self.apply_link(block, body, sync_degree=False)
        for w in mine:
            block.vertex_states[w].degree += 1
        return {"degrees": {str(w): block.vertex_states[w].degree for w in mine}}

    def on_deg_unlink(self, block: Block, body: dict) -> dict:
        mine = self.apply_unlink(block, body, sync_degree=False)
        for w in mine:
            block.vertex_states[w].degree -= 1
        return {"degrees": {str(w): block.vertex_states[w].degree for w in mine}}


def degree_oracle(g: Graph) -> dict[int, int]:
    return {u: g.degree(u) for u in g.vertices}
