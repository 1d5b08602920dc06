"""Shared machinery for algorithms running on edge-cut blocks.

The master keeps a directory ``vertex -> owning block`` used for routing;
workers own the structure of their block. Subclasses write the edge
insertion and deletion plans, vertex updates are handled here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from ..graph import Block, DuplicateVertex, GraphUpdate, MissingVertex, UpdateKind
from ..runtime import Message, Plan, PlanState, PlannedHooks, credit_of, m2w, split_credit, w2m, w2w
from ..partitioning import mix64


@dataclass
class BlockMasterState(PlanState):
    directory: dict[int, int] = field(default_factory=dict)
    history: list[Any] = field(default_factory=list)
    seq: int = 0


class BlockAlgorithm(PlannedHooks):
    """Plan-based hooks over edge-cut blocks.

    Worker messages are dispatched to ``on_<kind>(block, body)`` methods,
    which return ``(reply_body, forwards)``; ``forwards`` is a list of
    ``(block, kind, body)`` W2W messages. Credit is attached automatically.
    """

    init_kind = "hello"

    def init_master(self, num_workers: int) -> BlockMasterState:
        return BlockMasterState(num_workers)

    # -- master ----------------------------------------------------------------

    def start_plan(self, state: BlockMasterState) -> Plan:
        replies = yield [m2w(b, self.init_kind) for b in range(state.num_workers)]
        for b, body in replies:
            for u in body.get("owned", ()):
                state.directory[u] = b
        yield from self.after_start(state, replies)

    def after_start(self, state: BlockMasterState, replies: list[tuple[int, Any]]) -> Plan:
        return
        yield

    def owner(self, state: BlockMasterState, u: int) -> int:
        try:
            return state.directory[u]
        except KeyError:
            raise MissingVertex(f"vertex {u} not in graph") from None

    def place(self, state: BlockMasterState, u: int, near: int | None = None) -> int:
        """Owner of a vertex that is new to the graph."""
        if near is not None and near in state.directory:
            return state.directory[near]
        return mix64(u) % state.num_workers

    def link_requests(self, state: BlockMasterState, kind: str, u: int, v: int, **extra: Any) -> list[Message]:
        """One message per block owning an endpoint of edge ``(u, v)``.

        Unknown endpoints are placed first: next to the other endpoint when
        it exists, else by hash.
        """
        if u not in state.directory:
            state.directory[u] = self.place(state, u, v)
        if v not in state.directory:
            state.directory[v] = self.place(state, v, u)
        bu, bv = state.directory[u], state.directory[v]
        body = {"u": u, "v": v, "bu": bu, "bv": bv, **extra}
        return [m2w(b, kind, body) for b in sorted({bu, bv})]

    def update_plan(self, state: BlockMasterState, upd: GraphUpdate) -> Plan:
        if upd.kind is UpdateKind.ADD_EDGE:
            e = upd.edge
            return self.insert_plan(state, e.u, e.v, e.value)
        if upd.kind is UpdateKind.REMOVE_EDGE:
            e = upd.edge
            for w in (e.u, e.v):
                self.owner(state, w)
            return self.delete_plan(state, e.u, e.v)
        if upd.kind is UpdateKind.ADD_VERTEX:
            return self.add_vertex_plan(state, upd.vertex)
        return self.remove_vertex_plan(state, upd.vertex)

    def insert_plan(self, state: BlockMasterState, u: int, v: int, value: Any = None) -> Plan:
        raise NotImplementedError

    def delete_plan(self, state: BlockMasterState, u: int, v: int) -> Plan:
        raise NotImplementedError

    def add_vertex_plan(self, state: BlockMasterState, u: int) -> Plan:
        if u in state.directory:
            raise DuplicateVertex(f"vertex {u} already in graph")
        b = self.place(state, u)
        state.directory[u] = b
        yield [m2w(b, "add_vertex", {"u": u})]

    def remove_vertex_plan(self, state: BlockMasterState, u: int) -> Plan:
        b = self.owner(state, u)
        replies = yield [m2w(b, "neighbors", {"u": u})]
        for w in replies[0][1]["nbrs"]:
            yield from self.delete_plan(state, u, w)
        yield [m2w(b, "drop_vertex", {"u": u})]
        del state.directory[u]

    # -- worker ----------------------------------------------------------------

    def worker_compute(self, block: Block, msg: Message) -> list[Message]:
        handler = getattr(self, "on_" + msg.kind, None)
        if handler is None:
            raise ValueError(f"{self.name}: no handler for message kind {msg.kind!r}")
        body = msg.body()
        credit = credit_of(body)
        result = handler(block, body if body is not None else {})
        reply, forwards = result if isinstance(result, tuple) else (result, [])
        return self.respond(block, credit, reply, forwards)

    def respond(
        self,
        block: Block,
        credit: Fraction,
        reply: dict | None,
        forwards: list[tuple[int, str, dict]],
    ) -> list[Message]:
        shares = split_credit(credit, len(forwards) + 1)
        out = [w2w(block.block_id, dst, kind, {**body, "credit": share}) for (dst, kind, body), share in zip(forwards, shares)]
        out.append(w2m(block.block_id, "notify", {**(reply or {}), "credit": shares[-1]}))
        return out

    def init_block(self, block: Block) -> dict:
        """Batch work of one worker, run on the ``init_kind`` message."""
        return {}

    def on_hello(self, block: Block, body: dict) -> Any:
        return {"owned": block.owned_vertices(), **self.init_block(block)}

    def on_add_vertex(self, block: Block, body: dict) -> dict:
        block.add_vertex(body["u"])
        return {}

    def on_neighbors(self, block: Block, body: dict) -> dict:
        return {"nbrs": block.neighbors(body["u"])}

    def on_drop_vertex(self, block: Block, body: dict) -> dict:
        block.remove_vertex(body["u"])
        return {}

    # -- structural helpers used by subclasses ------------------------------------

    @staticmethod
    def apply_link(block: Block, body: dict, sync_degree: bool = True) -> list[int]:
        """Add edge ``(u, v)`` to ``block``; returns the owned endpoints."""
        u, v, bu, bv = body["u"], body["v"], body["bu"], body["bv"]
        me = block.block_id
        mine = [w for w, b in ((u, bu), (v, bv)) if b == me]
        for w in mine:
            if not block.owns(w):
                block.add_vertex(w)
        if bu == bv:
            block.local_graph.add_edge(u, v, body.get("value"))
        else:
            w = mine[0]
            other, ob = (v, bv) if w == u else (u, bu)
            block.add_frontier_edge(w, other, ob, body.get("value"))
        if sync_degree:
            for w in mine:
                block.vertex_states[w].degree = block.degree(w)
        return mine

    @staticmethod
    def apply_unlink(block: Block, body: dict, sync_degree: bool = True) -> list[int]:
        """Remove edge ``(u, v)`` from ``block``; returns the owned endpoints."""
        u, v, bu, bv = body["u"], body["v"], body["bu"], body["bv"]
        me = block.block_id
        mine = [w for w, b in ((u, bu), (v, bv)) if b == me]
        if bu == bv:
            block.local_graph.remove_edge(u, v)
        else:
            w = mine[0]
            other = v if w == u else u
            block.remove_frontier_edge(w, other)
            if not block.is_remote_referenced(other):
                block.ghosts.pop(other, None)
        if sync_degree:
            for w in mine:
                block.vertex_states[w].degree = block.degree(w)
        return mine
