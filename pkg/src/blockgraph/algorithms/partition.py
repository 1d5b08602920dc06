"""Dynamic edge partitioning run on the master/worker runtime.

Here a block is an edge partition: worker ``i`` holds ``E_i`` as its local
graph, vertices being replicated wherever they have edges. The master
keeps a mirror of the assignment for routing and decides where each new
edge goes:

* ``incremental``: hash and random place the edge directly; dfep asks the
  blocks holding the endpoints for their unit-based update score and
  assigns the edge to the best one;
* ``naive``: new edges are buffered and the whole graph is partitioned
  again from scratch when the stream ends.

After every removal each worker reports its load score and the master
repartitions when one exceeds ``tau``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from ..graph import (
    Block,
    DuplicateEdge,
    DuplicateVertex,
    Edge,
    Graph,
    GraphUpdate,
    MissingEdge,
    MissingVertex,
    UpdateKind,
    VertexState,
)
from ..partitioning import (
    DFEPParams,
    PartitionAssignment,
    RepartitionDecision,
    choose_block,
    edge_hash,
    mix64,
    partition,
    threshold_score,
    ub_score,
)
from ..runtime import Plan, m2w
from .base import BlockAlgorithm, BlockMasterState


@dataclass
class PartitionMasterState(BlockMasterState):
    pa: PartitionAssignment | None = None
    pending: list[tuple[int, int]] = field(default_factory=list)
    isolated: dict[int, int] = field(default_factory=dict)
    decisions: list[RepartitionDecision] = field(default_factory=list)
    repartitions: int = 0
    rng: Any = None


class PartitionHooks(BlockAlgorithm):
    name = "partition"
    vertex_columns = ("block",)

    def __init__(
        self,
        method: str = "dfep",
        strategy: str = "incremental",
        seed: int = 0,
        tau: float = 1.5,
        alpha: float = 1.0,
        beta: float = 1.0,
        params: DFEPParams | None = None,
    ) -> None:
        if method not in ("hash", "random", "dfep"):
            raise ValueError(f"unknown partitioning method {method!r}")
        if strategy not in ("incremental", "naive"):
            raise ValueError(f"unknown strategy {strategy!r}")
        self.method = method
        self.strategy = strategy
        self.seed = seed
        self.tau = tau
        self.alpha = alpha
        self.beta = beta
        self.params = params

    def init_master(self, num_workers: int) -> PartitionMasterState:
        return PartitionMasterState(num_workers, rng=np.random.default_rng(self.seed))

    # -- master ----------------------------------------------------------------

    def start_plan(self, state: PartitionMasterState) -> Plan:
        replies = yield [m2w(b, "pt_hello") for b in range(state.num_workers)]
        self._load_mirror(state, replies)

    def _load_mirror(self, state: PartitionMasterState, replies: list[tuple[int, Any]]) -> None:
        pa = PartitionAssignment(state.num_workers)
        state.isolated = {}
        for b, body in replies:
            for u, v in body.get("edges", []):
                pa.assign(u, v, b)
            for u in body.get("isolated", []):
                state.isolated[u] = b
        pa.mutations = 0
        state.pa = pa

    def update_plan(self, state: PartitionMasterState, upd: GraphUpdate) -> Plan:
        if upd.kind is UpdateKind.ADD_EDGE:
            return self.insert_plan(state, upd.edge.u, upd.edge.v, upd.edge.value)
        if upd.kind is UpdateKind.REMOVE_EDGE:
            return self.delete_plan(state, upd.edge.u, upd.edge.v)
        if upd.kind is UpdateKind.ADD_VERTEX:
            return self.add_vertex_plan(state, upd.vertex)
        return self.remove_vertex_plan(state, upd.vertex)

    def insert_plan(self, state: PartitionMasterState, u: int, v: int, value: Any = None) -> Plan:
        pa = state.pa
        key = (min(u, v), max(u, v))
        if key in pa.block_of or key in state.pending:
            raise DuplicateEdge(f"edge {key} already in graph")
        if self.strategy == "naive":
            state.pending.append(key)
            return
        if self.method == "hash":
            b = edge_hash(u, v) % pa.num_blocks
        elif self.method == "random":
            b = int(state.rng.integers(pa.num_blocks))
        else:
            candidates = sorted({h for h in (pa.home(u), pa.home(v)) if h is not None})
            if not candidates:
                candidates = list(range(pa.num_blocks))
            body = {"u": u, "v": v, "total": pa.num_edges, "k": pa.num_blocks, "alpha": self.alpha, "beta": self.beta}
            replies = yield [m2w(c, "pt_score", body) for c in candidates]
            scores = {src: r["score"] for src, r in replies if "score" in r}
            b = choose_block(scores, pa.sizes)
        yield from self._assign(state, [(u, v, b)])
        return b

    def _assign(self, state: PartitionMasterState, placed: list[tuple[int, int, int]]) -> Plan:
        per_block: dict[int, dict[str, list]] = {}

        def body(b: int) -> dict[str, list]:
            return per_block.setdefault(b, {"edges": [], "forget": []})

        for u, v, b in placed:
            state.pa.assign(u, v, b)
            for w in (u, v):
                holder = state.isolated.pop(w, None)
                if holder is not None and holder != b:
                    body(holder)["forget"].append(w)
            body(b)["edges"].append([u, v])
        yield [m2w(b, "pt_assign", msg) for b, msg in sorted(per_block.items())]

    def delete_plan(self, state: PartitionMasterState, u: int, v: int) -> Plan:
        key = (min(u, v), max(u, v))
        if key in state.pending:
            state.pending.remove(key)
            return
        if key not in state.pa.block_of:
            raise MissingEdge(f"edge {key} not in graph")
        b = state.pa.unassign(u, v)
        drop = self._orphans(state, b, key)
        yield [m2w(b, "pt_remove", {"edges": [list(key)], "drop": drop})]
        yield from self.threshold_plan(state)

    def _orphans(self, state: PartitionMasterState, b: int, vertices: Iterable[int]) -> list[int]:
        """Vertices left without edges in block ``b``: dropped there unless they
        have no edge anywhere, in which case ``b`` keeps them as isolated."""
        pa = state.pa
        drop = []
        for w in sorted(set(vertices)):
            if pa.incident(b, w):
                continue
            if pa.home(w) is None and w not in state.isolated:
                state.isolated[w] = b
            else:
                drop.append(w)
        return drop

    def threshold_plan(self, state: PartitionMasterState) -> Plan:
        pa = state.pa
        replies = yield [
            m2w(b, "pt_threshold", {"total": pa.num_edges, "k": pa.num_blocks}) for b in range(state.num_workers)
        ]
        scores = tuple(body["score"] for _, body in replies)
        verdict = "repartition" if scores and max(scores) > self.tau else "keep"
        decision = RepartitionDecision(scores, verdict, self.tau)
        state.decisions.append(decision)
        if verdict == "repartition":
            yield from self.repartition_plan(state)
        return decision

    def repartition_plan(self, state: PartitionMasterState) -> Plan:
        """Gather the whole graph, partition it from scratch, reload the workers."""
        replies = yield [m2w(b, "pt_dump") for b in range(state.num_workers)]
        g = Graph()
        for _, body in replies:
            for u in body.get("isolated", []):
                if u not in g:
                    g.add_vertex(u)
            for u, v in body.get("edges", []):
                g.add_edge(u, v)
        for u, v in state.pending:
            g.add_edge(u, v)
        state.pending = []
        mutations = state.pa.mutations
        fresh = partition(g, state.num_workers, self.method, self.seed + state.repartitions, self.params)
        fresh.mutations += mutations
        state.pa = fresh
        state.repartitions += 1
        isolated = {u: mix64(u) % state.num_workers for u in g.vertices if fresh.home(u) is None}
        state.isolated = isolated
        per_block: dict[int, dict[str, list]] = {b: {"edges": [], "isolated": []} for b in range(state.num_workers)}
        for (u, v), b in sorted(fresh.block_of.items()):
            per_block[b]["edges"].append([u, v])
        for u, b in sorted(isolated.items()):
            per_block[b]["isolated"].append(u)
        yield [m2w(b, "pt_load", body) for b, body in sorted(per_block.items())]

    def finish_plan(self, state: PartitionMasterState) -> Plan:
        if self.strategy == "naive" and state.pending:
            yield from self.repartition_plan(state)

    def add_vertex_plan(self, state: PartitionMasterState, u: int) -> Plan:
        if u in state.isolated or state.pa.home(u) is not None:
            raise DuplicateVertex(f"vertex {u} already in graph")
        b = mix64(u) % state.num_workers
        state.isolated[u] = b
        yield [m2w(b, "pt_add_vertex", {"u": u})]

    def remove_vertex_plan(self, state: PartitionMasterState, u: int) -> Plan:
        pa = state.pa
        state.pending = [e for e in state.pending if u not in e]
        holders = pa.blocks_of(u)
        if u in state.isolated:
            holders = sorted(set(holders) | {state.isolated.pop(u)})
        if not holders:
            raise MissingVertex(f"vertex {u} not in graph")
        replies = yield [m2w(b, "pt_drop_vertex", {"u": u}) for b in holders]
        prune = {}
        for b, body in replies:
            nbrs = []
            for a, c in body.get("edges", []):
                pa.unassign(a, c)
                nbrs.append(c if a == u else a)
            drop = self._orphans(state, b, nbrs)
            if drop:
                prune[b] = drop
        yield [m2w(b, "pt_prune", {"drop": drop}) for b, drop in sorted(prune.items())]
        yield from self.threshold_plan(state)

    # -- worker ----------------------------------------------------------------

    @staticmethod
    def _isolated(block: Block) -> list[int]:
        g = block.local_graph
        return [u for u in g.vertices if g.degree(u) == 0]

    def on_pt_hello(self, block: Block, body: dict) -> dict:
        return {"edges": [list(e) for e in block.local_graph.edges()], "isolated": self._isolated(block)}

    on_pt_dump = on_pt_hello

    def on_pt_score(self, block: Block, body: dict) -> dict:
        g = block.local_graph
        u, v = body["u"], body["v"]
        locality = sum(g.degree(w) for w in (u, v) if w in g)
        score = ub_score(locality, g.num_edges, body["total"], body["k"], body["alpha"], body["beta"])
        return {"score": score}

    def on_pt_assign(self, block: Block, body: dict) -> dict:
        for u in body["forget"]:
            block.local_graph.remove_vertex(u)
        for u, v in body["edges"]:
            block.local_graph.add_edge(u, v)
        return {}

    def on_pt_remove(self, block: Block, body: dict) -> dict:
        g = block.local_graph
        for u, v in body["edges"]:
            g.remove_edge(u, v)
        return self.on_pt_prune(block, body)

    def on_pt_prune(self, block: Block, body: dict) -> dict:
        for w in body["drop"]:
            block.local_graph.remove_vertex(w)
        return {}

    def on_pt_threshold(self, block: Block, body: dict) -> dict:
        return {"score": threshold_score(block.local_graph.num_edges, body["total"], body["k"])}

    def on_pt_load(self, block: Block, body: dict) -> dict:
        g = Graph()
        for u in body["isolated"]:
            g.add_vertex(u)
        for u, v in body["edges"]:
            g.add_edge(u, v)
        block.local_graph = g
        return {}

    def on_pt_add_vertex(self, block: Block, body: dict) -> dict:
        block.local_graph.add_vertex(body["u"])
        return {}

    def on_pt_drop_vertex(self, block: Block, body: dict) -> dict:
        g = block.local_graph
        u = body["u"]
        nbrs = g.neighbors(u)
        g.remove_vertex(u)
        return {"edges": [[min(u, w), max(u, w)] for w in nbrs]}

    # -- output ----------------------------------------------------------------

    def collect(self, blocks, state):
        pa = PartitionAssignment(len(blocks))
        vertices: set[int] = set()
        for b in blocks:
            vertices.update(b.local_graph.vertices)
            for u, v in b.local_graph.edges():
                pa.assign(u, v, b.block_id)
        if state is not None and state.pa is not None and not state.pending and pa != state.pa:
            raise AssertionError("worker blocks disagree with the master's assignment")
        out = []
        for u in sorted(vertices):
            home = pa.home(u)
            deg = sum(pa.incident(b, u) for b in range(pa.num_blocks))
            out.append((u, VertexState(degree=deg, block=home if home is not None else mix64(u) % pa.num_blocks)))
        edges = [Edge(u, v) for u, v in sorted(pa.block_of)]
        return out, edges, {"assignment.txt": pa.dump_lines()}
