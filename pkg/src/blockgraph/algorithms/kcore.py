"""Core decomposition and its maintenance under edge updates.

Batch phase: every worker starts from ``k(u) = deg(u)`` and repeatedly
lowers it to the h-index of its neighbours' values (remote neighbours are
read from ghosts refreshed by W2W messages), until a whole round changes
nothing. This converges to the exact coreness from any message order.

Per update ``(u, v)`` with ``k* = min(k(u), k(v))``:

1. the owners apply the structural change and report ``k(u), k(v)``;
2. a breadth-first search from the endpoints with ``k = k*`` collects the
   vertices reachable through coreness-``k*`` vertices only; it crosses
   blocks with W2W probes and every worker reports, per candidate, how
   many neighbours have a larger coreness and which have coreness ``k*``;
3. the master peels the candidate set with those counts: after an
   insertion the survivors move to ``k* + 1``, after a deletion the
   evicted vertices drop to ``k* - 1``; nothing else can change;
4. owners store the new values and the master refreshes the ghosts.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Iterable

from ..graph import Block, Graph, GraphUpdate
from ..runtime import Job, Plan, m2w
from .base import BlockAlgorithm, BlockMasterState


def batch_coreness(g: Graph) -> dict[int, int]:
    """Exact coreness of every vertex by bucket peeling, O(|V| + |E|)."""
    deg = {u: g.degree(u) for u in g.vertices}
    if not deg:
        return {}
    max_deg = max(deg.values())
    buckets: list[list[int]] = [[] for _ in range(max_deg + 1)]
    for u in g.vertices:
        buckets[deg[u]].append(u)
    core: dict[int, int] = {}
    k = 0
    for d in range(max_deg + 1):
        k = max(k, d)
        bucket = buckets[d]
        while bucket:
            u = bucket.pop()
            if u in core or deg[u] != d:
                continue
            core[u] = k
            for w in g.neighbors(u):
                if w not in core and deg[w] > d:
                    deg[w] -= 1
                    buckets[max(deg[w], d)].append(w)
    return core


def h_index(values: Iterable[int], cap: int) -> int:
    """Largest ``h <= cap`` with at least ``h`` values ``>= h``."""
    vals = sorted((min(x, cap) for x in values), reverse=True)
    h = 0
    for i, x in enumerate(vals, start=1):
        if x >= i:
            h = i
        else:
            break
    return h


@dataclass(frozen=True)
class CandidateSet:
    """Vertices whose coreness may change after updating edge ``roots``."""

    members: frozenset[int]
    roots: tuple[int, ...]
    k: int
    edge: tuple[int, int] | None = None
    kind: str = "insert"


@dataclass(frozen=True)
class KCoreEvent:
    candidates: CandidateSet
    delta: dict[int, int]


def peel_candidates(
    cands: dict[int, tuple[int, list[int]]], k: int, insert: bool
) -> dict[int, int]:
    """New coreness of the candidates that change.

    ``cands`` maps each candidate to ``(n_higher, same)``: its number of
    neighbours with coreness above ``k`` and its neighbours at exactly
    ``k``. A candidate's support is ``n_higher`` plus its same-level
    neighbours still in the set.
    """
    alive = set(cands)
    support = {w: nh + sum(1 for x in same if x in alive) for w, (nh, same) in cands.items()}
    limit = k if insert else k - 1
    queue = deque(sorted(w for w in alive if support[w] <= limit))
    evicted: set[int] = set(queue)
    while queue:
        w = queue.popleft()
        for x in cands[w][1]:
            if x in alive and x not in evicted:
                support[x] -= 1
                if support[x] <= limit:
                    evicted.add(x)
                    queue.append(x)
    if insert:
        return {w: k + 1 for w in sorted(alive - evicted)}
    return {w: k - 1 for w in sorted(evicted)}


def _pairs(d: dict[int, Any]) -> list[list[Any]]:
    return [[w, x] for w, x in sorted(d.items())]


class KCoreHooks(BlockAlgorithm):
    name = "kcore"
    vertex_columns = ("coreness",)

    # -- master ----------------------------------------------------------------

    def after_start(self, state: BlockMasterState, replies: list[tuple[int, Any]]) -> Plan:
        while True:
            replies = yield [m2w(b, "kc_round") for b in range(state.num_workers)]
            if not any(body.get("changed") for _, body in replies):
                break

    def _next_sid(self, state: BlockMasterState) -> int:
        state.seq += 1
        return state.seq

    def search(
        self,
        state: BlockMasterState,
        roots: list[int],
        k: int,
        ghosts: dict[int, dict[int, int]] | None = None,
    ) -> Plan:
        """Collect the ``k``-reachable set of ``roots``; returns candidate -> (n_higher, same)."""
        sid = self._next_sid(state)
        ghosts = ghosts or {}
        by_block: dict[int, list[int]] = {}
        for r in roots:
            by_block.setdefault(self.owner(state, r), []).append(r)
        targets = sorted(set(by_block) | set(ghosts))
        replies = yield [
            m2w(b, "kc_search", {"sid": sid, "k": k, "roots": sorted(by_block.get(b, [])), "ghosts": _pairs(ghosts.get(b, {}))})
            for b in targets
        ]
        cands: dict[int, tuple[int, list[int]]] = {}
        for _, body in replies:
            for w, nh, same in body.get("cands", []):
                cands[w] = (nh, same)
        return cands

    def commit(self, state: BlockMasterState, delta: dict[int, int]) -> Plan:
        """Store new coreness values at their owners and refresh ghosts."""
        per_owner: dict[int, dict[int, int]] = {}
        for w, k in delta.items():
            per_owner.setdefault(self.owner(state, w), {})[w] = k
        replies = yield [m2w(b, "kc_set", {"set": _pairs(vals)}) for b, vals in sorted(per_owner.items())]
        refresh: dict[int, dict[int, int]] = {}
        for _, body in replies:
            for b, w, k in body.get("refresh", []):
                refresh.setdefault(b, {})[w] = k
        yield [m2w(b, "kc_ghost", {"ghosts": _pairs(vals)}) for b, vals in sorted(refresh.items())]

    def maintain(self, state: BlockMasterState, u: int, v: int, core: dict[int, int], insert: bool) -> Plan:
        k = min(core[u], core[v])
        roots = [w for w in (u, v) if core[w] == k]
        ghosts: dict[int, dict[int, int]] = {}
        if insert:
            bu, bv = self.owner(state, u), self.owner(state, v)
            if bu != bv:
                ghosts = {bu: {v: core[v]}, bv: {u: core[u]}}
        cands = yield from self.search(state, roots, k, ghosts)
        delta = peel_candidates(cands, k, insert)
        yield from self.commit(state, delta)
        cs = CandidateSet(frozenset(cands), tuple(roots), k, (min(u, v), max(u, v)), "insert" if insert else "delete")
        state.history.append(KCoreEvent(cs, delta))
        return delta

    @staticmethod
    def _merge_core(replies: list[tuple[int, Any]]) -> dict[int, int]:
        return {w: k for _, body in replies for w, k in body.get("core", [])}

    def insert_plan(self, state: BlockMasterState, u: int, v: int, value: Any = None) -> Plan:
        replies = yield self.link_requests(state, "kc_link", u, v, value=value)
        return (yield from self.maintain(state, u, v, self._merge_core(replies), insert=True))

    def delete_plan(self, state: BlockMasterState, u: int, v: int) -> Plan:
        replies = yield self.link_requests(state, "kc_unlink", u, v)
        return (yield from self.maintain(state, u, v, self._merge_core(replies), insert=False))

    def core_plan(self, state: BlockMasterState, vertices: Iterable[int]) -> Plan:
        by_block: dict[int, list[int]] = {}
        for w in vertices:
            by_block.setdefault(self.owner(state, w), []).append(w)
        replies = yield [m2w(b, "kc_core", {"vertices": sorted(ws)}) for b, ws in sorted(by_block.items())]
        return self._merge_core(replies)

    # -- worker ----------------------------------------------------------------

    def on_hello(self, block: Block, body: dict) -> Any:
        for u, st in block.vertex_states.items():
            st.degree = block.degree(u)
            st.coreness = st.degree
        block.ghosts.clear()
        return {"owned": block.owned_vertices()}, self._publish(block, block.owned_vertices())

    @staticmethod
    def _publish(block: Block, vertices: Iterable[int]) -> list[tuple[int, str, dict]]:
        per_block: dict[int, dict[int, int]] = {}
        for w in vertices:
            for _, b in block.remote_neighbors(w).items():
                per_block.setdefault(b, {})[w] = block.vertex_states[w].coreness
        return [(b, "kc_est", {"ghosts": _pairs(vals)}) for b, vals in sorted(per_block.items())]

    def on_kc_est(self, block: Block, body: dict) -> dict:
        for w, k in body["ghosts"]:
            block.ghosts[w] = k
        return {}

    on_kc_ghost = on_kc_est

    def on_kc_round(self, block: Block, body: dict) -> Any:
        states = block.vertex_states
        g = block.local_graph

        def value(x: int) -> int:
            st = states.get(x)
            return st.coreness if st is not None else block.ghosts.get(x, 0)

        changed: set[int] = set()
        work = deque(block.owned_vertices())
        queued = set(work)
        while work:
            w = work.popleft()
            queued.discard(w)
            cur = states[w].coreness
            h = h_index((value(x) for x in block.neighbors(w)), cur)
            if h < cur:
                states[w].coreness = h
                changed.add(w)
                for x in g.neighbors(w):
                    if x not in queued:
                        queued.add(x)
                        work.append(x)
        return {"changed": len(changed)}, self._publish(block, sorted(changed))

    def on_kc_link(self, block: Block, body: dict) -> dict:
        mine = self.apply_link(block, body)
        return {"core": [[w, block.vertex_states[w].coreness] for w in mine]}

    def on_kc_unlink(self, block: Block, body: dict) -> dict:
        mine = self.apply_unlink(block, body)
        return {"core": [[w, block.vertex_states[w].coreness] for w in mine]}

    def on_kc_core(self, block: Block, body: dict) -> dict:
        return {"core": [[w, block.vertex_states[w].coreness] for w in body["vertices"]]}

    @staticmethod
    def _search_state(block: Block, sid: int) -> tuple[set[int], set[int]]:
        """Per-search (visited owned vertices, remote vertices known to be explored)."""
        cur = block.scratch.get("kc_search")
        if cur is None or cur[0] != sid:
            cur = (sid, set(), set())
            block.scratch["kc_search"] = cur
        return cur[1], cur[2]

    def _explore(self, block: Block, sid: int, k: int, starts: Iterable[int]) -> Any:
        visited, known = self._search_state(block, sid)
        states = block.vertex_states
        queue: deque[int] = deque()
        for w in starts:
            if block.owns(w) and w not in visited and states[w].coreness == k:
                visited.add(w)
                queue.append(w)
        cands = []
        probes: dict[int, set[int]] = {}
        senders: dict[int, set[int]] = {}
        while queue:
            w = queue.popleft()
            n_higher = 0
            same = []
            for x in block.local_graph.neighbors(w):
                kx = states[x].coreness
                if kx > k:
                    n_higher += 1
                elif kx == k:
                    same.append(x)
                    if x not in visited:
                        visited.add(x)
                        queue.append(x)
            for x, b in block.remote_neighbors(w).items():
                kx = block.ghosts.get(x, 0)
                if kx > k:
                    n_higher += 1
                elif kx == k:
                    same.append(x)
                    senders.setdefault(b, set()).add(w)
                    if x not in known:
                        known.add(x)
                        probes.setdefault(b, set()).add(x)
            cands.append([w, n_higher, sorted(same)])
        forwards = [
            (b, "kc_probe", {"sid": sid, "k": k, "vertices": sorted(xs), "seen": sorted(senders[b])})
            for b, xs in sorted(probes.items())
        ]
        return {"cands": cands}, forwards

    def on_kc_search(self, block: Block, body: dict) -> Any:
        for w, k in body.get("ghosts", []):
            block.ghosts[w] = k
        return self._explore(block, body["sid"], body["k"], body["roots"])

    def on_kc_probe(self, block: Block, body: dict) -> Any:
        _, known = self._search_state(block, body["sid"])
        known.update(body.get("seen", []))
        return self._explore(block, body["sid"], body["k"], body["vertices"])

    def on_kc_set(self, block: Block, body: dict) -> dict:
        refresh = []
        for w, k in body["set"]:
            block.vertex_states[w].coreness = k
            for b in sorted(set(block.remote_neighbors(w).values())):
                refresh.append([b, w, k])
        return {"refresh": refresh}


# -- driver helpers over a running job -----------------------------------------


def _kcore_hooks(job: Job) -> KCoreHooks:
    if not isinstance(job.hooks, KCoreHooks):
        raise TypeError("job does not run the kcore hooks")
    return job.hooks


def k_reachable(job: Job, root: int, k: int | None = None) -> set[int]:
    """Vertices reachable from ``root`` through vertices of coreness ``k``.

    ``k`` defaults to the root's coreness; if it differs the set is empty.
    """
    hooks = _kcore_hooks(job)

    def plan(state: BlockMasterState) -> Plan:
        kk = k
        if kk is None:
            kk = (yield from hooks.core_plan(state, [root]))[root]
        cands = yield from hooks.search(state, [root], kk)
        return set(cands)

    if not job.started:
        job.start()
    return job.execute(plan(job.state))


def candidate_set(job: Job, u: int, v: int) -> CandidateSet:
    """Candidates of inserting ``(u, v)``, computed before the insertion."""
    hooks = _kcore_hooks(job)

    def plan(state: BlockMasterState) -> Plan:
        core = yield from hooks.core_plan(state, [u, v])
        k = min(core[u], core[v])
        roots = [w for w in (u, v) if core[w] == k]
        cands = yield from hooks.search(state, roots, k)
        return CandidateSet(frozenset(cands), tuple(roots), k, (min(u, v), max(u, v)))

    if not job.started:
        job.start()
    return job.execute(plan(job.state))


def maintain_insert(job: Job, u: int, v: int) -> dict[int, int]:
    """Insert ``(u, v)`` and return the coreness delta (changed vertices only)."""
    _kcore_hooks(job)
    job.apply(GraphUpdate.add_edge(u, v))
    return job.state.plan_result


def maintain_delete(job: Job, u: int, v: int) -> dict[int, int]:
    """Delete ``(u, v)`` and return the coreness delta (changed vertices only)."""
    _kcore_hooks(job)
    job.apply(GraphUpdate.remove_edge(u, v))
    return job.state.plan_result
