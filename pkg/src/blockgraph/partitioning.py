"""Edge partitioning: hash, random and funding-based diffusion (DFEP).

Also the dynamic side: placing new edges into existing blocks by score
(unit-based update), the repartitioning trigger, and the incremental
versus naive strategies.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .graph import Block, DuplicateEdge, Graph, GraphUpdate, MissingEdge, UpdateKind

MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """splitmix64 finaliser: a fixed, well-spread 64-bit mix."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def edge_hash(u: int, v: int) -> int:
    """H(a, b) = mix64(mix64(a) xor b) with a = min(u, v), b = max(u, v)."""
    a, b = (u, v) if u < v else (v, u)
    return mix64(mix64(a) ^ (b & MASK64))


class PartitionAssignment:
    """Edge -> block map with per-block sizes and vertex incidence counts.

    ``V_i`` is derived from the incidence counts, so it always equals the
    set of endpoints of ``E_i``. ``mutations`` counts every assign/unassign.
    """

    def __init__(self, num_blocks: int) -> None:
        if num_blocks < 1:
            raise ValueError("K must be >= 1")
        self.num_blocks = num_blocks
        self.block_of: dict[tuple[int, int], int] = {}
        self.sizes = [0] * num_blocks
        self._incidence: list[dict[int, int]] = [{} for _ in range(num_blocks)]
        self.mutations = 0

    @property
    def num_edges(self) -> int:
        return len(self.block_of)

    def assign(self, u: int, v: int, b: int) -> None:
        key = (min(u, v), max(u, v))
        if key in self.block_of:
            raise DuplicateEdge(f"edge {key} already assigned to block {self.block_of[key]}")
        if not 0 <= b < self.num_blocks:
            raise ValueError(f"block {b} outside [0, {self.num_blocks})")
        self.block_of[key] = b
        self.sizes[b] += 1
        inc = self._incidence[b]
        for w in key:
            inc[w] = inc.get(w, 0) + 1
        self.mutations += 1

    def unassign(self, u: int, v: int) -> int:
        key = (min(u, v), max(u, v))
        try:
            b = self.block_of.pop(key)
        except KeyError:
            raise MissingEdge(f"edge {key} is not assigned") from None
        self.sizes[b] -= 1
        inc = self._incidence[b]
        for w in key:
            inc[w] -= 1
            if not inc[w]:
                del inc[w]
        self.mutations += 1
        return b

    def block(self, u: int, v: int) -> int:
        return self.block_of[(min(u, v), max(u, v))]

    def incident(self, b: int, u: int) -> int:
        """Number of edges of block ``b`` touching ``u``."""
        return self._incidence[b].get(u, 0)

    def vertex_set(self, b: int) -> set[int]:
        return set(self._incidence[b])

    def blocks_of(self, u: int) -> list[int]:
        return [b for b in range(self.num_blocks) if u in self._incidence[b]]

    def home(self, u: int) -> int | None:
        """Block holding most edges of ``u`` (lowest id on ties); None if ``u`` has none."""
        best, best_count = None, 0
        for b in range(self.num_blocks):
            c = self._incidence[b].get(u, 0)
            if c > best_count:
                best, best_count = b, c
        return best

    def check(self, g: Graph) -> None:
        """Assert cover, disjointness and the ``V_i`` definition against ``g``."""
        edges = set(g.edges())
        assigned = set(self.block_of)
        if edges != assigned:
            missing = sorted(edges - assigned)[:5]
            extra = sorted(assigned - edges)[:5]
            raise AssertionError(f"assignment does not cover the graph: missing {missing}, extra {extra}")
        counts = [0] * self.num_blocks
        endpoints: list[set[int]] = [set() for _ in range(self.num_blocks)]
        for (u, v), b in self.block_of.items():
            counts[b] += 1
            endpoints[b].update((u, v))
        if counts != self.sizes:
            raise AssertionError(f"block sizes {self.sizes} disagree with the edge map {counts}")
        for b in range(self.num_blocks):
            if endpoints[b] != self.vertex_set(b):
                raise AssertionError(f"V_{b} is not the endpoint set of E_{b}")

    def copy(self) -> PartitionAssignment:
        pa = PartitionAssignment(self.num_blocks)
        pa.block_of = dict(self.block_of)
        pa.sizes = list(self.sizes)
        pa._incidence = [dict(inc) for inc in self._incidence]
        return pa

    def dump_lines(self) -> list[str]:
        """``u v block`` lines in canonical edge order."""
        return [f"{u} {v} {b}" for (u, v), b in sorted(self.block_of.items())]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartitionAssignment):
            return NotImplemented
        return self.num_blocks == other.num_blocks and self.block_of == other.block_of


def _check_k(num_blocks: int) -> None:
    if num_blocks < 1:
        raise ValueError(f"K must be >= 1, got {num_blocks}")


def hash_partition(g: Graph, num_blocks: int) -> PartitionAssignment:
    _check_k(num_blocks)
    pa = PartitionAssignment(num_blocks)
    for u, v in g.edges():
        pa.assign(u, v, edge_hash(u, v) % num_blocks)
    return pa


def random_partition(g: Graph, num_blocks: int, seed: int = 0) -> PartitionAssignment:
    _check_k(num_blocks)
    pa = PartitionAssignment(num_blocks)
    edges = list(g.edges())
    draws = np.random.default_rng(seed).integers(0, num_blocks, size=len(edges))
    for (u, v), b in zip(edges, draws):
        pa.assign(u, v, int(b))
    return pa


@dataclass
class DFEPParams:
    """Knobs of the funding rounds.

    ``initial_funding`` defaults to ``|E| / K`` per seed. The funds a
    partition may hold after a refund are capped at
    ``max(1, ceil(slack * |E| / K) - size)``.
    """

    initial_funding: float | None = None
    slack: float = 1.0
    max_rounds: int = 100_000


@dataclass
class FundingState:
    balances: dict[tuple[int, int], float] = field(default_factory=dict)
    pools: list[float] = field(default_factory=list)
    sizes: list[int] = field(default_factory=list)
    rounds: int = 0
    seeds: list[int] = field(default_factory=list)
    unassigned_history: list[int] = field(default_factory=list)
    teleports: int = 0


def dfep_partition(
    g: Graph, num_blocks: int, seed: int = 0, params: DFEPParams | None = None
) -> tuple[PartitionAssignment, FundingState]:
    """Grow ``K`` partitions from random seed vertices by buying edges.

    Each round the partitions spend their funding on unassigned edges next
    to the vertices holding it, one edge at a time with the smallest
    partition going first; funding left on a vertex whose edges are all
    sold follows the edges it bought. Between rounds every partition gets
    a refund inversely proportional to its size, spread over its frontier.
    """
    _check_k(num_blocks)
    params = params or DFEPParams()
    if g.num_vertices < num_blocks:
        raise ValueError(f"graph has {g.num_vertices} vertices, fewer than K={num_blocks}")
    K = num_blocks
    pa = PartitionAssignment(K)
    fs = FundingState(pools=[0.0] * K, sizes=pa.sizes)
    m = g.num_edges
    if m == 0:
        return pa, fs

    adj = {u: g.neighbors(u) for u in g.vertices}
    cursor = dict.fromkeys(adj, 0)
    block_of = pa.block_of

    def next_free(v: int) -> int | None:
        nbrs, c = adj[v], cursor[v]
        while c < len(nbrs):
            w = nbrs[c]
            if ((v, w) if v < w else (w, v)) not in block_of:
                break
            c += 1
        cursor[v] = c
        return nbrs[c] if c < len(nbrs) else None

    rng = np.random.default_rng(seed)
    active = [u for u in g.vertices if adj[u]]
    if len(active) >= K:
        picks = rng.choice(len(active), size=K, replace=False)
        fs.seeds = [active[int(i)] for i in picks]
    else:
        rest = [u for u in g.vertices if not adj[u]]
        fs.seeds = active + [rest[int(i)] for i in rng.choice(len(rest), size=K - len(active), replace=False)]

    target = m / K
    initial = target if params.initial_funding is None else params.initial_funding
    cap_total = math.ceil(params.slack * target)
    balance: list[dict[int, float]] = [{s: float(initial)} for s in fs.seeds]
    members: list[set[int]] = [{s} for s in fs.seeds]
    unassigned = m

    while unassigned:
        if fs.rounds >= params.max_rounds:
            raise RuntimeError(f"DFEP did not converge in {params.max_rounds} rounds")
        fs.rounds += 1
        before = unassigned

        # buying: lock-step, smallest partition first
        queues = [deque(v for v, amount in sorted(bal.items()) if amount >= 1) for bal in balance]
        bought_from: list[dict[int, list[int]]] = [{} for _ in range(K)]
        heap = [(pa.sizes[i], i) for i in range(K) if queues[i]]
        heapq.heapify(heap)
        while heap:
            _, i = heapq.heappop(heap)
            q, bal = queues[i], balance[i]
            w = None
            while q:
                v = q[0]
                if bal.get(v, 0.0) < 1:
                    q.popleft()
                    continue
                w = next_free(v)
                if w is not None:
                    break
                q.popleft()
                fs.pools[i] += bal.pop(v)
            if w is None:
                continue
            pa.assign(v, w, i)
            unassigned -= 1
            members[i].add(w)
            bal[v] -= 1
            bought_from[i].setdefault(v, []).append(w)
            if next_free(v) is None:
                q.popleft()
                leftover = bal.pop(v)
                heirs = bought_from[i][v]
                share = leftover / len(heirs)
                for h in heirs:
                    bal[h] = bal.get(h, 0.0) + share
                    if bal[h] >= 1:
                        q.append(h)
            if not unassigned:
                break
            heapq.heappush(heap, (pa.sizes[i], i))

        fs.unassigned_history.append(unassigned)
        if not unassigned:
            break

        # refunds, inversely proportional to partition size
        mean = (m - unassigned) / K
        any_frontier = False
        for i in range(K):
            pool = fs.pools[i] + sum(balance[i].values())
            balance[i] = {}
            size = pa.sizes[i]
            refund = target * (mean / size) if size else target
            funds = min(pool + refund, max(1.0, cap_total - size))
            frontier = sorted(v for v in members[i] if next_free(v) is not None)
            if not frontier:
                fs.pools[i] = funds
                continue
            any_frontier = True
            funds = max(funds, 1.0)
            units = int(funds)
            each, extra = divmod(units, len(frontier))
            for j, v in enumerate(frontier):
                amount = each + (1 if j < extra else 0)
                if amount:
                    balance[i][v] = float(amount)
            fs.pools[i] = funds - units

        if not any_frontier:
            # no partition touches the remaining edges: the smallest one jumps
            i = min(range(K), key=lambda j: (pa.sizes[j], j))
            free = sorted(e for e in g.edges() if e not in block_of)
            u, v = free[int(rng.integers(len(free)))]
            pa.assign(u, v, i)
            unassigned -= 1
            members[i].update((u, v))
            fs.teleports += 1
            # the jumper spends its pooled funds from the new foothold
            frontier = [x for x in (u, v) if next_free(x) is not None]
            if frontier:
                units = max(1, int(fs.pools[i]))
                fs.pools[i] = max(0.0, fs.pools[i] - units)
                for j, x in enumerate(frontier):
                    amount = units // len(frontier) + (1 if j < units % len(frontier) else 0)
                    if amount:
                        balance[i][x] = float(amount)
            fs.unassigned_history[-1] = unassigned

        if unassigned >= before:
            raise AssertionError(f"DFEP round {fs.rounds} bought no edge")

    fs.balances = {(i, v): amount for i in range(K) for v, amount in balance[i].items()}
    return pa, fs


def ub_score(locality: int, size: int, total: int, num_blocks: int, alpha: float = 1.0, beta: float = 1.0) -> float:
    """Unit-based update score: locality reward minus relative overload."""
    avg = total / num_blocks
    if avg == 0:
        return alpha * locality
    return alpha * locality - beta * (size - avg) / avg


def choose_block(scores: dict[int, float], sizes: Sequence[int]) -> int:
    """Highest score; ties go to the smaller block, then the lower id."""
    return min(scores, key=lambda b: (-scores[b], sizes[b], b))


def assign_update(
    pa: PartitionAssignment,
    upd: GraphUpdate,
    fs: FundingState | None = None,
    alpha: float = 1.0,
    beta: float = 1.0,
) -> int:
    """Place a new edge with the unit-based update rule and record it.

    Candidates are the home blocks of the two endpoints; if neither
    endpoint is known every block competes.
    """
    if upd.kind is not UpdateKind.ADD_EDGE:
        raise ValueError("assign_update only places insertions")
    u, v = upd.edge.u, upd.edge.v
    candidates = sorted({h for h in (pa.home(u), pa.home(v)) if h is not None})
    if not candidates:
        candidates = list(range(pa.num_blocks))
    total = pa.num_edges
    scores = {
        b: ub_score(pa.incident(b, u) + pa.incident(b, v), pa.sizes[b], total, pa.num_blocks, alpha, beta)
        for b in candidates
    }
    b = choose_block(scores, pa.sizes)
    pa.assign(u, v, b)
    if fs is not None and fs.sizes is not pa.sizes:
        fs.sizes = list(pa.sizes)
    return b


@dataclass(frozen=True)
class RepartitionDecision:
    scores: tuple[float, ...]
    verdict: Literal["repartition", "keep"]
    tau: float


def threshold_score(size: int, total: int, num_blocks: int) -> float:
    """A worker's load relative to the mean block size."""
    return size * num_blocks / total if total else 0.0


def check_repartition(sizes: Sequence[int], tau: float = 1.5) -> RepartitionDecision:
    """Repartition iff the largest block exceeds ``tau`` times the mean."""
    total = sum(sizes)
    scores = tuple(threshold_score(s, total, len(sizes)) for s in sizes)
    verdict = "repartition" if scores and max(scores) > tau else "keep"
    return RepartitionDecision(scores, verdict, tau)


Method = Literal["hash", "random", "dfep"]
Strategy = Literal["incremental", "naive"]


def partition(
    g: Graph, num_blocks: int, method: Method, seed: int = 0, params: DFEPParams | None = None
) -> PartitionAssignment:
    if method == "hash":
        return hash_partition(g, num_blocks)
    if method == "random":
        return random_partition(g, num_blocks, seed)
    if method == "dfep":
        return dfep_partition(g, num_blocks, seed, params)[0]
    raise ValueError(f"unknown partitioning method {method!r}")


def place_edge(
    pa: PartitionAssignment,
    u: int,
    v: int,
    method: Method,
    rng: np.random.Generator | None = None,
    alpha: float = 1.0,
    beta: float = 1.0,
) -> int:
    """Assign one new edge with the per-edge rule of ``method``."""
    if method == "hash":
        b = edge_hash(u, v) % pa.num_blocks
        pa.assign(u, v, b)
        return b
    if method == "random":
        if rng is None:
            raise ValueError("random placement needs a generator")
        b = int(rng.integers(pa.num_blocks))
        pa.assign(u, v, b)
        return b
    if method == "dfep":
        return assign_update(pa, GraphUpdate.add_edge(u, v), alpha=alpha, beta=beta)
    raise ValueError(f"unknown partitioning method {method!r}")


def repartition(
    g: Graph,
    num_blocks: int,
    strategy: Strategy,
    method: Method,
    pa: PartitionAssignment | None = None,
    seed: int = 0,
    params: DFEPParams | None = None,
) -> PartitionAssignment:
    """Bring an assignment in line with ``g``.

    ``naive`` throws the assignment away and partitions ``g`` from scratch;
    ``incremental`` only drops vanished edges and places new ones with the
    method's per-edge rule. The returned assignment's ``mutations`` counts
    the edge assignments this call performed.
    """
    if strategy == "naive":
        return partition(g, num_blocks, method, seed, params)
    if strategy != "incremental":
        raise ValueError(f"unknown strategy {strategy!r}")
    if pa is None:
        raise ValueError("incremental repartitioning needs the current assignment")
    out = pa.copy()
    edges = set(g.edges())
    for key in sorted(set(out.block_of) - edges):
        out.unassign(*key)
    rng = np.random.default_rng(seed)
    for u, v in sorted(edges - set(out.block_of)):
        place_edge(out, u, v, method, rng)
    return out


def vertex_owners(g: Graph, pa: PartitionAssignment) -> dict[int, int]:
    """Vertex -> owning block: the home block, or a hash for isolated vertices."""
    owners = {}
    for u in g.vertices:
        h = pa.home(u)
        owners[u] = h if h is not None else mix64(u) % pa.num_blocks
    return owners


def edge_blocks(g: Graph, pa: PartitionAssignment) -> list[Block]:
    """Blocks holding the edge partitions themselves (vertices replicated)."""
    blocks = [Block(i) for i in range(pa.num_blocks)]
    for (u, v), b in sorted(pa.block_of.items()):
        blocks[b].local_graph.add_edge(u, v, g.edge_value(u, v) if g.has_edge(u, v) else None)
    for u in g.vertices:
        if pa.home(u) is None:
            blocks[mix64(u) % pa.num_blocks].local_graph.add_vertex(u)
    return blocks


def assignment_from_blocks(blocks: Iterable[Block]) -> PartitionAssignment:
    blocks = list(blocks)
    pa = PartitionAssignment(len(blocks))
    for b in blocks:
        for u, v in b.local_graph.edges():
            pa.assign(u, v, b.block_id)
    return pa
