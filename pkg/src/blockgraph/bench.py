"""Update scenarios and the benchmark loop behind the command line.

A run partitions the graph (PT), loads the blocks, then streams the
updates through one job (UT). Insertions and deletions are timed one by
one, giving the average insertion and deletion times (AIT, ADT). Before a
row is reported the final snapshot is checked against a from-scratch
computation on the final graph.
"""
from __future__ import annotations

import csv
import logging
import os
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from statistics import mean
from typing import Iterable, Literal, Sequence

import numpy as np

from .algorithms import HOOKS
from .algorithms.kcore import batch_coreness
from .algorithms.mce import batch_mce
from .graph import Graph, GraphUpdate, apply_update, build_blocks
from .io import read_edge_list, read_updates, write_snapshot
from .partitioning import DFEPParams, PartitionAssignment, edge_blocks, partition, repartition, vertex_owners
from .runtime import Job, JobResult

log = logging.getLogger(__name__)

ScenarioKind = Literal["inter", "intra"]


class InsufficientCandidates(ValueError):
    pass


class OracleMismatch(AssertionError):
    pass


def _candidate_count(g: Graph, owners: dict[int, int], kind: ScenarioKind) -> int:
    sizes: dict[int, int] = {}
    for b in owners.values():
        sizes[b] = sizes.get(b, 0) + 1
    n = len(owners)
    same_pairs = sum(s * (s - 1) // 2 for s in sizes.values())
    same_edges = sum(1 for u, v in g.edges() if owners[u] == owners[v])
    if kind == "intra":
        return same_pairs - same_edges
    return n * (n - 1) // 2 - same_pairs - (g.num_edges - same_edges)


def gen_scenario(
    g: Graph,
    pa: PartitionAssignment | dict[int, int],
    kind: ScenarioKind,
    n: int,
    seed: int = 0,
) -> list[GraphUpdate]:
    """``n`` distinct new edges, each inside one block (intra) or across two (inter).

    ``pa`` is either an edge assignment, whose vertices go to their home
    block, or an explicit vertex -> block map.
    """
    if kind not in ("inter", "intra"):
        raise ValueError(f"unknown scenario kind {kind!r}")
    owners = dict(pa) if isinstance(pa, dict) else vertex_owners(g, pa)
    available = _candidate_count(g, owners, kind)
    if available < n:
        raise InsufficientCandidates(f"{kind} scenario needs {n} new edges, only {available} exist")
    rng = np.random.default_rng(seed)
    verts = np.array(g.vertices, dtype=np.int64)
    members: dict[int, list[int]] = {}
    for u in g.vertices:
        members.setdefault(owners[u], []).append(u)
    chosen: set[tuple[int, int]] = set()
    out: list[GraphUpdate] = []

    def ok(u: int, v: int) -> bool:
        if u == v or g.has_edge(u, v):
            return False
        if (owners[u] == owners[v]) != (kind == "intra"):
            return False
        return (min(u, v), max(u, v)) not in chosen

    def take(u: int, v: int) -> None:
        chosen.add((min(u, v), max(u, v)))
        out.append(GraphUpdate.add_edge(u, v))

    misses = 0
    while len(out) < n and misses < 50 * n + 1000:
        u = int(verts[rng.integers(len(verts))])
        if kind == "intra":
            pool = members[owners[u]]
            v = pool[int(rng.integers(len(pool)))]
        else:
            v = int(verts[rng.integers(len(verts))])
        if ok(u, v):
            take(u, v)
            misses = 0
        else:
            misses += 1
    if len(out) < n:
        # dense corner: enumerate what is left and sample from it
        rest = [(u, v) for i, u in enumerate(g.vertices) for v in g.vertices[i + 1:] if ok(u, v)]
        for i in rng.permutation(len(rest))[: n - len(out)]:
            take(*rest[int(i)])
    return out


def holdout_split(g: Graph, fraction: float, seed: int) -> tuple[Graph, list[GraphUpdate]]:
    """Keep ``1 - fraction`` of the edges; the rest become insertions."""
    edges = list(g.edges())
    order = np.random.default_rng(seed).permutation(len(edges))
    k = int(round(len(edges) * fraction))
    held = sorted(edges[int(i)] for i in order[:k])
    held_set = set(held)
    base = Graph.from_edges((e for e in edges if e not in held_set), vertices=g.vertices)
    return base, [GraphUpdate.add_edge(u, v) for u, v in held]


@dataclass
class MetricsRecord:
    """One benchmark run. Times in milliseconds; AIT/ADT are None without such updates."""

    dataset: str
    algorithm: str
    partitioner: str
    K: int
    scenario: str
    strategy: str
    seed: int
    repeat: int
    updates: int
    pt_ms: float
    ut_ms: float
    ait_ms: float | None
    adt_ms: float | None
    m2w: int
    w2m: int
    w2w: int
    cross_worker: int
    mutations: int

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for k, v in asdict(self).items():
            if v is None:
                out[k] = ""
            elif isinstance(v, float):
                out[k] = f"{v:.4f}"
            else:
                out[k] = v
        return out


@dataclass
class BenchConfig:
    input: str
    algorithm: str = "degree"
    partitioner: str = "hash"
    workers: int = 4
    seed: int = 0
    strategy: str = "incremental"
    scenario: str = "inter"
    scenario_size: int = 1000
    updates: str | None = None
    repeats: int = 5
    scheduler: str = "threaded"
    snapshot: str | None = None
    tau: float = 1.5
    alpha: float = 1.0
    beta: float = 1.0
    holdout: float = 0.1
    params: DFEPParams = field(default_factory=DFEPParams)


def make_hooks(cfg: BenchConfig, seed: int):
    cls = HOOKS[cfg.algorithm]
    if cfg.algorithm == "partition":
        return cls(cfg.partitioner, cfg.strategy, seed, cfg.tau, cfg.alpha, cfg.beta, cfg.params)
    return cls()


def check_oracle(algorithm: str, result: JobResult, g: Graph, pa: PartitionAssignment | None = None) -> None:
    """Compare a snapshot with a from-scratch computation on ``g``."""
    edges = [(e.u, e.v) for e in result.edges]
    if edges != list(g.edges()):
        raise OracleMismatch(f"{algorithm}: edge list differs from the final graph")
    if algorithm == "partition":
        if pa is None:
            raise ValueError("partition oracle needs the master's assignment")
        pa.check(g)
        got = sorted(u for u, _ in result.vertices)
        if got != g.vertices:
            raise OracleMismatch("partition: vertex set differs from the final graph")
        return
    if [u for u, _ in result.vertices] != g.vertices:
        raise OracleMismatch(f"{algorithm}: vertex set differs from the final graph")
    if algorithm == "degree":
        expected = {u: g.degree(u) for u in g.vertices}
        got = result.state_of("degree")
    elif algorithm == "kcore":
        expected = batch_coreness(g)
        got = result.state_of("coreness")
    elif algorithm == "mce":
        expected, _ = batch_mce(g)
        got = [tuple(map(int, line.split())) for line in result.extras["cliques.txt"]]
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if got != expected:
        raise OracleMismatch(f"{algorithm}: maintained values differ from recomputation")


def build_updates(cfg: BenchConfig, g: Graph, pa: PartitionAssignment, seed: int) -> list[GraphUpdate]:
    if cfg.scenario == "file":
        if not cfg.updates:
            raise ValueError("--scenario file needs --updates")
        return list(read_updates(cfg.updates))
    inserts = gen_scenario(g, pa, cfg.scenario, cfg.scenario_size, seed)  # type: ignore[arg-type]
    deletes = [GraphUpdate.remove_edge(u.edge.u, u.edge.v) for u in inserts]
    return inserts + deletes


def run_once(cfg: BenchConfig, repeat: int = 0) -> tuple[MetricsRecord, JobResult]:
    seed = cfg.seed + repeat
    g = read_edge_list(cfg.input)
    updates: list[GraphUpdate] = []
    if cfg.scenario == "holdout":
        g, updates = holdout_split(g, cfg.holdout, seed)

    t0 = time.perf_counter()
    pa = partition(g, cfg.workers, cfg.partitioner, seed, cfg.params)  # type: ignore[arg-type]
    pt = time.perf_counter() - t0

    if cfg.scenario != "holdout":
        updates = build_updates(cfg, g, pa, seed)
    blocks = edge_blocks(g, pa) if cfg.algorithm == "partition" else build_blocks(g, vertex_owners(g, pa), cfg.workers)

    final = g.copy()
    for upd in updates:
        apply_update(final, upd)

    hooks = make_hooks(cfg, seed)
    with Job(blocks, hooks, scheduler=cfg.scheduler) as job:
        job.start()
        for upd in updates:
            job.apply(upd)
        job.finish()
        result = job.snapshot()
    stats = result.metrics
    master_pa = getattr(result.master_state, "pa", None)
    check_oracle(cfg.algorithm, result, final, master_pa)
    if master_pa is not None:
        mutations = master_pa.mutations
    else:
        # the blocks stay as loaded; the assignment is kept up to date alongside
        side = repartition(final, cfg.workers, cfg.strategy, cfg.partitioner, pa, seed, cfg.params)  # type: ignore[arg-type]
        mutations = side.mutations

    times = {"A": [], "D": []}
    for kind, sec in zip(stats.update_kinds, stats.update_seconds):
        if kind in times:
            times[kind].append(sec * 1000)
    per_mode = {m: sum(c[m] for c in stats.per_update) for m in ("M2W", "W2M", "W2W")}
    record = MetricsRecord(
        dataset=Path(cfg.input).stem,
        algorithm=cfg.algorithm,
        partitioner=cfg.partitioner,
        K=cfg.workers,
        scenario=cfg.scenario,
        strategy=cfg.strategy,
        seed=seed,
        repeat=repeat,
        updates=len(updates),
        pt_ms=pt * 1000,
        ut_ms=(sum(stats.update_seconds) + stats.finish_seconds) * 1000,
        ait_ms=mean(times["A"]) if times["A"] else None,
        adt_ms=mean(times["D"]) if times["D"] else None,
        m2w=per_mode["M2W"],
        w2m=per_mode["W2M"],
        w2w=per_mode["W2W"],
        cross_worker=stats.update_cross_worker(),
        mutations=mutations,
    )
    log.info("run %d: %s", repeat, record)
    return record, result


def run_bench(cfg: BenchConfig) -> list[MetricsRecord]:
    if cfg.repeats < 1:
        raise ValueError("--repeats must be >= 1")
    records = []
    for r in range(cfg.repeats):
        record, result = run_once(cfg, r)
        if cfg.snapshot and r == 0:
            write_snapshot(result, cfg.snapshot)
        records.append(record)
    return records


def write_csv(records: Iterable[MetricsRecord], path: str | os.PathLike | None, stream=None) -> None:
    """Append rows to ``path`` (header written for a new file), or to ``stream``."""
    cols = MetricsRecord.columns()
    if path is None:
        writer = csv.DictWriter(stream, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.row())
        return
    p = Path(path)
    new = not p.exists() or p.stat().st_size == 0
    with p.open("a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        if new:
            writer.writeheader()
        for rec in records:
            writer.writerow(rec.row())


def summarize(records: Sequence[MetricsRecord]) -> dict[str, float | None]:
    """Means over repeats of the timing columns."""
    out: dict[str, float | None] = {}
    for col in ("pt_ms", "ut_ms", "ait_ms", "adt_ms", "cross_worker", "mutations"):
        vals = [getattr(r, col) for r in records if getattr(r, col) is not None]
        out[col] = mean(vals) if vals else None
    return out
