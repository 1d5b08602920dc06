"""Master/worker execution engine.

One master and ``K`` workers, each worker owning one :class:`Block`.
Endpoints only interact through FIFO channels, and every message is
checked against the computing modes:

* ``M2W`` master -> worker, ``W2M`` worker -> master,
* ``W2W`` between two distinct workers,
* ``LOCAL`` never leaves its endpoint, so it can not be sent at all.

Messages are framed to bytes when they enter a channel and decoded on
delivery, so no Python object is ever shared between endpoints.

Two schedulers run the same hooks: :class:`DeterministicScheduler` polls
endpoints round-robin on the calling thread, :class:`ThreadedScheduler`
gives every worker its own thread.
"""
from __future__ import annotations

import enum
from fractions import Fraction
import json
import logging
import queue
import struct
import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Generator, Iterable, Sequence

from .graph import Block, Edge, GraphError, GraphUpdate, VertexState

log = logging.getLogger(__name__)

MASTER = -1


class Mode(enum.Enum):
    M2W = "M2W"
    W2M = "W2M"
    W2W = "W2W"
    LOCAL = "Local"


_MODE_CODES = {m: i for i, m in enumerate(Mode)}
_MODES_BY_CODE = {i: m for m, i in _MODE_CODES.items()}


class ModeViolation(Exception):
    pass


class UnknownEndpoint(Exception):
    pass


class JobStalled(RuntimeError):
    """The master is still waiting but no message is in flight."""


class HookFailure(Exception):
    """A hook raised; the job is aborted.

    ``endpoint`` is the worker id (or ``MASTER``), ``cause`` the original
    exception and ``update`` the update being processed, if any.
    """

    def __init__(self, endpoint: int, cause: BaseException, update: GraphUpdate | None = None) -> None:
        super().__init__(endpoint, cause)
        self.endpoint = endpoint
        self.cause = cause
        self.update = update

    def __str__(self) -> str:
        who = "master" if self.endpoint == MASTER else f"worker {self.endpoint}"
        where = f" while applying '{self.update}'" if self.update is not None else ""
        if self.update is not None and self.update.line is not None:
            where += f" (line {self.update.line})"
        return f"{who} failed{where}: {type(self.cause).__name__}: {self.cause}"


def encode(obj: Any) -> bytes:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True).encode()


def decode(payload: bytes) -> Any:
    return json.loads(payload) if payload else None


_HEADER = struct.Struct("<qBqqHI")


@dataclass(frozen=True)
class Message:
    mode: Mode
    src: int
    dst: int
    kind: str
    payload: bytes = b""
    msg_id: int = 0

    def body(self) -> Any:
        return decode(self.payload)

    def to_bytes(self) -> bytes:
        kind = self.kind.encode()
        head = _HEADER.pack(self.msg_id, _MODE_CODES[self.mode], self.src, self.dst, len(kind), len(self.payload))
        return head + kind + self.payload

    @classmethod
    def from_bytes(cls, raw: bytes) -> Message:
        msg_id, mode, src, dst, klen, plen = _HEADER.unpack_from(raw)
        off = _HEADER.size
        kind = raw[off:off + klen].decode()
        payload = raw[off + klen:off + klen + plen]
        if len(payload) != plen:
            raise ValueError("truncated message frame")
        return cls(_MODES_BY_CODE[mode], src, dst, kind, payload, msg_id)


def m2w(dst: int, kind: str, body: Any = None) -> Message:
    return Message(Mode.M2W, MASTER, dst, kind, encode(body))


def w2m(src: int, kind: str, body: Any = None) -> Message:
    return Message(Mode.W2M, src, MASTER, kind, encode(body))


def w2w(src: int, dst: int, kind: str, body: Any = None) -> Message:
    return Message(Mode.W2W, src, dst, kind, encode(body))


def check_mode(msg: Message, num_workers: int) -> None:
    """Raise unless ``msg`` is a legal message between known endpoints."""
    for end in (msg.src, msg.dst):
        if end != MASTER and not 0 <= end < num_workers:
            raise UnknownEndpoint(f"endpoint {end} unknown ({num_workers} workers)")
    mode = msg.mode
    if mode is Mode.LOCAL:
        raise ModeViolation("Local mode permits no message emission")
    if mode is Mode.M2W and not (msg.src == MASTER and msg.dst != MASTER):
        raise ModeViolation(f"M2W message from {msg.src} to {msg.dst}")
    if mode is Mode.W2M and not (msg.src != MASTER and msg.dst == MASTER):
        raise ModeViolation(f"W2M message from {msg.src} to {msg.dst}")
    if mode is Mode.W2W and (MASTER in (msg.src, msg.dst) or msg.src == msg.dst):
        raise ModeViolation(f"W2W message from {msg.src} to {msg.dst}")


@dataclass
class RunStats:
    """Message and timing counters of one job."""

    by_mode: dict[str, int] = field(default_factory=lambda: {m.value: 0 for m in Mode})
    per_update: list[dict[str, int]] = field(default_factory=list)
    update_kinds: list[str] = field(default_factory=list)
    update_seconds: list[float] = field(default_factory=list)
    start_seconds: float = 0.0
    finish_seconds: float = 0.0
    delivered: int = 0
    violations: int = 0
    trace: list[tuple[int, int, int, str, int, int, str]] | None = None

    @property
    def total(self) -> int:
        return sum(self.by_mode.values())

    @property
    def cross_worker(self) -> int:
        """Messages that leave their execution context (every non-local one)."""
        return self.by_mode["M2W"] + self.by_mode["W2M"] + self.by_mode["W2W"]

    def update_cross_worker(self) -> int:
        return sum(c["M2W"] + c["W2M"] + c["W2W"] for c in self.per_update)


class Router:
    """Validates, stamps and frames messages; the channel layer of a job."""

    def __init__(self, num_workers: int, trace: bool = False) -> None:
        self.num_workers = num_workers
        self.stats = RunStats(trace=[] if trace else None)
        self.phase = -1
        self._next_id = 1
        self._seq = 0
        self._lock = threading.Lock()
        self.inflight = 0
        self.idle = threading.Condition(self._lock)

    def send(self, msg: Message) -> tuple[int, bytes]:
        """Check and stamp ``msg``; returns ``(msg_id, frame)``."""
        check_mode(msg, self.num_workers)
        with self._lock:
            msg_id = self._next_id
            self._next_id += 1
            self.inflight += 1
            self.stats.by_mode[msg.mode.value] += 1
            if self.stats.per_update and self.phase >= 0:
                self.stats.per_update[-1][msg.mode.value] += 1
            if self.stats.trace is not None:
                self._seq += 1
                self.stats.trace.append((self._seq, self.phase, msg_id, msg.mode.value, msg.src, msg.dst, msg.kind))
        return msg_id, replace(msg, msg_id=msg_id).to_bytes()

    def deliver(self, frame: bytes, at: int) -> Message:
        msg = Message.from_bytes(frame)
        try:
            check_mode(msg, self.num_workers)
            if msg.dst != at:
                raise UnknownEndpoint(f"message for {msg.dst} delivered to {at}")
        except (ModeViolation, UnknownEndpoint):
            with self._lock:
                self.stats.violations += 1
            raise AssertionError(f"channel layer delivered an illegal message: {msg}") from None
        with self._lock:
            self.stats.delivered += 1
        return msg

    def done_with(self, n: int = 1) -> None:
        with self._lock:
            self.inflight -= n
            if self.inflight == 0:
                self.idle.notify_all()

    def begin_update(self, kind: str) -> None:
        with self._lock:
            self.phase = len(self.stats.per_update)
            self.stats.per_update.append({m.value: 0 for m in Mode})
            self.stats.update_kinds.append(kind)


class AlgorithmHooks:
    """User algorithm contract.

    ``worker_compute`` handles one message on one block and may emit
    W2M/W2W messages. ``master_compute`` handles one W2M message and may
    emit M2W messages only; it also reports whether the current step is
    done. ``master_start`` / ``master_update`` / ``master_finish`` are the
    master's own operations triggered by the runtime.
    """

    name = "hooks"
    vertex_columns: tuple[str, ...] = ()

    def init_master(self, num_workers: int) -> Any:
        return None

    def master_start(self, state: Any) -> tuple[list[Message], bool]:
        return [], True

    def master_update(self, state: Any, upd: GraphUpdate) -> tuple[list[Message], bool]:
        raise NotImplementedError

    def master_finish(self, state: Any) -> tuple[list[Message], bool]:
        return [], True

    def master_compute(self, state: Any, msg: Message) -> tuple[list[Message], bool]:
        raise NotImplementedError

    def worker_compute(self, block: Block, msg: Message) -> list[Message]:
        raise NotImplementedError

    def collect(self, blocks: Sequence[Block], state: Any) -> tuple[list[tuple[int, VertexState]], list[Edge], dict[str, list[str]]]:
        """Final vertex states, edges and extra output files."""
        vertices = []
        edges: dict[tuple[int, int], Edge] = {}
        for b in blocks:
            vertices.extend(b.vertex_states.items())
            for u, v in b.edge_keys():
                edges[(u, v)] = Edge(u, v, b.edge_value(u, v))
        vertices.sort(key=lambda item: item[0])
        return vertices, [edges[k] for k in sorted(edges)], {}


def step_worker(block: Block, inbox: Iterable[Message], hooks: AlgorithmHooks) -> tuple[Block, list[Message]]:
    """Run ``hooks.worker_compute`` over ``inbox`` in order."""
    outbox: list[Message] = []
    for msg in inbox:
        if msg.dst != block.block_id:
            raise UnknownEndpoint(f"message for {msg.dst} given to worker {block.block_id}")
        try:
            out = hooks.worker_compute(block, msg)
        except Exception as exc:
            raise HookFailure(block.block_id, exc) from exc
        for m in out:
            if m.mode not in (Mode.W2M, Mode.W2W) or m.src != block.block_id:
                raise ModeViolation(f"worker {block.block_id} emitted {m.mode.value} message from {m.src}")
        outbox.extend(out)
    return block, outbox


def step_master(state: Any, inbox: Iterable[Message], hooks: AlgorithmHooks) -> tuple[Any, list[Message], bool]:
    """Run ``hooks.master_compute`` over ``inbox``; ``done`` is that of the last call."""
    outbox: list[Message] = []
    done = False
    for msg in inbox:
        try:
            out, done = hooks.master_compute(state, msg)
        except Exception as exc:
            raise HookFailure(MASTER, exc) from exc
        _check_master_outbox(out)
        outbox.extend(out)
    return state, outbox, done


def _check_master_outbox(out: Iterable[Message]) -> None:
    for m in out:
        if m.mode is not Mode.M2W or m.src != MASTER:
            raise ModeViolation(f"master emitted {m.mode.value} message from {m.src}")


class DeterministicScheduler:
    """Single-threaded scheduler polling endpoints round-robin."""

    def __init__(self, blocks: list[Block], hooks: AlgorithmHooks, router: Router) -> None:
        self.blocks = blocks
        self.hooks = hooks
        self.router = router
        self.channels: dict[tuple[int, int], deque[bytes]] = defaultdict(deque)
        self.endpoints = [MASTER, *range(len(blocks))]

    def post(self, msgs: Iterable[Message]) -> None:
        for m in msgs:
            _, frame = self.router.send(m)
            self.channels[(m.src, m.dst)].append(frame)

    def pending(self) -> int:
        return sum(len(q) for q in self.channels.values())

    def run_phase(self, state: Any, outbox: list[Message], done: bool) -> bool:
        self.post(outbox)
        while self.pending():
            for end in self.endpoints:
                keys = sorted(k for k, q in self.channels.items() if k[1] == end and q)
                for key in keys:
                    q = self.channels[key]
                    while q:
                        msg = self.router.deliver(q.popleft(), end)
                        if end == MASTER:
                            _, out, done = step_master(state, [msg], self.hooks)
                        else:
                            _, out = step_worker(self.blocks[end], [msg], self.hooks)
                        self.post(out)
                        self.router.done_with()
        if not done:
            raise JobStalled("master not done but all channels are empty")
        return done

    def close(self) -> None:
        pass


@dataclass
class _Failure:
    endpoint: int
    exc: BaseException


class ThreadedScheduler:
    """One thread per worker; the master runs on the calling thread."""

    poll_interval = 0.002

    def __init__(self, blocks: list[Block], hooks: AlgorithmHooks, router: Router) -> None:
        self.blocks = blocks
        self.hooks = hooks
        self.router = router
        self.master_inbox: queue.Queue = queue.Queue()
        self.inboxes: list[queue.Queue] = [queue.Queue() for _ in blocks]
        self.threads = [
            threading.Thread(target=self._worker_loop, args=(i,), name=f"worker-{i}", daemon=True)
            for i in range(len(blocks))
        ]
        for t in self.threads:
            t.start()

    def post(self, msgs: Iterable[Message]) -> None:
        for m in msgs:
            _, frame = self.router.send(m)
            target = self.master_inbox if m.dst == MASTER else self.inboxes[m.dst]
            target.put(frame)

    def _worker_loop(self, i: int) -> None:
        inbox = self.inboxes[i]
        block = self.blocks[i]
        while True:
            frame = inbox.get()
            if frame is None:
                return
            try:
                msg = self.router.deliver(frame, i)
                _, out = step_worker(block, [msg], self.hooks)
                self.post(out)
            except BaseException as exc:
                self.master_inbox.put(_Failure(i, exc))
            finally:
                self.router.done_with()

    def run_phase(self, state: Any, outbox: list[Message], done: bool) -> bool:
        self.post(outbox)
        while True:
            if done and not outbox:
                with self.router.idle:
                    if self.router.inflight == 0:
                        return done
            try:
                item = self.master_inbox.get(timeout=self.poll_interval)
            except queue.Empty:
                with self.router.idle:
                    if self.router.inflight == 0:
                        if done:
                            return done
                        if self.master_inbox.empty():
                            raise JobStalled("master not done but all channels are empty")
                continue
            if isinstance(item, _Failure):
                exc = item.exc
                raise exc if isinstance(exc, (HookFailure, AssertionError)) else HookFailure(item.endpoint, exc)
            try:
                msg = self.router.deliver(item, MASTER)
                _, out, done = step_master(state, [msg], self.hooks)
                self.post(out)
            finally:
                self.router.done_with()
            with self.router.idle:
                if done and self.router.inflight == 0:
                    return done

    def close(self) -> None:
        for q in self.inboxes:
            q.put(None)
        for t in self.threads:
            t.join()


SCHEDULERS: dict[str, type] = {
    "deterministic": DeterministicScheduler,
    "threaded": ThreadedScheduler,
}


@dataclass
class JobResult:
    vertices: list[tuple[int, VertexState]]
    edges: list[Edge]
    metrics: RunStats
    algorithm: str = ""
    vertex_columns: tuple[str, ...] = ()
    extras: dict[str, list[str]] = field(default_factory=dict)
    master_state: Any = None

    def vertex_lines(self) -> list[str]:
        lines = []
        for u, state in self.vertices:
            cols = [str(getattr(state, c)) for c in self.vertex_columns]
            lines.append(" ".join([str(u), *cols]))
        return lines

    def edge_lines(self) -> list[str]:
        return [f"{e.u} {e.v}" for e in self.edges]

    def state_of(self, column: str) -> dict[int, Any]:
        return {u: getattr(s, column) for u, s in self.vertices}


class Job:
    """A running job: owns its blocks until closed.

    Use as a context manager; ``apply`` processes one update completely
    (every notification accounted, every channel drained) before returning.
    """

    def __init__(
        self,
        blocks: list[Block],
        hooks: AlgorithmHooks,
        scheduler: str = "deterministic",
        trace: bool = False,
    ) -> None:
        ids = [b.block_id for b in blocks]
        if ids != list(range(len(blocks))):
            raise ValueError(f"block ids must be 0..K-1 in order, got {ids}")
        self.blocks = blocks
        self.hooks = hooks
        self.router = Router(len(blocks), trace=trace)
        self.state = hooks.init_master(len(blocks))
        self.scheduler = SCHEDULERS[scheduler](blocks, hooks, self.router)
        self.started = False
        self.failed: BaseException | None = None
        self._closed = False

    @property
    def stats(self) -> RunStats:
        return self.router.stats

    def _phase(self, trigger: Callable[[Any], tuple[list[Message], bool]], upd: GraphUpdate | None = None) -> None:
        if self.failed is not None:
            raise RuntimeError("job aborted by an earlier failure") from self.failed
        try:
            try:
                outbox, done = trigger(self.state)
            except Exception as exc:
                raise HookFailure(MASTER, exc) from exc
            _check_master_outbox(outbox)
            self.scheduler.run_phase(self.state, outbox, done)
        except HookFailure as err:
            err.update = upd
            if isinstance(err.cause, GraphError) and upd is not None:
                err.cause.update = upd
            self.failed = err
            raise
        except BaseException as err:
            self.failed = err
            raise

    def start(self) -> None:
        t0 = time.perf_counter()
        self._phase(self.hooks.master_start)
        self.stats.start_seconds = time.perf_counter() - t0
        self.started = True

    def apply(self, upd: GraphUpdate) -> None:
        if not self.started:
            self.start()
        self.router.begin_update(upd.kind.value)
        t0 = time.perf_counter()
        self._phase(lambda st: self.hooks.master_update(st, upd), upd)
        self.stats.update_seconds.append(time.perf_counter() - t0)

    def finish(self) -> None:
        t0 = time.perf_counter()
        self.router.phase = -1
        self._phase(self.hooks.master_finish)
        self.stats.finish_seconds = time.perf_counter() - t0

    def execute(self, plan: Generator) -> Any:
        """Run an ad-hoc master plan (see :class:`PlannedHooks`) to completion."""
        if not self.started:
            self.start()
        hooks = self.hooks
        if not isinstance(hooks, PlannedHooks):
            raise TypeError("execute() needs plan-based hooks")
        self._phase(lambda st: hooks.begin(st, plan))
        return self.state.plan_result

    def snapshot(self) -> JobResult:
        vertices, edges, extras = self.hooks.collect(self.blocks, self.state)
        return JobResult(
            vertices=vertices,
            edges=edges,
            metrics=self.stats,
            algorithm=self.hooks.name,
            vertex_columns=self.hooks.vertex_columns,
            extras=extras,
            master_state=self.state,
        )

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self.scheduler.close()

    def __enter__(self) -> Job:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def run_job(
    blocks: list[Block],
    updates: Iterable[GraphUpdate],
    hooks: AlgorithmHooks,
    scheduler: str = "deterministic",
    trace: bool = False,
) -> JobResult:
    """Run the batch phase, every update in order, then the finish phase."""
    with Job(blocks, hooks, scheduler=scheduler, trace=trace) as job:
        job.start()
        for upd in updates:
            job.apply(upd)
        job.finish()
        return job.snapshot()


# -- plan-driven masters -------------------------------------------------------


def credit_of(body: Any) -> Fraction:
    """Credit carried by a message body; bodies without one carry a full unit."""
    if isinstance(body, dict) and "credit" in body:
        num, den = body["credit"]
        return Fraction(num, den)
    return Fraction(1)


def split_credit(credit: Fraction, parts: int) -> list[list[int]]:
    """Split ``credit`` into ``parts`` exact shares, JSON-ready."""
    share = credit / parts
    return [[share.numerator, share.denominator]] * parts

Plan = Generator[list[Message], list[tuple[int, Any]], Any]


@dataclass
class PlanState:
    """Bookkeeping of the master's current execution plan.

    A plan is a generator yielding one step at a time: the list of M2W
    requests of the step. It is resumed with the ``(worker, body)`` replies
    once every notification of the step arrived.

    Completion uses credit recovery: every request carries one unit of
    credit, a worker forwarding W2W messages splits the credit it holds
    between them and its own W2M reply, and each reply returns its share
    under ``"credit"``. The step is complete when all credit is back, in
    whatever order the replies arrive.
    """

    num_workers: int
    plan: Plan | None = None
    outstanding: Fraction = Fraction(0)
    replies: list[tuple[int, Any]] = field(default_factory=list)
    plan_result: Any = None


class PlannedHooks(AlgorithmHooks):
    """Master side written as generator plans instead of explicit state machines."""

    def init_master(self, num_workers: int) -> PlanState:
        return PlanState(num_workers)

    def start_plan(self, state: Any) -> Plan:
        return
        yield

    def update_plan(self, state: Any, upd: GraphUpdate) -> Plan:
        raise NotImplementedError

    def finish_plan(self, state: Any) -> Plan:
        return
        yield

    def master_start(self, state: PlanState) -> tuple[list[Message], bool]:
        return self.begin(state, self.start_plan(state))

    def master_update(self, state: PlanState, upd: GraphUpdate) -> tuple[list[Message], bool]:
        return self.begin(state, self.update_plan(state, upd))

    def master_finish(self, state: PlanState) -> tuple[list[Message], bool]:
        return self.begin(state, self.finish_plan(state))

    def begin(self, state: PlanState, plan: Plan) -> tuple[list[Message], bool]:
        if state.plan is not None:
            raise RuntimeError("a plan is already running")
        state.plan = plan
        state.plan_result = None
        return self._advance(state, None)

    def _advance(self, state: PlanState, value: Any) -> tuple[list[Message], bool]:
        plan = state.plan
        assert plan is not None
        try:
            requests = plan.send(value)
            while not requests:
                requests = plan.send([])
        except StopIteration as stop:
            state.plan = None
            state.plan_result = stop.value
            return [], True
        state.outstanding = Fraction(len(requests))
        state.replies = []
        return list(requests), False

    def master_compute(self, state: PlanState, msg: Message) -> tuple[list[Message], bool]:
        if state.plan is None:
            raise RuntimeError(f"unexpected {msg.kind} message from {msg.src}: no step running")
        body = msg.body()
        state.replies.append((msg.src, body))
        state.outstanding -= credit_of(body)
        if state.outstanding < 0:
            raise RuntimeError("more credit returned than issued")
        if state.outstanding > 0:
            return [], False
        replies = sorted(state.replies, key=lambda r: r[0])
        return self._advance(state, replies)
