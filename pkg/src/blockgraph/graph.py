"""Undirected simple graphs, blocks and graph updates.

A :class:`Graph` keeps every adjacency list sorted ascending so that the
lower/higher neighbour filters used by clique maintenance are plain slices.
A :class:`Block` is the piece of the graph owned by one worker: the owned
vertices, the edges between them, and a stub for every edge that leaves
the block (the frontier).
"""
from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator


class GraphError(Exception):
    """Base class for rejected graph mutations.

    ``update`` is filled in when the error was raised while applying a
    :class:`GraphUpdate`, so callers can report the offending line.
    """

    def __init__(self, message: str, update: GraphUpdate | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.update = update

    def __str__(self) -> str:
        if self.update is not None and self.update.line is not None:
            return f"line {self.update.line}: {self.message}"
        return self.message


class DuplicateEdge(GraphError):
    pass


class MissingEdge(GraphError):
    pass


class MissingVertex(GraphError):
    pass


class DuplicateVertex(GraphError):
    pass


class SelfLoop(GraphError):
    pass


def _check_id(u: int) -> int:
    if isinstance(u, bool) or not isinstance(u, int) or u < 0:
        raise ValueError(f"vertex ids must be non-negative integers, got {u!r}")
    return u


def canonical(u: int, v: int) -> tuple[int, int]:
    """Return the unordered pair ``(u, v)`` as ``(min, max)``."""
    if u == v:
        raise SelfLoop(f"self-loop on vertex {u}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Edge:
    """An undirected edge stored as ``(min, max)``; the value is opaque."""

    u: int
    v: int
    value: Any = field(default=None, compare=False, hash=False)

    def __post_init__(self) -> None:
        _check_id(self.u)
        _check_id(self.v)
        a, b = canonical(self.u, self.v)
        object.__setattr__(self, "u", a)
        object.__setattr__(self, "v", b)

    def key(self) -> tuple[int, int]:
        return (self.u, self.v)

    def other(self, w: int) -> int:
        if w == self.u:
            return self.v
        if w == self.v:
            return self.u
        raise ValueError(f"{w} is not an endpoint of {self}")


class Graph:
    """Mutable undirected simple graph with sorted adjacency lists."""

    __slots__ = ("_adj", "_vvalues", "_evalues")

    def __init__(self) -> None:
        self._adj: dict[int, list[int]] = {}
        self._vvalues: dict[int, Any] = {}
        self._evalues: dict[tuple[int, int], Any] = {}

    @classmethod
    def from_edges(
        cls, edges: Iterable[tuple[int, int] | Edge], vertices: Iterable[int] = ()
    ) -> Graph:
        """Build a graph, silently collapsing duplicate edges."""
        g = cls()
        for u in vertices:
            if u not in g._adj:
                g.add_vertex(u)
        for e in edges:
            if isinstance(e, Edge):
                u, v, value = e.u, e.v, e.value
            else:
                u, v = e
                value = None
            if not g.has_edge(u, v):
                g.add_edge(u, v, value)
        return g

    # -- queries -----------------------------------------------------------

    @property
    def vertices(self) -> list[int]:
        return sorted(self._adj)

    @property
    def num_vertices(self) -> int:
        return len(self._adj)

    @property
    def num_edges(self) -> int:
        return len(self._evalues)

    def __contains__(self, u: object) -> bool:
        return u in self._adj

    def has_vertex(self, u: int) -> bool:
        return u in self._adj

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        return (min(u, v), max(u, v)) in self._evalues

    def vertex_value(self, u: int) -> Any:
        self._require(u)
        return self._vvalues.get(u)

    def edge_value(self, u: int, v: int) -> Any:
        key = (min(u, v), max(u, v))
        if key not in self._evalues:
            raise MissingEdge(f"edge ({u}, {v}) not in graph")
        return self._evalues[key]

    def degree(self, u: int) -> int:
        return len(self._require(u))

    def neighbors(self, u: int) -> list[int]:
        return list(self._require(u))

    def adj_lt(self, u: int) -> list[int]:
        """Neighbours with a smaller id than ``u``."""
        nbrs = self._require(u)
        return nbrs[: bisect.bisect_left(nbrs, u)]

    def adj_gt(self, u: int) -> list[int]:
        """Neighbours with a larger id than ``u``."""
        nbrs = self._require(u)
        return nbrs[bisect.bisect_right(nbrs, u):]

    def edges(self) -> Iterator[tuple[int, int]]:
        """Canonical edge pairs in ascending order."""
        return iter(sorted(self._evalues))

    def edge_list(self) -> list[Edge]:
        return [Edge(u, v, self._evalues[(u, v)]) for u, v in sorted(self._evalues)]

    def _require(self, u: int) -> list[int]:
        try:
            return self._adj[u]
        except KeyError:
            raise MissingVertex(f"vertex {u} not in graph") from None

    # -- mutation ----------------------------------------------------------

    def add_vertex(self, u: int, value: Any = None) -> None:
        _check_id(u)
        if u in self._adj:
            raise DuplicateVertex(f"vertex {u} already in graph")
        self._adj[u] = []
        if value is not None:
            self._vvalues[u] = value

    def remove_vertex(self, u: int) -> list[tuple[int, int]]:
        """Remove ``u`` and its incident edges; returns the removed edges."""
        nbrs = self._require(u)
        removed = []
        for w in nbrs:
            other = self._adj[w]
            del other[bisect.bisect_left(other, u)]
            key = (min(u, w), max(u, w))
            del self._evalues[key]
            removed.append(key)
        del self._adj[u]
        self._vvalues.pop(u, None)
        return removed

    def add_edge(self, u: int, v: int, value: Any = None) -> None:
        """Insert edge ``(u, v)``, creating unknown endpoints on the fly."""
        _check_id(u)
        _check_id(v)
        key = canonical(u, v)
        if key in self._evalues:
            raise DuplicateEdge(f"edge ({key[0]}, {key[1]}) already in graph")
        for w in key:
            if w not in self._adj:
                self._adj[w] = []
        bisect.insort(self._adj[u], v)
        bisect.insort(self._adj[v], u)
        self._evalues[key] = value

    def remove_edge(self, u: int, v: int) -> None:
        key = (min(u, v), max(u, v))
        if u == v or key not in self._evalues:
            raise MissingEdge(f"edge ({key[0]}, {key[1]}) not in graph")
        for a, b in ((u, v), (v, u)):
            nbrs = self._adj[a]
            del nbrs[bisect.bisect_left(nbrs, b)]
        del self._evalues[key]

    # -- misc --------------------------------------------------------------

    def copy(self) -> Graph:
        g = Graph()
        g._adj = {u: list(n) for u, n in self._adj.items()}
        g._vvalues = dict(self._vvalues)
        g._evalues = dict(self._evalues)
        return g

    def subgraph(self, vertices: Iterable[int]) -> Graph:
        """Induced subgraph on ``vertices`` (ids absent from the graph are ignored)."""
        keep = {u for u in vertices if u in self._adj}
        g = Graph()
        for u in keep:
            g._adj[u] = [w for w in self._adj[u] if w in keep]
            if u in self._vvalues:
                g._vvalues[u] = self._vvalues[u]
        for u, v in self._evalues:
            if u in keep and v in keep:
                g._evalues[(u, v)] = self._evalues[(u, v)]
        return g

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._adj.keys() == other._adj.keys() and self._evalues.keys() == other._evalues.keys()

    def __repr__(self) -> str:
        return f"Graph(|V|={self.num_vertices}, |E|={self.num_edges})"


def degree(g: Graph, u: int) -> int:
    return g.degree(u)


def neighbors(g: Graph, u: int) -> list[int]:
    return g.neighbors(u)


class UpdateKind(enum.Enum):
    ADD_EDGE = "A"
    REMOVE_EDGE = "D"
    ADD_VERTEX = "AV"
    REMOVE_VERTEX = "DV"


@dataclass(frozen=True)
class GraphUpdate:
    """One insertion or removal read from an update stream.

    ``payload`` is an :class:`Edge` for edge updates and a vertex id for
    vertex updates. ``line`` records the source line when read from a file.
    """

    kind: UpdateKind
    payload: Edge | int
    line: int | None = field(default=None, compare=False)

    @classmethod
    def add_edge(cls, u: int, v: int, value: Any = None, line: int | None = None) -> GraphUpdate:
        return cls(UpdateKind.ADD_EDGE, Edge(u, v, value), line)

    @classmethod
    def remove_edge(cls, u: int, v: int, line: int | None = None) -> GraphUpdate:
        return cls(UpdateKind.REMOVE_EDGE, Edge(u, v), line)

    @classmethod
    def add_vertex(cls, u: int, line: int | None = None) -> GraphUpdate:
        return cls(UpdateKind.ADD_VERTEX, _check_id(u), line)

    @classmethod
    def remove_vertex(cls, u: int, line: int | None = None) -> GraphUpdate:
        return cls(UpdateKind.REMOVE_VERTEX, _check_id(u), line)

    @property
    def is_edge(self) -> bool:
        return self.kind in (UpdateKind.ADD_EDGE, UpdateKind.REMOVE_EDGE)

    @property
    def edge(self) -> Edge:
        if not isinstance(self.payload, Edge):
            raise TypeError(f"{self.kind.name} carries a vertex, not an edge")
        return self.payload

    @property
    def vertex(self) -> int:
        if isinstance(self.payload, Edge):
            raise TypeError(f"{self.kind.name} carries an edge, not a vertex")
        return self.payload

    def inverse(self) -> GraphUpdate:
        """The update undoing this one. Vertex removal has no single inverse."""
        if self.kind is UpdateKind.ADD_EDGE:
            return GraphUpdate(UpdateKind.REMOVE_EDGE, self.edge)
        if self.kind is UpdateKind.REMOVE_EDGE:
            return GraphUpdate(UpdateKind.ADD_EDGE, self.edge)
        if self.kind is UpdateKind.ADD_VERTEX:
            return GraphUpdate(UpdateKind.REMOVE_VERTEX, self.vertex)
        raise ValueError("vertex removal cannot be inverted without its incident edges")

    def __str__(self) -> str:
        if isinstance(self.payload, Edge):
            return f"{self.kind.value} {self.payload.u} {self.payload.v}"
        return f"{self.kind.value} {self.payload}"


def apply_update(g: Graph, upd: GraphUpdate) -> Graph:
    """Apply ``upd`` to ``g`` in place; invalid updates leave ``g`` untouched."""
    try:
        if upd.kind is UpdateKind.ADD_EDGE:
            e = upd.edge
            g.add_edge(e.u, e.v, e.value)
        elif upd.kind is UpdateKind.REMOVE_EDGE:
            g.remove_edge(upd.edge.u, upd.edge.v)
        elif upd.kind is UpdateKind.ADD_VERTEX:
            g.add_vertex(upd.vertex)
        else:
            g.remove_vertex(upd.vertex)
    except GraphError as err:
        err.update = upd
        raise
    return g


@dataclass
class VertexState:
    """Per-vertex algorithm attachments held by the owning block."""

    degree: int = 0
    coreness: int = 0
    block: int = -1
    clique_tree: Any = None


@dataclass
class Block:
    """The part of the graph owned by one worker.

    ``local_graph`` holds the owned vertices and the edges between them.
    Every edge to a vertex owned elsewhere is kept as a frontier stub
    ``(local, remote, remote_block)``. ``ghosts`` caches algorithm values of
    remote neighbours; ``scratch`` is per-algorithm transient state.
    """

    block_id: int
    local_graph: Graph = field(default_factory=Graph)
    vertex_states: dict[int, VertexState] = field(default_factory=dict)
    ghosts: dict[int, Any] = field(default_factory=dict)
    scratch: dict[str, Any] = field(default_factory=dict)
    _remote: dict[int, dict[int, int]] = field(default_factory=dict, repr=False)
    _stub_values: dict[tuple[int, int], Any] = field(default_factory=dict, repr=False)

    def owns(self, u: int) -> bool:
        return u in self.local_graph

    def owned_vertices(self) -> list[int]:
        return self.local_graph.vertices

    @property
    def frontier(self) -> set[tuple[int, int, int]]:
        return {(u, r, b) for u, rs in self._remote.items() for r, b in rs.items()}

    def frontier_edges(self) -> list[tuple[int, int, int]]:
        return sorted(self.frontier)

    def add_vertex(self, u: int) -> VertexState:
        self.local_graph.add_vertex(u)
        state = VertexState(block=self.block_id)
        self.vertex_states[u] = state
        return state

    def remove_vertex(self, u: int) -> None:
        if self._remote.get(u):
            raise GraphError(f"vertex {u} still has frontier edges")
        self.local_graph.remove_vertex(u)
        self._remote.pop(u, None)
        del self.vertex_states[u]

    def add_frontier_edge(self, local: int, remote: int, remote_block: int, value: Any = None) -> None:
        if not self.owns(local):
            raise MissingVertex(f"vertex {local} not owned by block {self.block_id}")
        if self.owns(remote) or remote_block == self.block_id:
            raise ValueError(f"frontier stub ({local}, {remote}) points inside block {self.block_id}")
        stubs = self._remote.setdefault(local, {})
        if remote in stubs:
            raise DuplicateEdge(f"edge ({min(local, remote)}, {max(local, remote)}) already in graph")
        stubs[remote] = remote_block
        if value is not None:
            self._stub_values[(min(local, remote), max(local, remote))] = value

    def remove_frontier_edge(self, local: int, remote: int) -> int:
        stubs = self._remote.get(local)
        if not stubs or remote not in stubs:
            raise MissingEdge(f"edge ({min(local, remote)}, {max(local, remote)}) not in graph")
        block = stubs.pop(remote)
        self._stub_values.pop((min(local, remote), max(local, remote)), None)
        if not stubs:
            del self._remote[local]
        return block

    def remote_neighbors(self, u: int) -> dict[int, int]:
        """Remote neighbours of owned vertex ``u`` mapped to their block."""
        return dict(self._remote.get(u, {}))

    def has_edge(self, u: int, v: int) -> bool:
        if self.local_graph.has_edge(u, v):
            return True
        return v in self._remote.get(u, {}) or u in self._remote.get(v, {})

    def degree(self, u: int) -> int:
        return self.local_graph.degree(u) + len(self._remote.get(u, ()))

    def neighbors(self, u: int) -> list[int]:
        local = self.local_graph.neighbors(u)
        remote = self._remote.get(u)
        if not remote:
            return local
        return sorted(local + list(remote))

    def is_remote_referenced(self, r: int) -> bool:
        return any(r in stubs for stubs in self._remote.values())

    def edge_value(self, u: int, v: int) -> Any:
        if self.local_graph.has_edge(u, v):
            return self.local_graph.edge_value(u, v)
        return self._stub_values.get((min(u, v), max(u, v)))

    def edge_keys(self) -> set[tuple[int, int]]:
        keys = set(self.local_graph.edges())
        for u, r, _ in self.frontier:
            keys.add((min(u, r), max(u, r)))
        return keys


def build_blocks(g: Graph, owners: dict[int, int], num_blocks: int) -> list[Block]:
    """Split ``g`` into ``num_blocks`` blocks by vertex ownership."""
    if num_blocks < 1:
        raise ValueError("need at least one block")
    blocks = [Block(i) for i in range(num_blocks)]
    for u in g.vertices:
        b = owners[u]
        if not 0 <= b < num_blocks:
            raise ValueError(f"vertex {u} assigned to block {b} outside [0, {num_blocks})")
        blocks[b].add_vertex(u)
    for u, v in g.edges():
        bu, bv = owners[u], owners[v]
        if bu == bv:
            blocks[bu].local_graph.add_edge(u, v, g.edge_value(u, v))
        else:
            value = g.edge_value(u, v)
            blocks[bu].add_frontier_edge(u, v, bv, value)
            blocks[bv].add_frontier_edge(v, u, bu, value)
    return blocks


def merge_blocks(blocks: Iterable[Block]) -> Graph:
    """Reassemble the global graph from edge-cut blocks."""
    g = Graph()
    blocks = list(blocks)
    for b in blocks:
        for u in b.owned_vertices():
            g.add_vertex(u)
    for b in blocks:
        for u, v in b.local_graph.edges():
            g.add_edge(u, v, b.local_graph.edge_value(u, v))
        for u, r, _ in b.frontier:
            if u < r:
                g.add_edge(u, r, b.edge_value(u, r))
    return g
