"""Maximal clique maintenance with per-vertex prefix trees.

Every maximal clique with at least two members is stored exactly once,
as a root-to-terminal path of ``T_w`` where ``w`` is its smallest member,
on the worker owning ``w``.

Inserting ``(u, v)`` creates the cliques ``{u, v} + M`` for every maximal
clique ``M`` of the graph induced by the common neighbours of ``u`` and
``v`` (just ``{u, v}`` if they have none). A previously maximal clique is
invalidated exactly when it equals ``M' - {u}`` or ``M' - {v}`` for some
new clique ``M'``.

Deleting ``(u, v)`` drops the cliques holding both endpoints; their hosts
are ``u`` and the common neighbours below ``u``. Each dropped clique
``C`` leaves the candidates ``C - {u}`` and ``C - {v}``, kept when no
outside vertex is adjacent to all of their members.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from ..graph import Block, Graph, GraphUpdate
from ..runtime import Job, Plan, m2w
from .base import BlockAlgorithm, BlockMasterState

Clique = tuple[int, ...]


@dataclass
class _Node:
    children: dict[int, _Node] = field(default_factory=dict)
    terminal: bool = False


class PrefixTree:
    """Trie of ascending vertex paths rooted at ``root``."""

    def __init__(self, root: int) -> None:
        self.root = root
        self._top = _Node()
        self._size = 0

    def _check(self, clique: Iterable[int]) -> Clique:
        c = tuple(clique)
        if not c or c[0] != self.root:
            raise ValueError(f"clique {c} does not start at root {self.root}")
        if any(a >= b for a, b in zip(c, c[1:])):
            raise ValueError(f"clique {c} is not strictly ascending")
        return c

    def insert(self, clique: Iterable[int]) -> bool:
        """Store ``clique``; returns False if it was already present."""
        c = self._check(clique)
        node = self._top
        for w in c[1:]:
            node = node.children.setdefault(w, _Node())
        if node.terminal:
            return False
        node.terminal = True
        self._size += 1
        return True

    def remove(self, clique: Iterable[int]) -> bool:
        """Delete ``clique`` and prune dead branches; False if absent."""
        c = self._check(clique)
        trail = [self._top]
        for w in c[1:]:
            nxt = trail[-1].children.get(w)
            if nxt is None:
                return False
            trail.append(nxt)
        if not trail[-1].terminal:
            return False
        trail[-1].terminal = False
        self._size -= 1
        for i in range(len(c) - 1, 0, -1):
            node = trail[i]
            if node.terminal or node.children:
                break
            del trail[i - 1].children[c[i]]
        return True

    def __contains__(self, clique: object) -> bool:
        try:
            c = self._check(clique)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            return False
        node = self._top
        for w in c[1:]:
            node = node.children.get(w)  # type: ignore[assignment]
            if node is None:
                return False
        return node.terminal

    def paths(self) -> list[Clique]:
        """Stored cliques in ascending lexicographic order."""
        out: list[Clique] = []

        def walk(node: _Node, prefix: list[int]) -> None:
            if node.terminal:
                out.append(tuple(prefix))
            for w in sorted(node.children):
                prefix.append(w)
                walk(node.children[w], prefix)
                prefix.pop()

        walk(self._top, [self.root])
        return out

    def __len__(self) -> int:
        return self._size

    def __repr__(self) -> str:
        return f"PrefixTree({self.root}, {self.paths()})"


def tree_paths(t: PrefixTree | None) -> list[Clique]:
    return [] if t is None else t.paths()


def maximal_cliques(adj: Mapping[int, set[int]], min_size: int = 2) -> list[Clique]:
    """Maximal cliques of the graph given by ``adj`` (pivoting Bron-Kerbosch)."""
    out: list[Clique] = []

    def expand(r: list[int], p: set[int], x: set[int]) -> None:
        if not p and not x:
            if len(r) >= min_size:
                out.append(tuple(sorted(r)))
            return
        pivot = max(p | x, key=lambda w: (len(p & adj[w]), -w))
        for w in sorted(p - adj[pivot]):
            r.append(w)
            expand(r, p & adj[w], x & adj[w])
            r.pop()
            p.discard(w)
            x.add(w)

    expand([], set(adj), set())
    return sorted(out)


def graph_adjacency(g: Graph) -> dict[int, set[int]]:
    return {u: set(g.neighbors(u)) for u in g.vertices}


def build_trees(cliques: Iterable[Iterable[int]]) -> dict[int, PrefixTree]:
    trees: dict[int, PrefixTree] = {}
    for c in cliques:
        c = tuple(sorted(c))
        trees.setdefault(c[0], PrefixTree(c[0])).insert(c)
    return trees


def batch_mce(g: Graph) -> tuple[list[Clique], dict[int, PrefixTree]]:
    """All maximal cliques of ``g`` (size >= 2) and the trees storing them."""
    cliques = maximal_cliques(graph_adjacency(g))
    return cliques, build_trees(cliques)


def _is_clique(c: Clique, adj: Mapping[int, set[int]]) -> bool:
    return all(b in adj[a] for i, a in enumerate(c) for b in c[i + 1:])


def check_clique_set(cliques: Iterable[Clique], g: Graph) -> None:
    """Assert every clique is a clique of ``g`` and none contains another."""
    cs = [frozenset(c) for c in cliques]
    adj = graph_adjacency(g)
    for c in cs:
        if not _is_clique(tuple(sorted(c)), adj):
            raise AssertionError(f"{sorted(c)} is not a clique")
    for a in cs:
        for b in cs:
            if a < b:
                raise AssertionError(f"{sorted(a)} is contained in {sorted(b)}")


@dataclass(frozen=True)
class CliqueChange:
    edge: tuple[int, int]
    kind: str
    removed: tuple[Clique, ...]
    added: tuple[Clique, ...]


def _cl(cs: Iterable[Iterable[int]]) -> list[list[int]]:
    return [list(c) for c in cs]


class MCEHooks(BlockAlgorithm):
    name = "mce"
    vertex_columns = ("degree",)

    # -- master ----------------------------------------------------------------

    def after_start(self, state: BlockMasterState, replies: list[tuple[int, Any]]) -> Plan:
        adj = {w: set(nbrs) for _, body in replies for w, nbrs in body.get("adj", [])}
        cliques = maximal_cliques(adj)
        yield from self.update_trees(state, [], cliques)

    def update_trees(self, state: BlockMasterState, remove: Iterable[Clique], insert: Iterable[Clique]) -> Plan:
        """Apply removals then insertions at the host of each clique; returns what changed."""
        per_host: dict[int, dict[str, list[Clique]]] = {}
        for op, cs in (("remove", remove), ("insert", insert)):
            for c in cs:
                per_host.setdefault(self.owner(state, c[0]), {"remove": [], "insert": []})[op].append(c)
        replies = yield [
            m2w(b, "mce_update", {"remove": _cl(ops["remove"]), "insert": _cl(ops["insert"])})
            for b, ops in sorted(per_host.items())
        ]
        removed = sorted(tuple(c) for _, body in replies for c in body.get("removed", []))
        added = sorted(tuple(c) for _, body in replies for c in body.get("added", []))
        return removed, added

    def fetch_adj(self, state: BlockMasterState, vertices: Iterable[int], restrict: Iterable[int] | None = None) -> Plan:
        by_block: dict[int, list[int]] = {}
        for w in vertices:
            by_block.setdefault(self.owner(state, w), []).append(w)
        body_extra = {"restrict": sorted(restrict)} if restrict is not None else {}
        replies = yield [
            m2w(b, "mce_adj", {"vertices": sorted(ws), **body_extra}) for b, ws in sorted(by_block.items())
        ]
        return {w: set(nbrs) for _, body in replies for w, nbrs in body.get("adj", [])}

    @staticmethod
    def _merge_adj(replies: list[tuple[int, Any]]) -> dict[int, set[int]]:
        return {w: set(nbrs) for _, body in replies for w, nbrs in body.get("adj", [])}

    def insert_plan(self, state: BlockMasterState, u: int, v: int, value: Any = None) -> Plan:
        u, v = min(u, v), max(u, v)
        adj = self._merge_adj((yield self.link_requests(state, "mce_link", u, v, value=value)))
        common = adj[u] & adj[v]
        if common:
            sub = yield from self.fetch_adj(state, common, restrict=common)
            new = [tuple(sorted({u, v, *m})) for m in maximal_cliques(sub, min_size=1)]
        else:
            new = [(u, v)]
        stale = set()
        for c in new:
            for drop in (u, v):
                rest = tuple(w for w in c if w != drop)
                if len(rest) >= 2:
                    stale.add(rest)
        removed, added = yield from self.update_trees(state, sorted(stale), sorted(new))
        change = CliqueChange((u, v), "insert", tuple(removed), tuple(added))
        state.history.append(change)
        return change

    def delete_plan(self, state: BlockMasterState, u: int, v: int) -> Plan:
        u, v = min(u, v), max(u, v)
        adj = self._merge_adj((yield self.link_requests(state, "mce_unlink", u, v)))
        common = adj[u] & adj[v]
        hosts = sorted({w for w in common if w < u} | {u})
        per_block: dict[int, list[int]] = {}
        for w in hosts:
            per_block.setdefault(self.owner(state, w), []).append(w)
        replies = yield [
            m2w(b, "mce_drop", {"u": u, "v": v, "hosts": ws}) for b, ws in sorted(per_block.items())
        ]
        dropped = sorted(tuple(c) for _, body in replies for c in body.get("dropped", []))
        candidates = set()
        for c in dropped:
            for gone in (u, v):
                rest = tuple(w for w in c if w != gone)
                if len(rest) >= 2:
                    candidates.add(rest)
        added: list[Clique] = []
        if candidates:
            members = set().union(*candidates)
            full = yield from self.fetch_adj(state, members)
            keep = []
            for c in sorted(candidates):
                shared = set.intersection(*(full[w] for w in c)) - set(c)
                if not shared:
                    keep.append(c)
            _, added = yield from self.update_trees(state, [], keep)
        change = CliqueChange((u, v), "delete", tuple(dropped), tuple(added))
        state.history.append(change)
        return change

    # -- worker ----------------------------------------------------------------

    @staticmethod
    def _tree(block: Block, w: int) -> PrefixTree:
        st = block.vertex_states[w]
        if st.clique_tree is None:
            st.clique_tree = PrefixTree(w)
        return st.clique_tree

    def on_hello(self, block: Block, body: dict) -> dict:
        adj = []
        for u, st in block.vertex_states.items():
            st.degree = block.degree(u)
            st.clique_tree = PrefixTree(u)
            adj.append([u, block.neighbors(u)])
        return {"owned": block.owned_vertices(), "adj": adj}

    def on_mce_link(self, block: Block, body: dict) -> dict:
        mine = self.apply_link(block, body)
        return {"adj": [[w, block.neighbors(w)] for w in mine]}

    def on_mce_unlink(self, block: Block, body: dict) -> dict:
        mine = self.apply_unlink(block, body)
        return {"adj": [[w, block.neighbors(w)] for w in mine]}

    def on_mce_adj(self, block: Block, body: dict) -> dict:
        restrict = set(body["restrict"]) if "restrict" in body else None
        out = []
        for w in body["vertices"]:
            nbrs = block.neighbors(w)
            if restrict is not None:
                nbrs = [x for x in nbrs if x in restrict]
            out.append([w, nbrs])
        return {"adj": out}

    def on_mce_update(self, block: Block, body: dict) -> dict:
        removed, added = [], []
        for c in body["remove"]:
            if self._tree(block, c[0]).remove(c):
                removed.append(c)
        for c in body["insert"]:
            if self._tree(block, c[0]).insert(c):
                added.append(c)
        return {"removed": removed, "added": added}

    def on_mce_drop(self, block: Block, body: dict) -> dict:
        u, v = body["u"], body["v"]
        dropped = []
        for w in body["hosts"]:
            tree = self._tree(block, w)
            for c in tree.paths():
                if u in c and v in c:
                    tree.remove(c)
                    dropped.append(list(c))
        return {"dropped": dropped}

    def collect(self, blocks, state):
        vertices, edges, extras = super().collect(blocks, state)
        extras["cliques.txt"] = [" ".join(map(str, c)) for c in all_cliques(blocks)]
        return vertices, edges, extras


def all_cliques(blocks: Iterable[Block]) -> list[Clique]:
    """Union of the paths of every stored tree, sorted."""
    out = []
    for b in blocks:
        for st in b.vertex_states.values():
            out.extend(tree_paths(st.clique_tree))
    return sorted(out)


def mce_insert_edge(job: Job, u: int, v: int) -> tuple[list[Clique], list[Clique]]:
    """Insert ``(u, v)``; returns ``(removed, added)`` cliques."""
    job.apply(GraphUpdate.add_edge(u, v))
    change: CliqueChange = job.state.plan_result
    return list(change.removed), list(change.added)


def mce_delete_edge(job: Job, u: int, v: int) -> tuple[list[Clique], list[Clique]]:
    """Delete ``(u, v)``; returns ``(removed, added)`` cliques."""
    job.apply(GraphUpdate.remove_edge(u, v))
    change: CliqueChange = job.state.plan_result
    return list(change.removed), list(change.added)
