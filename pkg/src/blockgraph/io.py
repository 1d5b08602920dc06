"""Edge lists, update streams and job snapshots on disk.

Edge list: one ``u v`` pair per line, ``#`` comments, extra columns
ignored, duplicate or reversed pairs collapsed, ``.gz`` files read
transparently. Update stream: one of
``A u v``, ``D u v``, ``AV u``, ``DV u`` per line, applied in order.
"""
from __future__ import annotations

import gzip
import os
from pathlib import Path
from typing import Iterator

from .graph import Graph, GraphUpdate, SelfLoop
from .runtime import JobResult

MAX_ID = (1 << 64) - 1


class ParseError(ValueError):
    def __init__(self, path: str | os.PathLike, line: int, message: str) -> None:
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def _vertex(tok: str, path: str | os.PathLike, lineno: int) -> int:
    try:
        u = int(tok, 10)
    except ValueError:
        raise ParseError(path, lineno, f"bad vertex id {tok!r}") from None
    if not 0 <= u <= MAX_ID:
        raise ParseError(path, lineno, f"vertex id {tok} outside the unsigned 64-bit range")
    return u


def _content_lines(path: str | os.PathLike) -> Iterator[tuple[int, list[str]]]:
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split()


def read_edge_list(path: str | os.PathLike) -> Graph:
    g = Graph()
    for lineno, toks in _content_lines(path):
        if len(toks) < 2:
            raise ParseError(path, lineno, "expected 'u v'")
        u, v = _vertex(toks[0], path, lineno), _vertex(toks[1], path, lineno)
        if u == v:
            raise ParseError(path, lineno, f"self-loop on {u}")
        if not g.has_edge(u, v):
            g.add_edge(u, v)
    return g


_ARITY = {"A": 2, "D": 2, "AV": 1, "DV": 1}


def read_updates(path: str | os.PathLike) -> Iterator[GraphUpdate]:
    """Lazily parse an update stream; each update remembers its line number."""
    for lineno, toks in _content_lines(path):
        tag = toks[0]
        arity = _ARITY.get(tag)
        if arity is None:
            raise ParseError(path, lineno, f"unknown update kind {tag!r}")
        if len(toks) != arity + 1:
            raise ParseError(path, lineno, f"'{tag}' takes {arity} vertex id(s)")
        ids = [_vertex(t, path, lineno) for t in toks[1:]]
        try:
            if tag == "A":
                yield GraphUpdate.add_edge(ids[0], ids[1], line=lineno)
            elif tag == "D":
                yield GraphUpdate.remove_edge(ids[0], ids[1], line=lineno)
            elif tag == "AV":
                yield GraphUpdate.add_vertex(ids[0], line=lineno)
            else:
                yield GraphUpdate.remove_vertex(ids[0], line=lineno)
        except SelfLoop as err:
            raise ParseError(path, lineno, str(err)) from None


def write_updates(updates: list[GraphUpdate], path: str | os.PathLike) -> None:
    Path(path).write_text("".join(f"{u}\n" for u in updates))


def write_edge_list(g: Graph, path: str | os.PathLike) -> None:
    Path(path).write_text("".join(f"{u} {v}\n" for u, v in g.edges()))


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_bytes("".join(line + "\n" for line in lines).encode())


def write_snapshot(result: JobResult, directory: str | os.PathLike) -> list[Path]:
    """Write ``vertices.txt``, ``edges.txt`` and any algorithm extras.

    Lines are sorted and newline-terminated, so equal results give
    byte-identical files.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = {"vertices.txt": result.vertex_lines(), "edges.txt": result.edge_lines(), **result.extras}
    written = []
    for name, lines in sorted(files.items()):
        path = out / name
        _write_lines(path, lines)
        written.append(path)
    return written
