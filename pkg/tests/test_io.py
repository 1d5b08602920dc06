from __future__ import annotations

import pytest

from blockgraph.algorithms import DegreeHooks, KCoreHooks
from blockgraph.graph import Graph, GraphUpdate, MissingEdge, UpdateKind, apply_update, build_blocks
from blockgraph.io import (
    ParseError,
    read_edge_list,
    read_updates,
    write_edge_list,
    write_snapshot,
    write_updates,
)
from blockgraph.runtime import run_job

from conftest import gnp, split


def write(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_path_file(tmp_path):
    g = read_edge_list(write(tmp_path, "1 2\n2 3"))
    assert g.vertices == [1, 2, 3] and g.num_edges == 2


def test_comments_blank_lines_and_extra_columns(tmp_path):
    g = read_edge_list(write(tmp_path, "# SNAP header\n\n1 2 0.5\n  # indented\n2 3 x y\n"))
    assert list(g.edges()) == [(1, 2), (2, 3)]


def test_duplicates_and_reversed_pairs_collapse(tmp_path):
    g = read_edge_list(write(tmp_path, "1 2\n2 1\n1 2\n"))
    assert g.num_edges == 1


@pytest.mark.parametrize(
    "text, line",
    [("1 2\n3\n", 2), ("1 x\n", 1), ("1 2\n\n4 4\n", 3), ("-1 2\n", 1), (f"{2**64} 1\n", 1)],
)
def test_bad_edge_lines(tmp_path, text, line):
    with pytest.raises(ParseError) as err:
        read_edge_list(write(tmp_path, text))
    assert err.value.line == line
    assert f":{line}:" in str(err.value)


def test_max_id_accepted(tmp_path):
    g = read_edge_list(write(tmp_path, f"{2**64 - 1} 0\n"))
    assert g.vertices == [0, 2**64 - 1]


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_edge_list(tmp_path / "nope.txt")


def test_round_trip(tmp_path):
    g = gnp(40, 0.1, 3)
    g.add_vertex(1000)
    write_edge_list(g, tmp_path / "e.txt")
    back = read_edge_list(tmp_path / "e.txt")
    g.remove_vertex(1000)  # isolated vertices have no edge line
    assert back == g


def test_single_update(tmp_path):
    (upd,) = read_updates(write(tmp_path, "A 1 2\n", "u.txt"))
    assert upd.kind is UpdateKind.ADD_EDGE and (upd.edge.u, upd.edge.v) == (1, 2) and upd.line == 1


def test_mixed_stream_in_order(tmp_path):
    ups = list(read_updates(write(tmp_path, "AV 9\nA 1 2\n# note\nD 1 2\nDV 9\n", "u.txt")))
    assert [str(u) for u in ups] == ["AV 9", "A 1 2", "D 1 2", "DV 9"]
    assert [u.line for u in ups] == [1, 2, 4, 5]


def test_stream_is_lazy(tmp_path):
    it = read_updates(write(tmp_path, "A 1 2\nZ 3 4\n", "u.txt"))
    assert str(next(it)) == "A 1 2"
    with pytest.raises(ParseError):
        next(it)


@pytest.mark.parametrize("text", ["A 1\n", "AV 1 2\n", "X 1 2\n", "A 3 3\n"])
def test_bad_update_lines(tmp_path, text):
    with pytest.raises(ParseError):
        list(read_updates(write(tmp_path, text, "u.txt")))


def test_delete_of_absent_edge_reports_line(tmp_path):
    g = Graph.from_edges([(1, 2)])
    (upd,) = read_updates(write(tmp_path, "\n\nD 2 3\n", "u.txt"))
    with pytest.raises(MissingEdge) as err:
        apply_update(g, upd)
    assert err.value.update.line == 3


def test_write_updates_round_trip(tmp_path):
    ups = [GraphUpdate.add_edge(1, 2), GraphUpdate.remove_vertex(4), GraphUpdate.add_vertex(7)]
    write_updates(ups, tmp_path / "u.txt")
    assert [str(u) for u in read_updates(tmp_path / "u.txt")] == [str(u) for u in ups]


def test_empty_snapshot(tmp_path):
    res = run_job(build_blocks(Graph(), {}, 1), [], DegreeHooks())
    write_snapshot(res, tmp_path)
    assert (tmp_path / "vertices.txt").read_bytes() == b""
    assert (tmp_path / "edges.txt").read_bytes() == b""


def test_degree_snapshot_of_triangle(tmp_path, triangle):
    res = run_job(build_blocks(triangle, {1: 0, 2: 0, 3: 1}, 2), [], DegreeHooks())
    write_snapshot(res, tmp_path)
    assert (tmp_path / "vertices.txt").read_text() == "1 2\n2 2\n3 2\n"
    assert (tmp_path / "edges.txt").read_text() == "1 2\n1 3\n2 3\n"


def test_same_job_twice_is_byte_identical(tmp_path):
    g = gnp(40, 0.15, 8)
    outs = []
    for i in range(2):
        res = run_job(split(g, 3, 1), [GraphUpdate.remove_edge(*next(iter(g.edges())))], KCoreHooks())
        d = tmp_path / str(i)
        write_snapshot(res, d)
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outs[0] == outs[1]
    assert outs[0]["edges.txt"].endswith(b"\n")


def test_gzipped_edge_list(tmp_path):
    import gzip

    p = tmp_path / "g.txt.gz"
    with gzip.open(p, "wt") as fh:
        fh.write("# snap\n1 2\n2 3\n")
    assert list(read_edge_list(p).edges()) == [(1, 2), (2, 3)]
