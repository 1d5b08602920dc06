from __future__ import annotations

import csv
import io
import subprocess
import sys

import networkx as nx
import pytest

from blockgraph.bench import (
    BenchConfig,
    InsufficientCandidates,
    MetricsRecord,
    gen_scenario,
    holdout_split,
    run_bench,
    write_csv,
)
from blockgraph.cli import main
from blockgraph.graph import Graph
from blockgraph.io import write_edge_list
from blockgraph.partitioning import random_partition, vertex_owners

from conftest import gnp, nx_to_graph


@pytest.fixture
def graph_file(tmp_path):
    g = nx_to_graph(nx.gnm_random_graph(200, 600, seed=3))
    p = tmp_path / "g.txt"
    write_edge_list(g, p)
    return p


def rows(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


# -- scenarios ------------------------------------------------------------------------


def test_intra_on_one_block_takes_any_non_edge():
    g = gnp(30, 0.2, 1)
    ups = gen_scenario(g, {u: 0 for u in g.vertices}, "intra", 20, seed=2)
    assert len({(u.edge.u, u.edge.v) for u in ups}) == 20
    assert not any(g.has_edge(u.edge.u, u.edge.v) for u in ups)


def test_inter_on_one_block_is_impossible():
    g = gnp(30, 0.2, 1)
    with pytest.raises(InsufficientCandidates):
        gen_scenario(g, {u: 0 for u in g.vertices}, "inter", 1)


@pytest.mark.parametrize("kind", ["inter", "intra"])
def test_scenarios_respect_blocks(kind):
    g = nx_to_graph(nx.gnm_random_graph(500, 1500, seed=4))
    pa = random_partition(g, 8, 1)
    owners = vertex_owners(g, pa)
    ups = gen_scenario(g, pa, kind, 300, seed=5)
    assert len(ups) == 300
    for u in ups:
        assert (owners[u.edge.u] == owners[u.edge.v]) == (kind == "intra")
        assert not g.has_edge(u.edge.u, u.edge.v)
    assert [str(u) for u in ups] == [str(u) for u in gen_scenario(g, pa, kind, 300, seed=5)]


def test_holdout_split_keeps_vertices():
    g = gnp(50, 0.2, 2)
    base, ups = holdout_split(g, 0.1, 0)
    assert base.vertices == g.vertices
    assert len(ups) == round(g.num_edges * 0.1)
    assert base.num_edges + len(ups) == g.num_edges


# -- benchmark loop ---------------------------------------------------------------------


def test_empty_update_file(tmp_path, graph_file):
    (tmp_path / "u.txt").write_text("")
    (rec,) = run_bench(BenchConfig(str(graph_file), scenario="file", updates=str(tmp_path / "u.txt"), repeats=1))
    assert rec.updates == 0 and rec.ut_ms >= 0
    assert rec.ait_ms is None and rec.adt_ms is None
    assert rec.row()["ait_ms"] == ""


@pytest.mark.parametrize("algorithm", ["degree", "kcore", "mce", "partition"])
def test_every_algorithm_passes_its_oracle(graph_file, algorithm):
    cfg = BenchConfig(str(graph_file), algorithm=algorithm, scenario="inter", scenario_size=30, repeats=1,
                      scheduler="deterministic")
    if algorithm == "partition":
        cfg.scenario = "holdout"
    (rec,) = run_bench(cfg)
    assert rec.algorithm == algorithm and rec.pt_ms >= 0 and rec.ut_ms >= 0


def test_deterministic_reruns_repeat_message_counts(graph_file):
    cfg = BenchConfig(str(graph_file), algorithm="kcore", scenario_size=40, repeats=2, scheduler="deterministic")
    a, b = run_bench(cfg), run_bench(cfg)
    key = lambda r: (r.m2w, r.w2m, r.w2w, r.cross_worker, r.mutations, r.seed)
    assert [key(r) for r in a] == [key(r) for r in b]
    assert a[0].seed != a[1].seed


def test_intra_cheaper_than_inter(graph_file):
    counts = {}
    for kind in ("intra", "inter"):
        recs = run_bench(BenchConfig(str(graph_file), partitioner="random", workers=4, scenario=kind,
                                     scenario_size=100, repeats=3, scheduler="deterministic"))
        counts[kind] = [r.cross_worker for r in recs]
    assert all(i < j for i, j in zip(counts["intra"], counts["inter"]))


@pytest.mark.parametrize("algorithm", ["kcore", "partition"])
def test_holdout_mutations(tmp_path, algorithm):
    g = nx_to_graph(nx.gnm_random_graph(1500, 3000, seed=6))
    p = tmp_path / "g.txt"
    write_edge_list(g, p)
    muts = {}
    for strategy in ("incremental", "naive"):
        (rec,) = run_bench(BenchConfig(str(p), algorithm=algorithm, partitioner="hash", strategy=strategy,
                                       scenario="holdout", repeats=1, scheduler="deterministic"))
        muts[strategy] = rec.mutations
    assert muts == {"incremental": 300, "naive": 3000}


def test_csv_appends_with_one_header(tmp_path, graph_file):
    out = tmp_path / "m.csv"
    cfg = BenchConfig(str(graph_file), scenario_size=10, repeats=2)
    write_csv(run_bench(cfg), out)
    write_csv(run_bench(cfg), out)
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(MetricsRecord.columns())
    assert len(lines) == 5


# -- command line ---------------------------------------------------------------------


def test_cli_writes_csv_and_snapshot(tmp_path, graph_file, capsys):
    snap = tmp_path / "snap"
    code = main(["--input", str(graph_file), "--algorithm", "kcore", "--partitioner", "dfep", "--workers", "3",
                 "--scenario", "intra", "--scenario-size", "20", "--repeats", "2", "--deterministic",
                 "--snapshot", str(snap)])
    assert code == 0
    out = rows(capsys.readouterr().out)
    assert len(out) == 2 and out[0]["algorithm"] == "kcore" and out[0]["K"] == "3"
    assert float(out[0]["ait_ms"]) >= 0 and float(out[0]["adt_ms"]) >= 0
    assert sorted(p.name for p in snap.iterdir()) == ["edges.txt", "vertices.txt"]


def test_cli_update_file(tmp_path, graph_file, capsys):
    ups = tmp_path / "u.txt"
    ups.write_text("AV 5000\nA 5000 1\nD 5000 1\nDV 5000\n")
    assert main(["--input", str(graph_file), "--updates", str(ups), "--repeats", "1",
                 "--metrics", str(tmp_path / "m.csv")]) == 0
    (row,) = rows((tmp_path / "m.csv").read_text())
    assert row["scenario"] == "file" and row["updates"] == "4"


def test_cli_reports_bad_stream(tmp_path, graph_file, capsys):
    ups = tmp_path / "u.txt"
    ups.write_text("D 9998 9999\n")
    assert main(["--input", str(graph_file), "--updates", str(ups), "--repeats", "1"]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_inter_with_one_worker_fails(graph_file, capsys):
    assert main(["--input", str(graph_file), "--workers", "1", "--scenario", "inter", "--repeats", "1"]) == 1
    assert "inter" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["--workers", "0"],
        ["--repeats", "0"],
        ["--algorithm", "pagerank"],
        ["--scenario", "file"],
        ["--holdout", "1.5"],
    ],
)
def test_cli_rejects_bad_flags(graph_file, argv):
    with pytest.raises(SystemExit) as err:
        main(["--input", str(graph_file), *argv])
    assert err.value.code == 2


def test_module_entry_point_and_log_env(graph_file):
    env = {"BLADYG_LOG": "INFO", "PATH": ""}
    proc = subprocess.run(
        [sys.executable, "-m", "blockgraph", "--input", str(graph_file), "--scenario-size", "5", "--repeats", "1"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert proc.stdout.startswith("dataset,algorithm")
    assert "INFO" in proc.stderr
