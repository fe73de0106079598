import hashlib
import json

import numpy as np
import pandas as pd
import pytest

from edge_ann.baseline_tree import BaselineForest
from edge_ann.cli import main
from edge_ann.config import BENCH_COLUMNS, QUERY_COLUMNS
from edge_ann.persist import deserialize
from edge_ann.vecstore import DataGenSpec, gen_synthetic, load_fvecs, write_fvecs


@pytest.fixture
def data_file(tmp_path):
    path = tmp_path / "data.fvecs"
    assert main(["gen", "--out", str(path), "--n", "1500", "--dim", "6", "--clusters", "4", "--seed", "3"]) == 0
    return path


@pytest.fixture
def query_file(tmp_path):
    store = gen_synthetic(DataGenSpec(15, 6, cluster_count=4, seed=99))
    return write_fvecs(tmp_path / "queries.fvecs", store)


def _build(tmp_path, data_file, name, *extra):
    out = tmp_path / name
    status = main(["build", "--input", str(data_file), "--out", str(out), "--trees", "4", "--leaf", "30", "--seed", "5", *extra])
    return status, out


def test_gen_writes_requested_shape(data_file):
    store = load_fvecs(data_file)
    assert (store.n, store.dim) == (1500, 6)


def test_gen_csv(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["gen", "--out", str(out), "--n", "10", "--dim", "3"]) == 0
    assert len(out.read_text().strip().splitlines()) == 10


def test_build_prints_size_report(tmp_path, data_file, capsys):
    status, out = _build(tmp_path, data_file, "idx.eann")
    assert status == 0
    report = json.loads(capsys.readouterr().out)
    assert report["total_bytes"] == out.stat().st_size
    assert report["payload_bytes_per_internal"] == 12


def test_build_defaults():
    from edge_ann.cli import build_parser

    args = build_parser().parse_args(["build", "--input", "a", "--out", "b"])
    assert (args.leaf, args.trees, args.candidates, args.kind) == (50, 25, 8, "edge")
    assert not args.no_embed_vectors


def test_build_baseline_kind(tmp_path, data_file):
    status, out = _build(tmp_path, data_file, "base.eann", "--kind", "baseline")
    assert status == 0
    forest, store = deserialize(out)
    assert isinstance(forest, BaselineForest)
    assert store.n == 1500


def test_build_twice_same_hash(tmp_path, data_file):
    _, a = _build(tmp_path, data_file, "a.eann")
    _, b = _build(tmp_path, data_file, "b.eann")
    assert hashlib.sha256(a.read_bytes()).digest() == hashlib.sha256(b.read_bytes()).digest()


def test_bad_arguments_exit_2(tmp_path):
    assert main(["build", "--input", "x.fvecs"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["bench", "--data", "x", "--budgets", "10,abc"]) == 2


def test_missing_input_exits_1(tmp_path, capsys):
    status = main(["build", "--input", str(tmp_path / "nope.fvecs"), "--out", str(tmp_path / "o.eann")])
    assert status == 1
    assert "edge-ann build" in capsys.readouterr().err


def test_query_csv_and_saturation_matches_oracle(tmp_path, data_file, query_file):
    _, index = _build(tmp_path, data_file, "idx.eann")
    q_out = tmp_path / "q.csv"
    o_out = tmp_path / "o.csv"
    assert main(["query", "--index", str(index), "--queries", str(query_file), "--budget", "1500", "--out", str(q_out)]) == 0
    assert main(["oracle", "--data", str(data_file), "--queries", str(query_file), "--out", str(o_out)]) == 0
    assert q_out.read_bytes() == o_out.read_bytes()
    frame = pd.read_csv(q_out)
    assert list(frame.columns) == QUERY_COLUMNS
    assert len(frame) == 15 * 10


def test_query_is_deterministic(tmp_path, data_file, query_file):
    _, index = _build(tmp_path, data_file, "idx.eann")
    outs = []
    for name in ("r1.csv", "r2.csv"):
        out = tmp_path / name
        main(["query", "--index", str(index), "--queries", str(query_file), "--budget", "100", "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_query_dimension_mismatch_exits_1(tmp_path, data_file, capsys):
    _, index = _build(tmp_path, data_file, "idx.eann")
    wrong = write_fvecs(tmp_path / "wrong.fvecs", gen_synthetic(DataGenSpec(3, 4, seed=1)))
    status = main(["query", "--index", str(index), "--queries", str(wrong)])
    assert status == 1
    assert "dim" in capsys.readouterr().err


def test_query_external_vectors_need_data(tmp_path, data_file, query_file):
    _, index = _build(tmp_path, data_file, "ext.eann", "--no-embed-vectors")
    assert main(["query", "--index", str(index), "--queries", str(query_file)]) == 1
    out = tmp_path / "ext.csv"
    assert main(["query", "--index", str(index), "--queries", str(query_file), "--data", str(data_file), "--out", str(out)]) == 0
    assert len(pd.read_csv(out)) == 150


def test_bench_writes_table(tmp_path, data_file, capsys):
    out = tmp_path / "bench.csv"
    status = main(
        ["bench", "--data", str(data_file), "--holdout", "100", "--budgets", "100,400",
         "--trees", "3", "--leaf", "30", "--out", str(out)]
    )
    assert status == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == BENCH_COLUMNS
    assert frame["budget"].tolist() == [100, 400]
    summary = json.loads(capsys.readouterr().out)
    assert summary["size_edge_bytes"] < summary["size_baseline_bytes"]


def test_bench_rejects_full_holdout(tmp_path, data_file):
    assert main(["bench", "--data", str(data_file), "--holdout", "1500", "--budgets", "100"]) == 1


def test_sweep_leaf_and_scale(tmp_path, data_file, capsys):
    sweep = tmp_path / "sweep.csv"
    assert main(
        ["sweep-leaf", "--data", str(data_file), "--leaves", "32,128", "--budgets", "100",
         "--holdout", "50", "--trees", "2", "--out", str(sweep)]
    ) == 0
    assert pd.read_csv(sweep)["leaf"].tolist() == [32, 128]

    scale = tmp_path / "scale.csv"
    capsys.readouterr()
    assert main(["scale", "--sizes", "400,800", "--dim", "4", "--trees", "1", "--out", str(scale)]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert set(fit) == {"slope", "r2"}
    assert pd.read_csv(scale)["n"].tolist() == [400, 800]


def test_stats_reports_payload_and_prediction(tmp_path, data_file, capsys):
    _, index = _build(tmp_path, data_file, "idx.eann")
    _, base = _build(tmp_path, data_file, "base.eann", "--kind", "baseline")
    capsys.readouterr()

    assert main(["stats", "--index", str(index)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["size"]["payload_bytes_per_internal"] == 12
    assert stats["size"]["total_bytes"] == stats["file_bytes"]
    assert stats["predicted_internal_delta"] < 0.02
    assert len(stats["stats"]["trees"]) == 4

    assert main(["stats", "--index", str(base)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["header"]["kind"] == "baseline"
    assert stats["size"]["payload_bytes_per_internal"] == 4 * 6 + 4


def test_stats_bad_file(tmp_path):
    junk = tmp_path / "junk.eann"
    junk.write_bytes(b"\x00" * 64)
    assert main(["stats", "--index", str(junk)]) == 1
