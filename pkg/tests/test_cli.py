import csv
import json

import numpy as np
import pytest

from consensus_cgl import io as _io
from consensus_cgl.cli import ingest_matrix_csv, ingest_roll_call, main
from consensus_cgl.dynamics import FilterSpec, SnapshotSet, analytic_sample_covariance
from consensus_cgl.errors import ParseError, SchemaError
from consensus_cgl.graphs import laplacian_of, read_graph_json, validate_cgl


def run(*argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


@pytest.fixture
def generated(tmp_path):
    out = tmp_path / "data"
    assert run("generate", "--model", "ER", "--param", "n=12", "--param", "p=0.3",
               "--M", 500, "--seed", 3, "--out", out) == 0
    return out


def test_generate_round_trip(generated):
    L = _io.read_matrix_csv(generated / "L.csv")
    np.testing.assert_array_equal(np.asarray(laplacian_of(read_graph_json(generated / "graph.json"))), L)
    snap = SnapshotSet.read(generated / "snapshots.csv")
    assert snap.signals.shape == (500, 12)
    assert "rates" in json.loads((generated / "filter.json").read_text())["filter"]


def test_generate_dry_run_writes_nothing(tmp_path, capsys):
    out = tmp_path / "never"
    assert run("generate", "--model", "BarabasiAlbert", "--param", "n=10", "--param", "m=2", "--dry-run", "--out", out) == 0
    assert json.loads(capsys.readouterr().out)["graph"]["model"] == "BarabasiAlbert"
    assert not out.exists()


def test_generate_unknown_model_is_usage_error(tmp_path):
    assert run("generate", "--model", "Nope", "--out", tmp_path) == 2


def test_missing_file_exits_io(tmp_path):
    assert run("infer", "--method", "orderedspectemp", "--snapshots", tmp_path / "absent.csv",
               "--out", tmp_path / "o") == 3


def test_infer_inverse_filter_on_exact_covariance(generated, tmp_path):
    L = _io.read_matrix_csv(generated / "L.csv")
    rates = json.loads((generated / "filter.json").read_text())["filter"]["rates"]
    cov = analytic_sample_covariance(L, FilterSpec(tuple(rates)))
    _io.write_matrix_csv(tmp_path / "cov.csv", cov.matrix)
    out = tmp_path / "sol"
    assert run("infer", "--method", "inversefilter", "--covariance", tmp_path / "cov.csv",
               "--rates", ",".join(repr(r) for r in rates), "--truth", generated / "L.csv", "--out", out) == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["rel_error"] <= 1e-8
    np.testing.assert_allclose(_io.read_matrix_csv(out / "L_hat.csv"), L, atol=1e-8)


def test_infer_nearest_emits_valid_cgl(generated, tmp_path):
    out = tmp_path / "sol"
    assert run("infer", "--method", "nearestcgl", "--snapshots", generated / "snapshots.csv",
               "--config", _filter_config(generated, tmp_path), "--truth", generated / "graph.json",
               "--out", out) == 0
    L_star = _io.read_matrix_csv(out / "L_star.csv")
    assert validate_cgl(L_star, 1e-6).passed
    diag = json.loads((out / "diagnostics.json").read_text())
    assert 0 <= diag["report"]["f_score"] <= 1
    with open(out / "edges.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["i", "j", "weight"]


def _filter_config(generated, tmp_path):
    rates = json.loads((generated / "filter.json").read_text())["filter"]["rates"]
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"filter": {"rates": rates}}))
    return path


def test_infer_ordered_records_default_eta(generated, tmp_path):
    out = tmp_path / "ord"
    assert run("infer", "--method", "orderedspectemp", "--snapshots", generated / "snapshots.csv",
               "--epsilon-schedule", "Binary:6", "--out", out) == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["eta_default_used"] is True
    assert validate_cgl(_io.read_matrix_csv(out / "L_star.csv"), 1e-6).passed


def test_infer_baseline_requires_flag(generated, tmp_path):
    assert run("infer", "--method", "spectemp-leigvec", "--snapshots", generated / "snapshots.csv",
               "--out", tmp_path / "b") == 2


def test_evaluate_prints_report(generated, capsys):
    assert run("evaluate", "--estimate", generated / "L.csv", "--truth", generated / "graph.json") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["rel_error"] == 0.0 and rep["f_score"] == 1.0 and rep["valid_cgl"] is True


# --- ingestion ------------------------------------------------------------

def test_ingest_matrix_csv(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3,4\n5,6\n")
    snap = ingest_matrix_csv(p)
    assert (snap.M, snap.N) == (3, 2)
    assert run("ingest", "--format", "MatrixCsv", p, "--out", tmp_path / "s.csv") == 0
    np.testing.assert_array_equal(SnapshotSet.read(tmp_path / "s.csv").signals, snap.signals)


def test_ingest_ragged_names_line(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(ParseError, match="line 2"):
        ingest_matrix_csv(p)
    assert run("ingest", "--format", "MatrixCsv", p, "--out", tmp_path / "s.csv") == 3


def test_ingest_roll_call(tmp_path):
    p = tmp_path / "votes.csv"
    p.write_text("AL,AL,AK,AK\nYea,Yea,Nay,Not Voting\nNay,Yea,Yea,Yea\n")
    snap = ingest_roll_call(p)
    np.testing.assert_array_equal(snap.signals, [[2, -1], [0, 2]])
    assert snap.provenance["nodes"] == ["AL", "AK"]


def test_ingest_roll_call_bad_row(tmp_path):
    p = tmp_path / "votes.csv"
    p.write_text("AL,AL\nYea\n")
    with pytest.raises(SchemaError, match="line 2"):
        ingest_roll_call(p)


# --- benchmark ------------------------------------------------------------

def _spec(tmp_path, **kw):
    d = {"name": "t", "graph": {"model": "ER", "n": 8, "p": 0.4}, "M": [80, 800], "seeds": [0, 1],
         "methods": ["inversefilter", "nearestcgl"], "solver": {"beta": 0.01}, **kw}
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(d))
    return p


def _rows_without_time(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r.pop("wall_ms")
    return rows


def test_benchmark_deterministic(tmp_path):
    spec = _spec(tmp_path)
    assert run("benchmark", spec, "--jobs", 1, "--out", tmp_path / "a") == 0
    assert run("benchmark", spec, "--jobs", 2, "--out", tmp_path / "b") == 0
    a, b = _rows_without_time(tmp_path / "a/results.csv"), _rows_without_time(tmp_path / "b/results.csv")
    assert a == b and len(a) == 8
    assert all(r["status"] == "ok" for r in a)
    summary = json.loads((tmp_path / "a/summary.json").read_text())
    assert summary


def test_benchmark_empty_grid_is_usage_error(tmp_path):
    assert run("benchmark", _spec(tmp_path, M=[]), "--out", tmp_path / "x") == 2


def test_benchmark_baseline_requires_flag(tmp_path):
    spec = _spec(tmp_path, methods=["structglasso"])
    assert run("benchmark", spec, "--out", tmp_path / "x") == 2
