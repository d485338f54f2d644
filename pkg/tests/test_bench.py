import csv
import io

import numpy as np
import pytest

from ccisearch.bench import (
    CSV_HEADER,
    AdjacencyScore,
    ExperimentReport,
    ReportRow,
    adjacency_score,
    run_linear_gaussian_suite,
    run_nonlinear_suite,
    run_scaling,
    run_table1,
)
from ccisearch.citests import CciTest, FisherZTest, IndependenceDecision, power_basis
from ccisearch.graph import Graph, d_separated
from ccisearch.simulate import random_dag_ordered, simulate_linear_gaussian


def test_adjacency_score_examples():
    truth = Graph(["a", "b", "c"], [("a", "b", "->"), ("b", "c", "->")])
    est = Graph(["a", "b", "c"], [("b", "a", "->"), ("a", "c", "---")])
    s = adjacency_score(est, truth)
    assert s == AdjacencyScore(1, 1, 1)
    assert s.precision == 0.5 and s.recall == 0.5
    empty = adjacency_score(Graph(["a", "b", "c"]), truth)
    assert empty.precision is None and empty.recall == 0.0
    assert adjacency_score(Graph(["a"]), Graph(["a"])).recall is None
    with pytest.raises(ValueError):
        adjacency_score(Graph(["a"]), Graph(["b"]))


def test_adjacency_score_relabel_symmetric():
    rng = np.random.default_rng(0)
    for seed in range(30):
        g = random_dag_ordered(6, 0.4, seed)
        h = random_dag_ordered(6, 0.4, seed + 100)
        perm = rng.permutation(6)
        m = {v: "q" + str(perm[i]) for i, v in enumerate(g.nodes)}
        rel = lambda x: Graph([m[v] for v in x.nodes], [(m[e.a], m[e.b], e.kind) for e in x.edges()])
        assert adjacency_score(rel(g), rel(h)) == adjacency_score(g, h)


def _row(test="t", precision=1.0, recall=0.5, n=100):
    return ReportRow("cfg", test, n, "lg", precision, recall, 1.5, 7)


def test_report_aggregate_and_csv():
    r = ExperimentReport()
    r.add(_row(precision=1.0, recall=0.5))
    r.add(_row(precision=None, recall=0.0))
    r.add(_row(precision=0.5, recall=1.0))
    (agg,) = r.aggregate()
    assert agg["reps"] == 3
    assert agg["precision"] == 0.75 and agg["precision_undefined"] == 1
    assert agg["recall"] == pytest.approx(0.5)
    assert r.mean("precision", test="t") == 0.75
    assert r.mean("precision", test="other") is None
    buf = io.StringIO()
    r._write(buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == CSV_HEADER
    assert rows[2][CSV_HEADER.index("precision")] == "NA"
    assert "1 NA" in r.format_table()


class _LookupOracle:
    """d-separation in whichever true DAG generated the dataset."""

    name = "oracle"

    def __init__(self, by_bytes):
        self.by_bytes = by_bytes

    def independent(self, x, y, z, data=None):
        g = self.by_bytes[data.values.tobytes()]
        sep = d_separated(g, x, y, z)
        return IndependenceDecision(sep, 1.0 if sep else 0.0)


def test_oracle_injection_scores_perfectly():
    sizes, reps, seed = (100, 200), 3, 40
    lookup, row = {}, 0
    for n in sizes:
        for _ in range(reps):
            s = seed + row
            row += 1
            dag = random_dag_ordered(4, 0.5, s)
            data, _ = simulate_linear_gaussian(dag, n, s + 10**9)
            lookup[data.values.tobytes()] = dag
    report = run_linear_gaussian_suite([_LookupOracle(lookup)], sizes, reps, seed)
    assert len(report.rows) == 6
    assert [r.seed for r in report.rows] == list(range(40, 46))
    for r in report.rows:
        assert r.precision in (1.0, None)
        assert r.recall in (1.0, None)


def test_single_rep_bookkeeping():
    seen = []
    report = run_linear_gaussian_suite([FisherZTest(0.01)], (100,), 1, 5, on_row=seen.append)
    assert len(report.rows) == 1 and seen == report.rows
    (agg,) = report.aggregate()
    assert agg["reps"] == 1
    with pytest.raises(ValueError):
        run_linear_gaussian_suite([FisherZTest()], (100,), 0)


def test_suite_reproducible():
    a = run_linear_gaussian_suite([FisherZTest(0.01)], (100, 200), 3, 11)
    b = run_linear_gaussian_suite([FisherZTest(0.01)], (100, 200), 3, 11)
    strip = lambda rep: [(r.test, r.n, r.precision, r.recall, r.seed) for r in rep.rows]
    assert strip(a) == strip(b)


def test_nonlinear_multiplicative_runs():
    report = run_nonlinear_suite([CciTest(0.01, power_basis(3))], (12,), 300, 2, 0)
    assert len(report.rows) == 2
    assert all(r.model_type == "12" for r in report.rows)


def test_table1_small():
    report = run_table1([FisherZTest(0.01)], 1, 0, n_nodes=10, n_edges=8, n_samples=200)
    (row,) = report.rows
    assert row.config == "table1" and row.model_type == "13"


def test_scaling_counts_and_slope():
    t = run_scaling(FisherZTest(), sizes=(100, 200), reps=2, warmup=1)
    assert len(t.median_s) == 2 and np.isfinite(t.slope)
    with pytest.raises(ValueError):
        run_scaling(FisherZTest(), sizes=(200, 100))
    assert "log-log slope" in t.format_table()
