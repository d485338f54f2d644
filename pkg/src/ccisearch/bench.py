"""Adjacency precision/recall scoring and the experiment suites.

Per-row seeds follow one rule everywhere: ``row_seed = master_seed + row``,
where ``row`` counts (condition, repetition) cells in grid order. A row's
dataset and graph depend on its seed alone, so any cell can be rerun in
isolation.
"""

from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .citests import CiTest
from .dataset import Dataset
from .graph import Graph, pattern_from_dag
from .pcsearch import SearchConfig, SearchError, pc
from .simulate import (
    random_dag_fixed_edges,
    random_dag_ordered,
    simulate_generalized,
    simulate_linear_gaussian,
    simulate_table1,
)

__all__ = [
    "AdjacencyScore",
    "ReportRow",
    "ExperimentReport",
    "TimingTable",
    "adjacency_score",
    "run_linear_gaussian_suite",
    "run_nonlinear_suite",
    "run_table1",
    "run_scaling",
    "LINEAR_GAUSSIAN_SIZES",
    "CSV_HEADER",
]

LINEAR_GAUSSIAN_SIZES = (100, 250, 400, 550, 700)
CSV_HEADER = ["config", "test", "n", "model_type", "precision", "recall", "elapsed_ms", "seed"]


@dataclass(frozen=True)
class AdjacencyScore:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> Optional[float]:
        d = self.tp + self.fp
        return self.tp / d if d else None

    @property
    def recall(self) -> Optional[float]:
        d = self.tp + self.fn
        return self.tp / d if d else None


def adjacency_score(estimated: Graph, truth: Graph) -> AdjacencyScore:
    """Compare unordered adjacencies; orientation is ignored."""
    if set(estimated.nodes) != set(truth.nodes):
        raise ValueError("estimated and true graphs have different node sets")
    est = estimated.adjacency_set()
    tru = truth.adjacency_set()
    return AdjacencyScore(len(est & tru), len(est - tru), len(tru - est))


@dataclass
class ReportRow:
    config: str
    test: str
    n: int
    model_type: str
    precision: Optional[float]
    recall: Optional[float]
    elapsed_ms: float
    seed: int


def _fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ExperimentReport:
    rows: List[ReportRow] = field(default_factory=list)

    def add(self, row: ReportRow):
        self.rows.append(row)

    def groups(self) -> Dict[tuple, List[ReportRow]]:
        out: Dict[tuple, List[ReportRow]] = {}
        for r in self.rows:
            out.setdefault((r.config, r.test, r.n, r.model_type), []).append(r)
        return out

    def aggregate(self) -> List[dict]:
        """Per-condition means; undefined values are excluded and counted."""
        out = []
        for (config, test, n, mtype), rows in self.groups().items():
            precs = [r.precision for r in rows if r.precision is not None]
            recs = [r.recall for r in rows if r.recall is not None]
            out.append(
                {
                    "config": config,
                    "test": test,
                    "n": n,
                    "model_type": mtype,
                    "reps": len(rows),
                    "precision": statistics.fmean(precs) if precs else None,
                    "precision_undefined": len(rows) - len(precs),
                    "recall": statistics.fmean(recs) if recs else None,
                    "recall_undefined": len(rows) - len(recs),
                    "elapsed_ms": statistics.fmean(r.elapsed_ms for r in rows),
                }
            )
        return out

    def mean(self, metric: str, **where) -> Optional[float]:
        vals = [
            getattr(r, metric)
            for r in self.rows
            if all(getattr(r, k) == v for k, v in where.items())
        ]
        vals = [v for v in vals if v is not None]
        return statistics.fmean(vals) if vals else None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self._write(fh)

    def _write(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])

    def format_table(self) -> str:
        lines = [
            f"{'config':<16} {'test':<9} {'n':>6} {'type':>5} {'reps':>5} "
            f"{'precision':>9} {'recall':>7} {'ms':>9}"
        ]
        for a in self.aggregate():
            prec = "NA" if a["precision"] is None else f"{a['precision']:.3f}"
            rec = "NA" if a["recall"] is None else f"{a['recall']:.3f}"
            if a["precision_undefined"]:
                prec += f" ({a['precision_undefined']} NA)"
            lines.append(
                f"{a['config']:<16} {a['test']:<9} {a['n']:>6} {a['model_type']:>5} "
                f"{a['reps']:>5} {prec:>9} {rec:>7} {a['elapsed_ms']:>9.1f}"
            )
        return "\n".join(lines)


def _score_run(test: CiTest, data: Dataset, truth: Graph, stable: bool, workers: int):
    config = SearchConfig(test, stable=stable, parallel=stable and workers > 1, workers=workers)
    t0 = time.perf_counter()
    est = pc(list(data.variables), config, data)
    ms = (time.perf_counter() - t0) * 1000.0
    return adjacency_score(est, truth), ms


def _run_cell(report, on_row, config_id, tests, data, truth, n, mtype, seed, stable, workers):
    for test in tests:
        try:
            score, ms = _score_run(test, data, truth, stable, workers)
        except SearchError as exc:
            raise SearchError(f"[{config_id} n={n} type={mtype} seed={seed} test={test.name}] {exc}") from exc
        row = ReportRow(config_id, test.name, n, mtype, score.precision, score.recall, ms, seed)
        report.add(row)
        if on_row is not None:
            on_row(row)


def run_linear_gaussian_suite(
    tests: Sequence[CiTest],
    sizes: Sequence[int] = LINEAR_GAUSSIAN_SIZES,
    reps: int = 100,
    seed: int = 0,
    n_vars: int = 4,
    edge_prob: float = 0.5,
    stable: bool = False,
    workers: int = 1,
    on_row: Optional[Callable[[ReportRow], None]] = None,
) -> ExperimentReport:
    """Random 4-variable DAGs (edge prob 0.5), linear-Gaussian data, PC."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    report = ExperimentReport()
    row = 0
    for n in sizes:
        for _ in range(reps):
            s = seed + row
            row += 1
            dag = random_dag_ordered(n_vars, edge_prob, seed=s)
            data, _ = simulate_linear_gaussian(dag, n, seed=s + 10**9)
            truth = pattern_from_dag(dag)
            _run_cell(report, on_row, "linear-gaussian", tests, data, truth, n, "lg", s, stable, workers)
    return report


def run_nonlinear_suite(
    tests: Sequence[CiTest],
    type_indices: Sequence[int] = tuple(range(1, 15)),
    n_samples: int = 1000,
    reps: int = 100,
    seed: int = 0,
    n_nodes: int = 5,
    n_edges: int = 5,
    stable: bool = False,
    workers: int = 1,
    on_row: Optional[Callable[[ReportRow], None]] = None,
) -> ExperimentReport:
    """Random 5-node/5-edge DAGs with generalized SEM data, PC."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    report = ExperimentReport()
    row = 0
    for t in type_indices:
        for _ in range(reps):
            s = seed + row
            row += 1
            dag = random_dag_fixed_edges(n_nodes, n_edges, seed=s)
            data, _ = simulate_generalized(dag, t, n_samples, seed=s + 10**9)
            truth = pattern_from_dag(dag)
            _run_cell(report, on_row, "nonlinear", tests, data, truth, n_samples, str(t), s, stable, workers)
    return report


def run_table1(
    tests: Sequence[CiTest],
    reps: int = 1,
    seed: int = 0,
    n_nodes: int = 200,
    n_edges: int = 200,
    n_samples: int = 2000,
    workers: int = 1,
    on_row: Optional[Callable[[ReportRow], None]] = None,
) -> ExperimentReport:
    """Sparse log-cosh model searched with PC-Stable."""
    report = ExperimentReport()
    for rep in range(reps):
        s = seed + rep
        data, dag = simulate_table1(s, n_nodes, n_edges, n_samples)
        truth = pattern_from_dag(dag)
        _run_cell(report, on_row, "table1", tests, data, truth, n_samples, "13", s, True, workers)
    return report


@dataclass
class TimingTable:
    test: str
    sizes: List[int]
    mean_s: List[float]
    median_s: List[float]
    slope: float

    def format_table(self) -> str:
        lines = [f"{'n':>7} {'mean_ms':>10} {'median_ms':>10}"]
        for n, m, md in zip(self.sizes, self.mean_s, self.median_s):
            lines.append(f"{n:>7} {m * 1000:>10.3f} {md * 1000:>10.3f}")
        lines.append(f"log-log slope ({self.test}): {self.slope:.3f}")
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["test", "n", "mean_ms", "median_ms"])
            for n, m, md in zip(self.sizes, self.mean_s, self.median_s):
                w.writerow([self.test, n, repr(m * 1000), repr(md * 1000)])


def run_scaling(
    test: CiTest,
    sizes: Sequence[int] = (250, 500, 1000, 2000),
    cond_set_size: int = 1,
    reps: int = 5,
    seed: int = 0,
    warmup: int = 3,
) -> TimingTable:
    """Wall-clock of single CI calls on fresh data at each sample size.

    Each timed call uses a fresh dataset object so per-dataset caches never
    hit. The slope is a least-squares fit of log(median time) on log(n).
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    n_vars = 2 + cond_set_size
    means, medians = [], []
    for k, n in enumerate(sizes):
        rng = np.random.default_rng(seed + k)
        names = tuple(f"V{i}" for i in range(n_vars))
        pool = [
            Dataset(names, rng.uniform(-1, 1, (n, n_vars))) for _ in range(warmup + reps)
        ]
        z = names[2:]
        times = []
        for i, data in enumerate(pool):
            t0 = time.perf_counter()
            test.independent(names[0], names[1], z, data)
            dt = time.perf_counter() - t0
            if i >= warmup:
                times.append(dt)
        means.append(statistics.fmean(times))
        medians.append(statistics.median(times))
    if len(sizes) >= 2:
        slope = float(np.polyfit(np.log(sizes), np.log(medians), 1)[0])
    else:
        slope = math.nan
    return TimingTable(getattr(test, "name", "test"), sizes, means, medians, slope)
