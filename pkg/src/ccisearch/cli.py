"""Command line front end: ``ccisearch {simulate,search,benchmark}``."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import os
import sys
import time

from . import bench
from .citests import make_test, parse_basis
from .dataset import load_csv
from .pcsearch import SearchConfig, pc_search
from .simulate import (
    random_dag_fixed_edges,
    random_dag_ordered,
    simulate_generalized,
    simulate_linear_gaussian,
    write_simulation,
)

TESTS = ("cci", "fisher-z", "rank", "kci")
SUITES = ("linear-gaussian", "nonlinear", "table1", "scaling")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _probability(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1): {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative: {text}")
    return v


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return v


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers: {text}") from None


def _model_type(text):
    if text in ("lg", "linear-gaussian"):
        return "lg"
    v = int(text)
    if not 1 <= v <= 14:
        raise argparse.ArgumentTypeError(f"model type must be lg or 1..14: {text}")
    return v


def _basis(text):
    try:
        return parse_basis(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ccisearch", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def test_flags(sp, multi=False):
        if multi:
            sp.add_argument("--tests", default="fisher-z,rank,cci",
                            help="comma separated list from: cci, fisher-z, rank")
        sp.add_argument("--test", choices=TESTS, default="cci")
        sp.add_argument("--alpha", type=_probability, default=None,
                        help="significance level (search default 0.05, benchmarks 0.01)")
        sp.add_argument("--basis", type=_basis, default=parse_basis("power:7"),
                        help="power:k or hermite:k, k <= 12 (default power:7)")
        sp.add_argument("--early-exit", action="store_true",
                        help="CCI: stop at the first p-value that forces dependence")
        sp.add_argument("--threads", type=_pos_int, default=1)
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("simulate", help="generate a random DAG and data from it")
    s.add_argument("--model-type", type=_model_type, default=13,
                   help="lg (linear-Gaussian) or a connection type 1..14 (default 13)")
    s.add_argument("--n-nodes", type=_pos_int, default=5)
    s.add_argument("--n-edges", type=_nonneg_int, default=None,
                   help="exact edge count; otherwise edges are drawn with --edge-prob")
    s.add_argument("--edge-prob", type=float, default=0.5)
    s.add_argument("--n-samples", type=_pos_int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="sim", help="output prefix (default: sim)")

    s = sub.add_parser("search", help="run PC / PC-Stable on a CSV data file")
    s.add_argument("data")
    test_flags(s)
    s.add_argument("--stable", action="store_true", help="use PC-Stable")
    s.add_argument("--max-depth", type=_nonneg_int, default=None)
    s.add_argument("--out", default=None, help="pattern file (default: <data>.pattern.txt)")

    s = sub.add_parser("benchmark", help="run an experiment suite")
    s.add_argument("--suite", choices=SUITES, required=True)
    test_flags(s, multi=True)
    s.add_argument("--reps", type=_pos_int, default=None)
    s.add_argument("--sizes", type=_int_list, default=None)
    s.add_argument("--model-types", type=_int_list, default=None)
    s.add_argument("--n-nodes", type=_pos_int, default=None)
    s.add_argument("--n-edges", type=_nonneg_int, default=None)
    s.add_argument("--n-samples", type=_pos_int, default=None)
    s.add_argument("--out", default=None, help="CSV report (default: benchmark-<suite>.csv)")
    return p


def _make(name, args, alpha):
    return make_test(name, alpha, args.basis, early_exit=args.early_exit)


def cmd_simulate(args) -> int:
    n = args.n_nodes
    max_edges = n * (n - 1) // 2
    if args.n_edges is not None and args.n_edges > max_edges:
        raise CliError(f"edge count exceeds maximum {max_edges}")
    if not 0 <= args.edge_prob <= 1:
        raise CliError("--edge-prob must lie in [0, 1]")
    if args.n_edges is not None:
        dag = random_dag_fixed_edges(n, args.n_edges, seed=args.seed)
    else:
        dag = random_dag_ordered(n, args.edge_prob, seed=args.seed)
    data_seed = args.seed + 1
    if args.model_type == "lg":
        data, sem = simulate_linear_gaussian(dag, args.n_samples, seed=data_seed)
    else:
        data, sem = simulate_generalized(dag, args.model_type, args.n_samples, seed=data_seed)
    parent = os.path.dirname(os.path.abspath(args.out))
    if not os.path.isdir(parent):
        raise CliError(f"output directory does not exist: {parent}")
    extra = {
        "dag_seed": args.seed,
        "model_type": args.model_type,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    paths = write_simulation(args.out, data, sem, extra)
    for path in paths:
        print(path)
    return 0


def cmd_search(args) -> int:
    if args.test == "kci":
        raise CliError("test 'kci' is out of scope and not implemented")
    if args.threads > 1 and not args.stable:
        raise CliError("--threads > 1 requires --stable")
    if not os.path.exists(args.data):
        raise CliError(f"no such file: {args.data}")
    alpha = 0.05 if args.alpha is None else args.alpha
    test = _make(args.test, args, alpha)
    data = load_csv(args.data)
    config = SearchConfig(
        test,
        max_depth=args.max_depth,
        stable=args.stable,
        parallel=args.threads > 1,
        workers=args.threads,
    )
    result = pc_search(list(data.variables), config, data)
    out = args.out or os.path.splitext(args.data)[0] + ".pattern.txt"
    with open(out, "w") as fh:
        fh.write(result.pattern.to_text())
    summary = {
        "test": test.name,
        "alpha": alpha,
        "stable": args.stable,
        "max_depth": args.max_depth,
        "depth_reached": result.depth_reached,
        "n_tests": result.n_tests,
        "n_edges": result.pattern.n_edges,
    }
    with open(out + ".summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{out}: {result.pattern.n_edges} edges, depth {result.depth_reached}, "
          f"{result.n_tests} tests, {result.elapsed:.2f} s")
    return 0


def _tests_for_benchmark(args, alpha):
    names = [t.strip() for t in args.tests.split(",") if t.strip()]
    for name in names:
        if name == "kci":
            raise CliError("test 'kci' is out of scope and not implemented")
        if name not in TESTS:
            raise CliError(f"unknown test {name!r}")
    return [_make(name, args, alpha) for name in names]


def cmd_benchmark(args) -> int:
    alpha = 0.01 if args.alpha is None else args.alpha
    out = args.out or f"benchmark-{args.suite}.csv"
    parent = os.path.dirname(os.path.abspath(out))
    if not os.path.isdir(parent):
        raise CliError(f"output directory does not exist: {parent}")

    if args.suite == "scaling":
        if args.test == "kci":
            raise CliError("test 'kci' is out of scope and not implemented")
        test = _make(args.test, args, alpha)
        table = bench.run_scaling(
            test,
            sizes=args.sizes or (250, 500, 1000, 2000),
            reps=args.reps or 5,
            seed=args.seed,
        )
        table.write_csv(out)
        print(table.format_table())
        return 0

    tests = _tests_for_benchmark(args, alpha)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(bench.CSV_HEADER)

        def flush(row):
            writer.writerow([bench._fmt(getattr(row, k)) for k in bench.CSV_HEADER])
            fh.flush()

        common = dict(seed=args.seed, workers=args.threads, on_row=flush)
        if args.suite == "linear-gaussian":
            report = bench.run_linear_gaussian_suite(
                tests, sizes=args.sizes or bench.LINEAR_GAUSSIAN_SIZES,
                reps=args.reps or 100, stable=args.threads > 1, **common)
        elif args.suite == "nonlinear":
            report = bench.run_nonlinear_suite(
                tests, type_indices=args.model_types or tuple(range(1, 15)),
                n_samples=args.n_samples or 1000, reps=args.reps or 100,
                n_nodes=args.n_nodes or 5, n_edges=args.n_edges if args.n_edges is not None else 5,
                stable=args.threads > 1, **common)
        else:
            report = bench.run_table1(
                tests, reps=args.reps or 1, n_nodes=args.n_nodes or 200,
                n_edges=args.n_edges if args.n_edges is not None else 200,
                n_samples=args.n_samples or 2000, **common)
    print(report.format_table())
    print(f"wrote {out}")
    return 0


COMMANDS = {"simulate": cmd_simulate, "search": cmd_search, "benchmark": cmd_benchmark}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except CliError as exc:
        print(f"ccisearch: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # one line on stderr, nonzero exit
        msg = " ".join(str(exc).split())
        print(f"ccisearch: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
