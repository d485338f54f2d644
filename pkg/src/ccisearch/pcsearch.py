"""PC and PC-Stable structure search."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .citests import CiTest, IndependenceDecision
from .dataset import Dataset
from .graph import Graph, apply_meek_rules, d_separated

__all__ = [
    "SearchConfig",
    "SearchResult",
    "SearchError",
    "SepsetMap",
    "OracleTest",
    "oracle_test",
    "adjacency_search",
    "orient_colliders",
    "pc",
    "pc_search",
]

log = logging.getLogger(__name__)

SepsetMap = Dict[FrozenSet[str], Tuple[str, ...]]


class SearchError(RuntimeError):
    pass


@dataclass
class SearchConfig:
    test: CiTest
    max_depth: Optional[int] = None  # None = unlimited
    stable: bool = True
    parallel: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be nonnegative")
        if self.parallel and not self.stable:
            raise ValueError("parallel search requires the stable variant")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass
class SearchResult:
    skeleton: Graph
    sepsets: SepsetMap
    pattern: Optional[Graph] = None
    depth_reached: int = 0
    n_tests: int = 0
    elapsed: float = 0.0
    meta: dict = field(default_factory=dict)


class OracleTest(CiTest):
    """Answers independence queries by d-separation in a known DAG."""

    name = "oracle"

    def __init__(self, dag: Graph):
        self.dag = dag

    def independent(self, x, y, z, data=None) -> IndependenceDecision:
        sep = d_separated(self.dag, x, y, z)
        return IndependenceDecision(sep, 1.0 if sep else 0.0)


def oracle_test(dag: Graph) -> OracleTest:
    return OracleTest(dag)


def _run_test(test, x, y, s, data):
    try:
        return test.independent(x, y, s, data)
    except Exception as exc:
        raise SearchError(f"{test.name} failed on {x} _||_ {y} | {list(s)}: {exc}") from exc


def _pair_decision(test, x, y, adj_x, adj_y, depth, data):
    """First separating subset of size depth for the pair, or None.

    Subsets of adj(x)\\{y} are tried before those of adj(y)\\{x}, each in
    lexicographic order; a subset shared by both is tested once.
    """
    n_tests = 0
    tried = set()
    for pool in (sorted(adj_x - {y}), sorted(adj_y - {x})):
        if len(pool) < depth:
            continue
        for s in combinations(pool, depth):
            if s in tried:
                continue
            tried.add(s)
            n_tests += 1
            if _run_test(test, x, y, s, data).independent:
                return s, n_tests
    return None, n_tests


def adjacency_search(
    variables: Sequence[str], config: SearchConfig, data: Dataset | None
) -> SearchResult:
    """Edge-removal phase of PC.

    With ``config.stable`` the adjacencies used at each depth are frozen when
    the depth begins, so every pair's decision within a depth is independent
    of the others and may be evaluated concurrently.
    """
    start = time.perf_counter()
    variables = sorted(dict.fromkeys(str(v) for v in variables))
    if len(variables) < 2:
        raise ValueError("adjacency search needs at least two variables")
    g = Graph(variables)
    for a, b in combinations(variables, 2):
        g.add_undirected(a, b)
    sepsets: SepsetMap = {}
    n_tests = 0
    depth = 0
    depth_reached = 0
    pool = None
    if config.parallel and config.workers > 1:
        pool = ThreadPoolExecutor(max_workers=config.workers)
    try:
        while config.max_depth is None or depth <= config.max_depth:
            pairs = [
                (x, y)
                for x, y in combinations(variables, 2)
                if g.adjacent(x, y)
                and (len(g.adjacents(x)) - 1 >= depth or len(g.adjacents(y)) - 1 >= depth)
            ]
            if not pairs:
                break
            depth_reached = depth
            if config.stable:
                frozen = {v: g.adjacents(v) for v in variables}
                jobs = [
                    (config.test, x, y, frozen[x], frozen[y], depth, data) for x, y in pairs
                ]
                if pool is not None:
                    results = list(pool.map(lambda j: _pair_decision(*j), jobs))
                else:
                    results = [_pair_decision(*j) for j in jobs]
                # merge at the depth barrier, in pair order
                for (x, y), (sep, k) in zip(pairs, results):
                    n_tests += k
                    if sep is not None:
                        g.remove_edge(x, y)
                        sepsets[frozenset((x, y))] = sep
            else:
                for x, y in pairs:
                    if not g.adjacent(x, y):
                        continue
                    sep, k = _pair_decision(
                        config.test, x, y, g.adjacents(x), g.adjacents(y), depth, data
                    )
                    n_tests += k
                    if sep is not None:
                        g.remove_edge(x, y)
                        sepsets[frozenset((x, y))] = sep
            log.debug("depth %d: %d edges remain, %d tests", depth, g.n_edges, n_tests)
            depth += 1
    finally:
        if pool is not None:
            pool.shutdown()
    return SearchResult(
        skeleton=g,
        sepsets=sepsets,
        depth_reached=depth_reached,
        n_tests=n_tests,
        elapsed=time.perf_counter() - start,
    )


def orient_colliders(skel: Graph, sepsets: SepsetMap) -> Graph:
    """Orient x -> y <- z for unshielded x - y - z when y is not in sepset{x, z}.

    Triples are visited in lexicographic order; an arrowhead that would
    reverse an already oriented edge is skipped, so no bidirected edge forms.
    """
    p = skel.copy()
    for y in sorted(p.nodes):
        for x, z in combinations(sorted(skel.adjacents(y)), 2):
            if skel.adjacent(x, z):
                continue
            sep = sepsets.get(frozenset((x, z)))
            if sep is None or y in sep:
                continue
            for a in (x, z):
                if not p.is_directed(y, a):
                    p.orient(a, y)
    return p


def pc_search(variables: Sequence[str], config: SearchConfig, data: Dataset | None) -> SearchResult:
    result = adjacency_search(variables, config, data)
    start = time.perf_counter()
    result.pattern = apply_meek_rules(orient_colliders(result.skeleton, result.sepsets))
    result.elapsed += time.perf_counter() - start
    return result


def pc(variables: Sequence[str], config: SearchConfig, data: Dataset | None) -> Graph:
    """Run PC (or PC-Stable) and return the estimated pattern."""
    return pc_search(variables, config, data).pattern
