"""Random DAGs and forward sampling from linear-Gaussian and generalized SEMs.

Generalized SEM connection functions. ``s`` is the weighted parent sum
sum_i a_i * parent_i and ``e`` the node's U(-1, 1) disturbance:

====  =====================  ==========================================
type  name                   child
====  =====================  ==========================================
1     linear                 s + e
2     cubic                  s**3 + e
3     square                 s**2 + e
4     tanh                   tanh(2 s) + e
5     reciprocal             1 / (1 + |s|) + e
6     signed-sqrt            sign(s) * sqrt(|s|) + e
7     softplus               log(1 + exp(s)) + e
8     sine                   sin(2 s) + e
9     exp-decay              exp(-|s|) + e
10    step                   floor(2 s) / 2 + e
11    saturating             s / (1 + |s|) + e
12    multiplicative         s * e
13    log-cosh               sum_i a_i * log(cosh(parent_i)) + e
14    mixed                  one of types 1-13 drawn uniformly per node
====  =====================  ==========================================

Root nodes (no parents) are pure noise for every type.

Random numbers are drawn from a single ``numpy.random.Generator`` stream in
a fixed order: edge coefficients (nodes in topological order, parents in
node order), then per-node scale parameters, then for type 14 the
per-node type choices, then the disturbances, one full column per node in
topological order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .dataset import Dataset, write_csv
from .graph import Graph, topological_order

__all__ = [
    "CATALOG",
    "Sem",
    "node_names",
    "random_dag_ordered",
    "random_dag_fixed_edges",
    "simulate_linear_gaussian",
    "simulate_generalized",
    "simulate_table1",
    "write_simulation",
]


def _logcosh(v):
    # log(cosh(v)) without overflow
    a = np.abs(v)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


def _softplus(v):
    return np.logaddexp(0.0, v)


# type -> (name, g(s)); type 12 and 13 are special-cased
CATALOG: Dict[int, Tuple[str, Optional[Callable]]] = {
    1: ("linear", lambda s: s),
    2: ("cubic", lambda s: s**3),
    3: ("square", lambda s: s**2),
    4: ("tanh", lambda s: np.tanh(2.0 * s)),
    5: ("reciprocal", lambda s: 1.0 / (1.0 + np.abs(s))),
    6: ("signed-sqrt", lambda s: np.sign(s) * np.sqrt(np.abs(s))),
    7: ("softplus", _softplus),
    8: ("sine", lambda s: np.sin(2.0 * s)),
    9: ("exp-decay", lambda s: np.exp(-np.abs(s))),
    10: ("step", lambda s: np.floor(2.0 * s) / 2.0),
    11: ("saturating", lambda s: s / (1.0 + np.abs(s))),
    12: ("multiplicative", None),
    13: ("log-cosh", None),
    14: ("mixed", None),
}

MULTIPLICATIVE = 12
LOGCOSH = 13
MIXED = 14


def node_names(n: int) -> List[str]:
    width = len(str(n))
    return [f"X{i + 1:0{width}d}" for i in range(n)]


@dataclass
class Sem:
    """A parameterized structural equation model over a DAG."""

    dag: Graph
    kind: str  # "linear-gaussian" or "generalized"
    coefficients: Dict[Tuple[str, str], float]
    noise_scale: Dict[str, float] = field(default_factory=dict)
    types: Dict[str, int] = field(default_factory=dict)
    noise: Optional[np.ndarray] = field(default=None, repr=False)
    seed: Optional[int] = None

    def parents(self, node) -> List[str]:
        return [v for v in self.dag.nodes if self.dag.is_directed(v, node)]

    def signal(self, node, values: Dict[str, np.ndarray]) -> np.ndarray:
        """The noise-free part of an additive node: g(parents).

        Not defined for multiplicative (type 12) nodes with parents.
        """
        pars = self.parents(node)
        if not pars:
            return 0.0
        if self.kind == "linear-gaussian":
            return sum(self.coefficients[(p, node)] * values[p] for p in pars)
        t = self.types[node]
        if t == LOGCOSH:
            return sum(self.coefficients[(p, node)] * _logcosh(values[p]) for p in pars)
        if t == MULTIPLICATIVE:
            raise ValueError(f"node {node} has multiplicative noise")
        s = sum(self.coefficients[(p, node)] * values[p] for p in pars)
        return CATALOG[t][1](s)

    def evaluate(self, node, values, noise) -> np.ndarray:
        pars = self.parents(node)
        if self.kind == "generalized" and pars and self.types[node] == MULTIPLICATIVE:
            s = sum(self.coefficients[(p, node)] * values[p] for p in pars)
            return s * noise
        return self.signal(node, values) + np.asarray(noise, dtype=float)

    def manifest(self) -> dict:
        return {
            "seed": self.seed,
            "kind": self.kind,
            "nodes": list(self.dag.nodes),
            "edges": [str(e) for e in self.dag.edges()],
            "coefficients": {f"{a}->{b}": c for (a, b), c in sorted(self.coefficients.items())},
            "noise_scale": dict(self.noise_scale),
            "types": {k: v for k, v in self.types.items()},
        }


def random_dag_ordered(n: int, edge_prob: float, seed=None, names=None) -> Graph:
    """Forward edges v_i -> v_j (i < j) each present with probability edge_prob."""
    if n < 1:
        raise ValueError("need at least one node")
    if not 0 <= edge_prob <= 1:
        raise ValueError("edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    names = names or node_names(n)
    g = Graph(names)
    pairs = list(combinations(range(n), 2))
    draws = rng.random(len(pairs))
    for (i, j), u in zip(pairs, draws):
        if u < edge_prob:
            g.add_directed(names[i], names[j])
    return g


def random_dag_fixed_edges(n: int, m: int, seed=None, names=None) -> Graph:
    """Exactly m edges, forward with respect to a random node order."""
    max_edges = n * (n - 1) // 2
    if n < 1:
        raise ValueError("need at least one node")
    if not 0 <= m <= max_edges:
        raise ValueError(f"edge count exceeds maximum {max_edges}")
    rng = np.random.default_rng(seed)
    names = names or node_names(n)
    order = rng.permutation(n)
    pairs = list(combinations(range(n), 2))
    chosen = sorted(rng.choice(len(pairs), size=m, replace=False)) if m else []
    g = Graph(names)
    for k in chosen:
        i, j = pairs[k]
        g.add_directed(names[order[i]], names[order[j]])
    return g


def _topo_parents(dag: Graph):
    order = topological_order(dag)
    return order, {v: [p for p in dag.nodes if dag.is_directed(p, v)] for v in order}


def _sample(sem: Sem, order, n_samples, noise_cols) -> Dataset:
    values: Dict[str, np.ndarray] = {}
    for v in order:
        values[v] = sem.evaluate(v, values, noise_cols[v])
    names = list(sem.dag.nodes)
    sem.noise = np.column_stack([noise_cols[v] for v in names])
    return Dataset(tuple(names), np.column_stack([values[v] for v in names]))


def simulate_linear_gaussian(
    dag: Graph,
    n_samples: int,
    seed=None,
    coefficients: Optional[Dict[Tuple[str, str], float]] = None,
    noise_std: Optional[Dict[str, float]] = None,
) -> Tuple[Dataset, Sem]:
    """Coefficients ~ U(-2, 2), Gaussian noise with std ~ U(0.1, 0.6).

    ``coefficients`` / ``noise_std`` override the drawn values per key (the
    draws still happen so the stream stays aligned).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    order, parents = _topo_parents(dag)
    coefs = {}
    for v in order:
        for p in parents[v]:
            coefs[(p, v)] = float(rng.uniform(-2.0, 2.0))
    stds = {v: float(rng.uniform(0.1, 0.6)) for v in order}
    if coefficients:
        coefs.update(coefficients)
    if noise_std:
        stds.update(noise_std)
    noise_cols = {v: rng.normal(0.0, 1.0, n_samples) * stds[v] for v in order}
    sem = Sem(dag, "linear-gaussian", coefs, noise_scale=stds, seed=seed)
    return _sample(sem, order, n_samples, noise_cols), sem


def simulate_generalized(
    dag: Graph,
    type_index: int,
    n_samples: int,
    seed=None,
    coefficients: Optional[Dict[Tuple[str, str], float]] = None,
) -> Tuple[Dataset, Sem]:
    """Coefficients ~ U(-1, 1), disturbances ~ U(-1, 1), connection functions
    from :data:`CATALOG`."""
    if type_index not in CATALOG:
        raise ValueError(f"model type must be between 1 and 14, got {type_index}")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    order, parents = _topo_parents(dag)
    coefs = {}
    for v in order:
        for p in parents[v]:
            coefs[(p, v)] = float(rng.uniform(-1.0, 1.0))
    if coefficients:
        coefs.update(coefficients)
    if type_index == MIXED:
        types = {v: int(rng.integers(1, 14)) for v in order}
    else:
        types = {v: type_index for v in order}
    noise_cols = {v: rng.uniform(-1.0, 1.0, n_samples) for v in order}
    sem = Sem(dag, "generalized", coefs, types=types, seed=seed)
    return _sample(sem, order, n_samples, noise_cols), sem


def simulate_table1(
    seed=None, n_nodes: int = 200, n_edges: int = 200, n_samples: int = 2000
) -> Tuple[Dataset, Graph]:
    """Sparse log-cosh model: random DAG with fixed edge count, type 13 SEM."""
    ss = np.random.SeedSequence(seed)
    dag_seed, data_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    dag = random_dag_fixed_edges(n_nodes, n_edges, dag_seed)
    data, _ = simulate_generalized(dag, LOGCOSH, n_samples, data_seed)
    return data, dag


def write_simulation(prefix, data: Dataset, sem: Sem, extra: Optional[dict] = None):
    """Write <prefix>.csv, <prefix>.graph.txt and <prefix>.manifest.json."""
    prefix = str(prefix)
    paths = (f"{prefix}.csv", f"{prefix}.graph.txt", f"{prefix}.manifest.json")
    write_csv(data, paths[0])
    with open(paths[1], "w") as fh:
        fh.write(sem.dag.to_text())
    manifest = sem.manifest()
    manifest["n_samples"] = data.n_samples
    if extra:
        manifest.update(extra)
    with open(paths[2], "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
