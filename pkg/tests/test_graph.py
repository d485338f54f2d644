from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dsep_bruteforce, equivalence_class, pattern_bruteforce, random_dag, vstructures
from ccisearch.graph import (
    CycleError,
    Graph,
    GraphError,
    apply_meek_rules,
    d_separated,
    is_acyclic,
    pattern_from_dag,
    skeleton,
)


def dag(*edges, nodes=None):
    names = nodes or sorted({v for e in edges for v in e})
    return Graph(names, [(a, b, "->") for a, b in edges])


def test_graph_invariants():
    g = Graph(["a", "b"])
    g.add_directed("a", "b")
    with pytest.raises(GraphError):
        g.add_undirected("b", "a")
    with pytest.raises(GraphError):
        g.add_directed("a", "a")
    with pytest.raises(GraphError):
        Graph(["a", "a"])
    with pytest.raises(GraphError):
        g.add_directed("a", "zz")


def test_text_roundtrip():
    g = Graph(["c", "a", "b", "lonely"], [("a", "b", "->"), ("b", "c", "---")])
    text = g.to_text()
    assert text == "nodes: c a b lonely\na -> b\nb --- c\n"
    assert Graph.from_text(text) == g


def test_chain_and_collider():
    chain = dag(("x", "m"), ("m", "y"))
    assert d_separated(chain, "x", "y", {"m"})
    assert not d_separated(chain, "x", "y", set())
    coll = dag(("x", "m"), ("y", "m"))
    assert d_separated(coll, "x", "y", set())
    assert not d_separated(coll, "x", "y", {"m"})


def test_descendant_of_collider_opens_path():
    g = dag(("x", "m"), ("y", "m"), ("m", "d"))
    assert not d_separated(g, "x", "y", {"d"})
    assert not dsep_bruteforce(g, "x", "y", {"d"})


def test_d_separated_errors():
    g = dag(("x", "y"))
    with pytest.raises(GraphError):
        d_separated(g, "x", "q", set())
    with pytest.raises(GraphError):
        d_separated(g, "x", "x", set())


def test_d_separation_matches_path_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(60):
        g = random_dag(rng, int(rng.integers(3, 9)), 12)
        nodes = list(g.nodes)
        for _ in range(15):
            x, y = rng.choice(nodes, 2, replace=False)
            rest = [v for v in nodes if v not in (x, y)]
            z = set(v for v in rest if rng.random() < 0.35)
            expected = dsep_bruteforce(g, x, y, z)
            assert d_separated(g, x, y, z) == expected
            assert d_separated(g, y, x, z) == expected


def test_pattern_examples():
    v = dag(("a", "b"), ("c", "b"))
    assert pattern_from_dag(v) == v

    chain = dag(("a", "b"), ("b", "c"))
    p = pattern_from_dag(chain)
    assert p == Graph(["a", "b", "c"], [("a", "b", "---"), ("b", "c", "---")])
    assert p == pattern_bruteforce(chain, by="dsep")

    g = dag(("a", "b"), ("c", "b"), ("b", "d"))
    p = pattern_from_dag(g)
    assert p == g
    assert p == pattern_bruteforce(g, by="dsep")


def test_pattern_rejects_cycles():
    g = Graph(["a", "b", "c"], [("a", "b", "->"), ("b", "c", "->"), ("c", "a", "->")])
    assert not is_acyclic(g)
    with pytest.raises(CycleError):
        pattern_from_dag(g)


def meek_bruteforce(p):
    """Orient an undirected edge iff every acyclic completion of p that adds
    no unshielded collider agrees on its direction."""
    undirected = [(e.a, e.b) for e in p.edges() if e.kind == "---"]
    directed = [(e.a, e.b) for e in p.edges() if e.kind == "->"]
    base = {
        (a, b, c)
        for a, b, c in vstructures(Graph(p.nodes, [(a, b, "->") for a, b in directed]))
        if not p.adjacent(a, c)
    }
    members = []
    for bits in product((0, 1), repeat=len(undirected)):
        g = Graph(p.nodes, [(a, b, "->") for a, b in directed])
        for (a, b), flip in zip(undirected, bits):
            g.add_directed(*((b, a) if flip else (a, b)))
        if is_acyclic(g) and vstructures(g) == base:
            members.append(g)
    out = p.copy()
    for a, b in undirected:
        if all(m.is_directed(a, b) for m in members):
            out.orient(a, b)
        elif all(m.is_directed(b, a) for m in members):
            out.orient(b, a)
    return out


def test_meek_examples():
    r1 = Graph(["a", "b", "c"], [("a", "b", "->"), ("b", "c", "---")])
    out = apply_meek_rules(r1)
    assert out.is_directed("b", "c")
    assert out == meek_bruteforce(r1)
    tri = Graph(["a", "b", "c"], [("a", "b", "---"), ("b", "c", "---"), ("a", "c", "---")])
    assert apply_meek_rules(tri) == tri
    r2 = Graph(["a", "b", "c"], [("a", "b", "->"), ("b", "c", "->"), ("a", "c", "---")])
    out = apply_meek_rules(r2)
    assert out.is_directed("a", "c")
    assert out == meek_bruteforce(r2)


def test_meek_matches_completion_oracle():
    rng = np.random.default_rng(21)
    for _ in range(80):
        g = random_dag(rng, int(rng.integers(3, 7)), 9)
        p = skeleton(g)
        for a, b, c in vstructures(g):
            p.orient(a, b)
            p.orient(c, b)
        assert apply_meek_rules(p) == meek_bruteforce(p)


def test_meek_r3_and_r4():
    # R3: a - b -> d, a - c -> d, a - d, b and c nonadjacent
    g = Graph(
        ["a", "b", "c", "d"],
        [("a", "b", "---"), ("a", "c", "---"), ("a", "d", "---"), ("b", "d", "->"), ("c", "d", "->")],
    )
    assert apply_meek_rules(g).is_directed("a", "d")
    # R4: a - b, a - c -> d -> b, a - d, c and b nonadjacent
    g = Graph(
        ["a", "b", "c", "d"],
        [("a", "b", "---"), ("a", "c", "---"), ("a", "d", "---"), ("c", "d", "->"), ("d", "b", "->")],
    )
    assert apply_meek_rules(g).is_directed("a", "b")


def test_skeleton_examples():
    assert skeleton(dag(("a", "b"))) == Graph(["a", "b"], [("a", "b", "---")])
    assert skeleton(Graph()) == Graph()
    s = skeleton(dag(("a", "b"), ("c", "b")))
    assert s.edges() == Graph(["a", "b", "c"], [("a", "b", "---"), ("b", "c", "---")]).edges()


def _all_small_dags(n_nodes, seed, count):
    rng = np.random.default_rng(seed)
    return [random_dag(rng, n_nodes, 9) for _ in range(count)]


@pytest.mark.parametrize("n_nodes", [3, 4, 5, 6])
def test_pattern_matches_class_enumeration(n_nodes):
    for g in _all_small_dags(n_nodes, n_nodes, 40):
        p = pattern_from_dag(g)
        assert p == pattern_bruteforce(g)
        # equivalent DAGs share the pattern
        for member in equivalence_class(g):
            assert pattern_from_dag(member) == p
        assert skeleton(p) == skeleton(g)


def test_pattern_matches_dsep_class_on_four_nodes():
    for g in _all_small_dags(4, 99, 25):
        assert pattern_from_dag(g) == pattern_bruteforce(g, by="dsep")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 7))
def test_meek_idempotent_and_acyclic(seed, n):
    g = random_dag(np.random.default_rng(seed), n, 12)
    p = pattern_from_dag(g)
    assert apply_meek_rules(p) == p
    # every directed edge of the pattern agrees with g
    for e in p.edges():
        if e.kind == "->":
            assert g.is_directed(e.a, e.b)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_d_separation_symmetry(seed):
    rng = np.random.default_rng(seed)
    g = random_dag(rng, 6, 10)
    for x, y in combinations(g.nodes, 2):
        z = {v for v in g.nodes if v not in (x, y) and rng.random() < 0.3}
        assert d_separated(g, x, y, z) == d_separated(g, y, x, z)
