"""Mixed graphs (directed and undirected edges), d-separation and CPDAGs."""

from __future__ import annotations

from collections import deque
from itertools import combinations
from typing import Dict, Iterable, List, NamedTuple, Optional, Set, Tuple

__all__ = [
    "GraphError",
    "CycleError",
    "Edge",
    "Graph",
    "topological_order",
    "is_acyclic",
    "d_separated",
    "unshielded_colliders",
    "pattern_from_dag",
    "apply_meek_rules",
    "skeleton",
]

DIRECTED = "->"
UNDIRECTED = "---"


class GraphError(ValueError):
    pass


class CycleError(GraphError):
    pass


class Edge(NamedTuple):
    a: str
    b: str
    kind: str  # DIRECTED means a -> b

    def __str__(self):
        return f"{self.a} {self.kind} {self.b}"


class Graph:
    """Nodes plus at most one directed (a -> b) or undirected (a --- b) edge
    per unordered pair. Bidirected edges are not representable."""

    def __init__(self, nodes: Iterable = (), edges: Iterable = ()):
        self._nodes: List[str] = []
        self._adj: Dict[str, Set[str]] = {}
        self._directed: Set[Tuple[str, str]] = set()
        for n in nodes:
            self.add_node(n)
        for e in edges:
            a, b, kind = e if len(e) == 3 else (*e, DIRECTED)
            if kind == DIRECTED:
                self.add_directed(a, b)
            elif kind == UNDIRECTED:
                self.add_undirected(a, b)
            else:
                raise GraphError(f"unknown edge kind {kind!r}")

    # construction -----------------------------------------------------------

    def add_node(self, n) -> None:
        n = str(n)
        if not n:
            raise GraphError("node names must be nonempty")
        if n in self._adj:
            raise GraphError(f"duplicate node {n!r}")
        self._nodes.append(n)
        self._adj[n] = set()

    def _check_pair(self, a, b):
        for v in (a, b):
            if v not in self._adj:
                raise GraphError(f"unknown node {v!r}")
        if a == b:
            raise GraphError(f"self-loop on {a!r}")
        if b in self._adj[a]:
            raise GraphError(f"{a!r} and {b!r} are already adjacent")

    def add_directed(self, a, b) -> None:
        self._check_pair(a, b)
        self._adj[a].add(b)
        self._adj[b].add(a)
        self._directed.add((a, b))

    def add_undirected(self, a, b) -> None:
        self._check_pair(a, b)
        self._adj[a].add(b)
        self._adj[b].add(a)

    def remove_edge(self, a, b) -> None:
        if b not in self._adj.get(a, ()):
            raise GraphError(f"no edge between {a!r} and {b!r}")
        self._adj[a].discard(b)
        self._adj[b].discard(a)
        self._directed.discard((a, b))
        self._directed.discard((b, a))

    def orient(self, a, b) -> None:
        """Turn the edge between a and b into a -> b."""
        if b not in self._adj.get(a, ()):
            raise GraphError(f"no edge between {a!r} and {b!r}")
        self._directed.discard((b, a))
        self._directed.add((a, b))

    def copy(self) -> "Graph":
        g = Graph()
        g._nodes = list(self._nodes)
        g._adj = {n: set(s) for n, s in self._adj.items()}
        g._directed = set(self._directed)
        return g

    # queries ----------------------------------------------------------------

    @property
    def nodes(self) -> Tuple[str, ...]:
        return tuple(self._nodes)

    def __contains__(self, n):
        return n in self._adj

    def adjacent(self, a, b) -> bool:
        return b in self._adj[a]

    def adjacents(self, a) -> Set[str]:
        return set(self._adj[a])

    def is_directed(self, a, b) -> bool:
        return (a, b) in self._directed

    def is_undirected(self, a, b) -> bool:
        return b in self._adj[a] and (a, b) not in self._directed and (b, a) not in self._directed

    def parents(self, n) -> Set[str]:
        return {a for a in self._adj[n] if (a, n) in self._directed}

    def children(self, n) -> Set[str]:
        return {b for b in self._adj[n] if (n, b) in self._directed}

    def neighbors(self, n) -> Set[str]:
        """Nodes joined to n by an undirected edge."""
        return {m for m in self._adj[n] if self.is_undirected(n, m)}

    def edges(self) -> List[Edge]:
        """Canonically ordered edge list."""
        out = []
        for a in sorted(self._adj):
            for b in sorted(self._adj[a]):
                if (a, b) in self._directed:
                    out.append(Edge(a, b, DIRECTED))
                elif a < b and (b, a) not in self._directed:
                    out.append(Edge(a, b, UNDIRECTED))
        return sorted(out, key=lambda e: (min(e.a, e.b), max(e.a, e.b)))

    def adjacency_set(self) -> Set[frozenset]:
        return {frozenset((a, b)) for a in self._adj for b in self._adj[a]}

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self._adj.values()) // 2

    def is_dag(self) -> bool:
        return len(self._directed) == self.n_edges and is_acyclic(self)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return set(self._nodes) == set(other._nodes) and self.edges() == other.edges()

    def __hash__(self):
        return hash((frozenset(self._nodes), tuple(self.edges())))

    def __repr__(self):
        body = ", ".join(str(e) for e in self.edges())
        return f"Graph(nodes={list(self._nodes)}, edges=[{body}])"

    # text format ------------------------------------------------------------

    def to_text(self) -> str:
        lines = ["nodes: " + " ".join(self._nodes)]
        lines += [str(e) for e in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        g = None
        pending = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("nodes:"):
                g = cls(line[len("nodes:"):].split())
                continue
            parts = line.split()
            if len(parts) != 3 or parts[1] not in (DIRECTED, UNDIRECTED):
                raise GraphError(f"line {lineno}: cannot parse edge {raw!r}")
            pending.append((parts[0], parts[2], parts[1]))
        if g is None:
            names = []
            for a, b, _ in pending:
                for v in (a, b):
                    if v not in names:
                        names.append(v)
            g = cls(names)
        for a, b, kind in pending:
            for v in (a, b):
                if v not in g:
                    g.add_node(v)
            if kind == DIRECTED:
                g.add_directed(a, b)
            else:
                g.add_undirected(a, b)
        return g


# ---------------------------------------------------------------------------


def topological_order(g: Graph) -> List[str]:
    """Kahn's algorithm over directed edges; ties broken by node order."""
    indeg = {n: len(g.parents(n)) for n in g.nodes}
    rank = {n: i for i, n in enumerate(g.nodes)}
    ready = sorted((n for n in g.nodes if indeg[n] == 0), key=rank.get)
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for c in sorted(g.children(n), key=rank.get):
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
        ready.sort(key=rank.get)
    if len(order) != len(g.nodes):
        raise CycleError("graph contains a directed cycle")
    return order


def is_acyclic(g: Graph) -> bool:
    try:
        topological_order(g)
    except CycleError:
        return False
    return True


def _require_dag(g: Graph):
    if len(g._directed) != g.n_edges:
        raise GraphError("expected a DAG but found undirected edges")
    if not is_acyclic(g):
        raise CycleError("expected a DAG but found a directed cycle")


def d_separated(g: Graph, x, y, z: Iterable = ()) -> bool:
    """Reachability ("Bayes ball") test of x _||_ y | z in a DAG."""
    z = set(z)
    for v in (x, y, *z):
        if v not in g:
            raise GraphError(f"unknown node {v!r}")
    if x == y:
        raise GraphError("x and y must differ")
    if x in z or y in z:
        raise GraphError("x and y must not be in the conditioning set")

    # z and its ancestors: colliders there are open
    anc = set()
    stack = list(z)
    while stack:
        n = stack.pop()
        if n in anc:
            continue
        anc.add(n)
        stack.extend(g.parents(n))

    # states: (node, arrived_from_child) where "up" means we came from a child
    seen = set()
    queue = deque([(x, True)])
    while queue:
        node, up = queue.popleft()
        if (node, up) in seen:
            continue
        seen.add((node, up))
        if node == y:
            return False
        if up:
            if node not in z:
                for p in g.parents(node):
                    queue.append((p, True))
                for c in g.children(node):
                    queue.append((c, False))
        else:
            if node not in z:
                for c in g.children(node):
                    queue.append((c, False))
            if node in anc:
                for p in g.parents(node):
                    queue.append((p, True))
    return True


def unshielded_colliders(g: Graph) -> Set[Tuple[str, str, str]]:
    """Triples (a, b, c) with a -> b <- c, a < c, a and c nonadjacent."""
    out = set()
    for b in g.nodes:
        for a, c in combinations(sorted(g.parents(b)), 2):
            if not g.adjacent(a, c):
                out.add((a, b, c))
    return out


def skeleton(g: Graph) -> Graph:
    out = Graph(g.nodes)
    for e in g.edges():
        out.add_undirected(e.a, e.b)
    return out


def _rule1(p: Graph) -> bool:
    # a -> b --- c, a and c nonadjacent  =>  b -> c
    for b in p.nodes:
        for a in sorted(p.parents(b)):
            for c in sorted(p.neighbors(b)):
                if c != a and not p.adjacent(a, c):
                    p.orient(b, c)
                    return True
    return False


def _rule2(p: Graph) -> bool:
    # a -> b -> c with a --- c  =>  a -> c
    for a in p.nodes:
        for c in sorted(p.neighbors(a)):
            if p.children(a) & p.parents(c):
                p.orient(a, c)
                return True
    return False


def _rule3(p: Graph) -> bool:
    # a --- b -> d, a --- c -> d, b and c nonadjacent, a --- d  =>  a -> d
    for a in p.nodes:
        nbrs = p.neighbors(a)
        for d in sorted(nbrs):
            cands = sorted(p.parents(d) & nbrs)
            for b, c in combinations(cands, 2):
                if not p.adjacent(b, c):
                    p.orient(a, d)
                    return True
    return False


def _rule4(p: Graph) -> bool:
    # a --- b, a --- c -> d -> b, c and b nonadjacent, a adjacent to d  =>  a -> b
    for a in p.nodes:
        nbrs = p.neighbors(a)
        for b in sorted(nbrs):
            for d in sorted(p.parents(b)):
                if not p.adjacent(a, d):
                    continue
                for c in sorted(p.parents(d)):
                    if c in nbrs and c != b and not p.adjacent(c, b):
                        p.orient(a, b)
                        return True
    return False


def apply_meek_rules(p: Graph) -> Graph:
    """Close a pattern under Meek's orientation rules R1-R4.

    Only undirected edges are ever oriented, one at a time, until no rule
    applies. Returns a new graph.
    """
    out = p.copy()
    rules = (_rule1, _rule2, _rule3, _rule4)
    while any(rule(out) for rule in rules):
        pass
    return out


def pattern_from_dag(g: Graph) -> Graph:
    """The CPDAG of the Markov equivalence class of DAG g."""
    _require_dag(g)
    p = skeleton(g)
    for a, b, c in unshielded_colliders(g):
        p.orient(a, b)
        p.orient(c, b)
    return apply_meek_rules(p)
