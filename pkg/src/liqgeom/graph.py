"""Relational substrate: a fixed vertex set with a growing edge multiset.

The inflationary update picks an endpoint with probability proportional to
its degree and joins it to a uniformly chosen distinct vertex.  Degree-
proportional selection is done by drawing a uniform element of the endpoint
list (every edge contributes both of its endpoints), which is exact under
multi-edges and O(1) per step.

Random streams use numpy's PCG64 generator; the generator name is exported
as :data:`RNG_NAME` for run metadata.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

RNG_NAME = "numpy.PCG64"
TOPOLOGIES = ("ring", "random_tree", "complete")


def make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or int(seed) < 0 or int(seed) >= 2**64:
        raise ValidationError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass
class RelationalGraph:
    """Undirected multigraph on vertices ``0 .. n_vertices-1``.

    ``edges`` keeps insertion order; for edges added by an inflation step the
    first element of the pair is the degree-selected endpoint.
    """

    n_vertices: int
    edges: list = field(default_factory=list)
    degree: np.ndarray = None
    _endpoints: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValidationError("n_vertices must be positive")
        existing = list(self.edges)
        self.edges = []
        self._endpoints = []
        self.degree = np.zeros(self.n_vertices, dtype=np.int64)
        for i, j in existing:
            self.add_edge(i, j)

    @property
    def n_edges(self):
        return len(self.edges)

    def add_edge(self, i, j):
        i, j = int(i), int(j)
        if i == j:
            raise ValidationError(f"self-loop at vertex {i}")
        if not (0 <= i < self.n_vertices and 0 <= j < self.n_vertices):
            raise ValidationError(f"edge ({i}, {j}) out of range")
        self.edges.append((i, j))
        self._endpoints.append(i)
        self._endpoints.append(j)
        self.degree[i] += 1
        self.degree[j] += 1

    def copy(self):
        return RelationalGraph(self.n_vertices, list(self.edges))

    def edge_array(self):
        """Edges as an (m, 2) int array."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    def sorted_edges(self):
        """Edges with ``i < j`` in lexicographic order (multi-edges repeated)."""
        return sorted((min(e), max(e)) for e in self.edges)

    def is_connected(self):
        adj = [[] for _ in range(self.n_vertices)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen = np.zeros(self.n_vertices, dtype=bool)
        seen[0] = True
        todo = deque([0])
        while todo:
            v = todo.popleft()
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    todo.append(w)
        return bool(seen.all())


def init_graph(n_vertices, topology="ring", seed=0):
    """Connected seed graph for the inflationary dynamics."""
    n = int(n_vertices)
    if n < 3:
        raise ValidationError("n_vertices must be >= 3")
    g = RelationalGraph(n)
    if topology == "ring":
        for i in range(n):
            g.add_edge(i, (i + 1) % n)
    elif topology == "random_tree":
        # random recursive tree over a random vertex labelling
        rng = make_rng(seed)
        order = rng.permutation(n)
        for k in range(1, n):
            g.add_edge(order[k], order[rng.integers(k)])
    elif topology == "complete":
        for i in range(n):
            for j in range(i + 1, n):
                g.add_edge(i, j)
    else:
        raise ValidationError(f"unknown topology {topology!r}; expected one of {TOPOLOGIES}")
    return g


def inflation_step(g, rng, selection="preferential"):
    """Add one edge to ``g`` in place and return ``g``.

    ``selection="uniform"`` draws the first endpoint uniformly instead of
    degree-proportionally; it exists as a null baseline.
    """
    n = g.n_vertices
    if selection == "preferential":
        i = g._endpoints[int(rng.integers(len(g._endpoints)))]
    elif selection == "uniform":
        i = int(rng.integers(n))
    else:
        raise ValidationError(f"unknown selection rule {selection!r}")
    j = int(rng.integers(n - 1))
    if j >= i:
        j += 1
    g.add_edge(i, j)
    return g


def run_inflation(g, n_steps, seed, selection="preferential"):
    """Apply ``n_steps`` inflation steps to ``g`` in place."""
    if n_steps < 0:
        raise ValidationError("n_steps must be >= 0")
    rng = make_rng(seed)
    for _ in range(int(n_steps)):
        inflation_step(g, rng, selection)
    return g


def gini(values):
    """Gini coefficient of a nonnegative sample."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    total = x.sum()
    if n == 0 or total == 0:
        return 0.0
    ranks = np.arange(1, n + 1)
    return float((2.0 * np.sum(ranks * x) / (n * total)) - (n + 1.0) / n)


def write_edge_list(g, path):
    lines = [f"{i} {j}\n" for i, j in g.sorted_edges()]
    Path(path).write_text("".join(lines))


def read_edge_list(path, n_vertices=None):
    pairs = []
    for raw in Path(path).read_text().splitlines():
        raw = raw.strip()
        if raw:
            a, b = raw.split()
            pairs.append((int(a), int(b)))
    if n_vertices is None:
        n_vertices = 1 + max(max(p) for p in pairs)
    return RelationalGraph(n_vertices, pairs)
