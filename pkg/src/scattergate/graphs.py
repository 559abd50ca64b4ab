"""Scattering graphs.

A scattering graph is a finite, simple, undirected graph with an ordered list
of *terminals*: distinguished vertices where semi-infinite rails attach.  In
the scattering formalism the rails are handled analytically; for wave-packet
simulations `attach_rails` materialises finite rails as extra path vertices.

Graph files are JSON with three fields::

    {"vertices": 8, "edges": [[0, 3], [1, 4], ...], "terminals": [0, 1, 2]}

Vertices are 0-based.  Out-of-range indices, self-loops, duplicate edges and
duplicate terminals are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import scipy.sparse as sp

from .errors import GraphFormatError

__all__ = [
    "ScatterGraph",
    "RailedGraph",
    "build_path",
    "build_ring",
    "build_star",
    "build_momentum_switch",
    "attach_rails",
    "load_graph",
    "save_graph",
]

SWITCH_DATA_FILE = "momentum_switch.json"


@dataclass(frozen=True)
class ScatterGraph:
    """Simple undirected graph with an ordered terminal list.

    Parameters
    ----------
    num_vertices : int
        Number of vertices; vertices are labelled 0 .. num_vertices-1.
    edges : tuple of (int, int)
        Undirected edges, stored canonically as (u, v) with u < v.
    terminals : tuple of int
        Ordered distinguished vertices.  Rail j (0-based) attaches to
        terminals[j]; reports label rails 1-based to match common usage.
    """

    num_vertices: int
    edges: tuple = ()
    terminals: tuple = ()

    def __post_init__(self):
        n = self.num_vertices
        if not isinstance(n, int) or n <= 0:
            raise GraphFormatError(f"vertices must be a positive integer, got {n!r}")
        canon = []
        seen = set()
        for e in self.edges:
            try:
                u, v = int(e[0]), int(e[1])
            except (TypeError, ValueError, IndexError):
                raise GraphFormatError(f"edge {e!r} is not a pair of integers") from None
            if u == v:
                raise GraphFormatError(f"self-loop on vertex {u} is not allowed")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge {e!r} out of range for {n} vertices")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphFormatError(f"duplicate edge {key}")
            seen.add(key)
            canon.append(key)
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        terms = []
        for t in self.terminals:
            t = int(t)
            if not 0 <= t < n:
                raise GraphFormatError(f"terminal {t} out of range for {n} vertices")
            if t in terms:
                raise GraphFormatError(f"duplicate terminal {t}")
            terms.append(t)
        object.__setattr__(self, "terminals", tuple(terms))

    @property
    def num_terminals(self):
        return len(self.terminals)

    def adjacency(self):
        """Symmetric 0/1 adjacency matrix in CSR format."""
        n = self.num_vertices
        if not self.edges:
            return sp.csr_matrix((n, n))
        u, v = np.array(self.edges).T
        ones = np.ones(len(self.edges))
        a = sp.coo_matrix((ones, (u, v)), shape=(n, n))
        return (a + a.T).tocsr()

    def neighbors(self, v):
        return tuple(int(x) for x in self.adjacency()[v].indices)

    def degree(self, v):
        return len(self.neighbors(v))


@dataclass(frozen=True)
class RailedGraph:
    """A core scattering graph with finite rails attached to every terminal.

    Rail j occupies vertex indices
    ``core.num_vertices + j*rail_length + d`` for d = 0 .. rail_length-1,
    ordered outward: d = 0 is the rail site adjacent to the terminal and
    d = rail_length-1 is the open end.  `graph` is the combined graph (same
    terminal list as the core, indices unchanged).
    """

    core: ScatterGraph
    rail_length: int
    graph: ScatterGraph = field(compare=False)

    def rail_sites(self, j):
        """Vertex indices of rail j, ordered outward from the terminal."""
        if not 0 <= j < self.core.num_terminals:
            raise IndexError(f"rail {j} does not exist")
        start = self.core.num_vertices + j * self.rail_length
        return np.arange(start, start + self.rail_length)

    @property
    def num_vertices(self):
        return self.graph.num_vertices


def attach_rails(core, rail_length):
    """Attach a finite rail (path of `rail_length` new vertices) to each terminal."""
    if rail_length < 1:
        raise GraphFormatError("rail_length must be >= 1")
    n = core.num_vertices
    edges = list(core.edges)
    for j, t in enumerate(core.terminals):
        start = n + j * rail_length
        edges.append((t, start))
        for d in range(rail_length - 1):
            edges.append((start + d, start + d + 1))
    combined = ScatterGraph(
        num_vertices=n + rail_length * core.num_terminals,
        edges=tuple(edges),
        terminals=core.terminals,
    )
    return RailedGraph(core=core, rail_length=rail_length, graph=combined)


def build_path(n, terminals=None):
    """Path graph on n vertices (0-1-2-...-n-1); default terminals are the ends."""
    if n < 1:
        raise GraphFormatError("path needs at least one vertex")
    if terminals is None:
        terminals = (0, n - 1) if n > 1 else (0,)
    edges = tuple((i, i + 1) for i in range(n - 1))
    return ScatterGraph(num_vertices=n, edges=edges, terminals=tuple(terminals))


def build_ring(n, terminals=()):
    """Cycle graph on n >= 3 vertices."""
    if n < 3:
        raise GraphFormatError("ring needs at least three vertices")
    edges = tuple((i, (i + 1) % n) for i in range(n))
    return ScatterGraph(num_vertices=n, edges=edges, terminals=tuple(terminals))


def build_star(n_leaves):
    """Star with a centre (vertex 0) and n_leaves leaf terminals."""
    if n_leaves < 1:
        raise GraphFormatError("star needs at least one leaf")
    edges = tuple((0, i) for i in range(1, n_leaves + 1))
    return ScatterGraph(num_vertices=n_leaves + 1, edges=edges,
                        terminals=tuple(range(1, n_leaves + 1)))


def _graph_from_dict(data, source="graph data"):
    if not isinstance(data, dict):
        raise GraphFormatError(f"{source}: top level must be an object")
    missing = {"vertices", "edges", "terminals"} - set(data)
    if missing:
        raise GraphFormatError(f"{source}: missing fields {sorted(missing)}")
    vertices = data["vertices"]
    if isinstance(vertices, bool) or not isinstance(vertices, int):
        raise GraphFormatError(f"{source}: 'vertices' must be an integer")
    if not isinstance(data["edges"], list) or not isinstance(data["terminals"], list):
        raise GraphFormatError(f"{source}: 'edges' and 'terminals' must be lists")
    return ScatterGraph(
        num_vertices=vertices,
        edges=tuple(tuple(e) if isinstance(e, (list, tuple)) else e for e in data["edges"]),
        terminals=tuple(data["terminals"]),
    )


def load_graph(path):
    """Load and validate a graph file (JSON, see module docstring)."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise GraphFormatError(f"cannot read graph file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"graph file {path} is not valid JSON: {exc}") from exc
    return _graph_from_dict(data, source=str(path))


def save_graph(graph, path):
    """Write a graph file readable by `load_graph`."""
    data = {
        "vertices": graph.num_vertices,
        "edges": [list(e) for e in graph.edges],
        "terminals": list(graph.terminals),
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def build_momentum_switch():
    """The bundled three-terminal momentum switch.

    Routes |k| = pi/4 between terminals 1 and 3 and |k| = pi/2 between
    terminals 2 and 3 with perfect transmission (rail numbering 1-based).
    The adjacency ships as package data and is certified behaviourally by
    `scattering1p.verify_switch`; tests re-certify it on every run.
    """
    ref = resources.files("scattergate.data").joinpath(SWITCH_DATA_FILE)
    data = json.loads(ref.read_text())
    return _graph_from_dict(data, source=SWITCH_DATA_FILE)
