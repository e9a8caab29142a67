"""Undirected labeled graphs, ego-network extraction and hop distances.

Nodes may be any hashable, mutually comparable value.  Organization and
respondent nodes built by the survey layer are :class:`NodeId` instances so
that a respondent called ``"FBI"`` can never collide with the FBI organization.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Iterator

__all__ = [
    "NodeId",
    "Graph",
    "EgoNetwork",
    "UNREACHABLE",
    "org_node",
    "respondent_node",
    "geodesic_distances",
    "ego_network",
    "read_edge_list",
    "write_edge_list",
]


@dataclass(frozen=True, order=True)
class NodeId:
    id: str
    label: str

    def __post_init__(self):
        if not self.label:
            raise ValueError("node label must be nonempty")

    def __str__(self) -> str:
        return self.label


def org_node(label: str) -> NodeId:
    return NodeId(f"org:{label}", label)


def respondent_node(resp_id: str) -> NodeId:
    return NodeId(f"resp:{resp_id}", resp_id)


class _Distance(enum.Enum):
    UNREACHABLE = "unreachable"

    def __repr__(self) -> str:
        return "UNREACHABLE"


#: Marker returned by :func:`geodesic_distances` for nodes with no path.
UNREACHABLE = _Distance.UNREACHABLE


class Graph:
    """Simple undirected graph with optional nonnegative edge weights.

    Mutating methods work in place.  Analysis functions in this package never
    mutate the graphs they are given.
    """

    def __init__(self, nodes: Iterable[Hashable] = (), edges: Iterable[tuple] = ()):
        self._adj: dict[Hashable, set] = {}
        self._weights: dict[frozenset, float] = {}
        for n in nodes:
            self.add_node(n)
        for e in edges:
            self.add_edge(*e)

    def add_node(self, n: Hashable) -> None:
        self._adj.setdefault(n, set())

    def add_edge(self, u: Hashable, v: Hashable, weight: float | None = None) -> None:
        """Add or re-weight the edge ``{u, v}``; missing endpoints are created."""
        if u == v:
            raise ValueError(f"self-loop on {u!r} is not allowed")
        w = 1.0 if weight is None else float(weight)
        if not w >= 0:
            raise ValueError(f"edge weight must be nonnegative, got {weight!r}")
        self.add_node(u)
        self.add_node(v)
        self._adj[u].add(v)
        self._adj[v].add(u)
        self._weights[frozenset((u, v))] = w

    @property
    def nodes(self) -> frozenset:
        return frozenset(self._adj)

    def sorted_nodes(self) -> list:
        return sorted(self._adj)

    def neighbors(self, n: Hashable) -> frozenset:
        try:
            return frozenset(self._adj[n])
        except KeyError:
            raise KeyError(f"node {n!r} not in graph") from None

    def degree(self, n: Hashable) -> int:
        return len(self.neighbors(n))

    def has_edge(self, u: Hashable, v: Hashable) -> bool:
        return u in self._adj and v in self._adj[u]

    def weight(self, u: Hashable, v: Hashable) -> float:
        try:
            return self._weights[frozenset((u, v))]
        except KeyError:
            raise KeyError(f"no edge between {u!r} and {v!r}") from None

    def edges(self) -> Iterator[tuple]:
        """Yield ``(u, v, weight)`` with ``u < v``, in sorted order."""
        pairs = sorted(tuple(sorted(p)) for p in self._weights)
        for u, v in pairs:
            yield u, v, self._weights[frozenset((u, v))]

    def number_of_edges(self) -> int:
        return len(self._weights)

    def subgraph(self, nodes: Iterable[Hashable]) -> "Graph":
        """Induced subgraph on ``nodes`` (nodes absent from the graph are ignored)."""
        keep = {n for n in nodes if n in self._adj}
        sub = Graph(nodes=sorted(keep))
        for key, w in self._weights.items():
            if key <= keep:
                u, v = sorted(key)
                sub.add_edge(u, v, w)
        return sub

    def copy(self) -> "Graph":
        return self.subgraph(self._adj)

    def adjacency(self) -> dict:
        """Plain ``{node: set(neighbors)}`` copy, convenient for algorithms."""
        return {n: set(nbrs) for n, nbrs in self._adj.items()}

    def __contains__(self, n) -> bool:
        return n in self._adj

    def __len__(self) -> int:
        return len(self._adj)

    def __iter__(self):
        return iter(self.sorted_nodes())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._adj.keys() == other._adj.keys() and self._weights == other._weights

    def __repr__(self) -> str:
        return f"Graph(nodes={len(self)}, edges={self.number_of_edges()})"


@dataclass(frozen=True)
class EgoNetwork:
    """An ego, its alters, and the ties among them."""

    ego: Hashable
    graph: Graph

    def __post_init__(self):
        if self.ego not in self.graph:
            raise ValueError(f"ego {self.ego!r} missing from its own network")
        nbrs = self.graph.neighbors(self.ego)
        stray = [n for n in self.graph.nodes if n != self.ego and n not in nbrs]
        if stray:
            raise ValueError(f"nodes not adjacent to ego: {sorted(stray)!r}")

    @property
    def alters(self) -> list:
        return sorted(self.graph.neighbors(self.ego))


def geodesic_distances(g: Graph, source: Hashable) -> dict:
    """Unweighted hop count from ``source`` to every node of ``g``.

    Nodes with no path from ``source`` map to :data:`UNREACHABLE`.
    """
    if source not in g:
        raise KeyError(f"source {source!r} not in graph")
    adj = g._adj
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return {n: dist.get(n, UNREACHABLE) for n in g.sorted_nodes()}


def ego_network(g: Graph, ego: Hashable) -> EgoNetwork:
    """Induced subgraph on ``ego`` and its neighbors."""
    if ego not in g:
        raise KeyError(f"ego {ego!r} not in graph")
    return EgoNetwork(ego, g.subgraph({ego} | g.neighbors(ego)))


def read_edge_list(path: str | Path) -> Graph:
    """Read a tab-separated edge list of organization labels.

    Each line is ``label_u<TAB>label_v[<TAB>weight]``; blank lines and lines
    starting with ``#`` are skipped.  Nodes become organization :class:`NodeId`.
    """
    g = Graph()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3) or not parts[0] or not parts[1]:
                raise ValueError(f"{path}:{lineno}: expected 'u<TAB>v[<TAB>weight]', got {line!r}")
            weight = float(parts[2]) if len(parts) == 3 and parts[2].strip() else None
            g.add_edge(org_node(parts[0]), org_node(parts[1]), weight)
    return g


def write_edge_list(g: Graph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v, w in g.edges():
            fh.write(f"{u}\t{v}\t{w:g}\n")
