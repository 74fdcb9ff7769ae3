"""Graph data model, JSON loading, grid geometry and graph-theoretic distances.

A graph is a set of boxes (nodes with width/height) plus an undirected edge
list.  Layout coordinates live in a separate ``LayoutState`` so the structure
can be shared between solver runs while positions are mutated freely.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path


class GraphError(ValueError):
    """Raised for malformed graph documents."""


@dataclass(frozen=True)
class Node:
    """A rectangular node.  ``w`` and ``h`` must be positive."""

    id: str
    w: float
    h: float
    tags: frozenset = frozenset()


class Graph:
    """Immutable node/edge structure.

    Edges are stored as index pairs ``(u, v)`` with ``u < v``; the node order
    is the document order, which keeps everything downstream deterministic.
    """

    def __init__(self, nodes: Iterable[Node], edges: Iterable[tuple[str, str]]):
        self.nodes: list[Node] = list(nodes)
        self.index: dict[str, int] = {}
        for i, n in enumerate(self.nodes):
            if n.id in self.index:
                raise GraphError(f"duplicate node id {n.id!r}")
            if not (n.w > 0 and n.h > 0):
                raise GraphError(f"node {n.id!r} has nonpositive dimension")
            self.index[n.id] = i

        self.edges: list[tuple[int, int]] = []
        seen = set()
        for a, b in edges:
            if a not in self.index:
                raise GraphError(f"edge endpoint {a!r} does not exist")
            if b not in self.index:
                raise GraphError(f"edge endpoint {b!r} does not exist")
            u, v = self.index[a], self.index[b]
            if u == v:
                raise GraphError(f"self-loop at {a!r}")
            if u > v:
                u, v = v, u
            if (u, v) in seen:
                raise GraphError(f"duplicate edge {a!r}-{b!r}")
            seen.add((u, v))
            self.edges.append((u, v))

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def degree(self, u: int) -> int:
        return sum(1 for a, b in self.edges if u in (a, b))

    def neighbors(self, u: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == u:
                out.append(b)
            elif b == u:
                out.append(a)
        return out

    def widths(self) -> np.ndarray:
        return np.array([n.w for n in self.nodes], dtype=float)

    def heights(self) -> np.ndarray:
        return np.array([n.h for n in self.nodes], dtype=float)

    def to_document(self) -> dict:
        """Canonical JSON-serializable form (inverse of ``load_graph``)."""
        nodes = []
        for n in self.nodes:
            doc: dict = {"id": n.id, "w": n.w, "h": n.h}
            if n.tags:
                doc["tags"] = sorted(n.tags)
            nodes.append(doc)
        return {
            "nodes": nodes,
            "edges": [[self.nodes[u].id, self.nodes[v].id] for u, v in self.edges],
        }


@dataclass
class LayoutState:
    """Per-node center coordinates.  Single-writer; copy before sharing."""

    x: np.ndarray
    y: np.ndarray

    def copy(self) -> "LayoutState":
        return LayoutState(self.x.copy(), self.y.copy())

    def positions(self, g: Graph) -> dict[str, tuple[float, float]]:
        return {n.id: (float(self.x[i]), float(self.y[i])) for i, n in enumerate(g.nodes)}


@dataclass(frozen=True)
class GridSpec:
    """Square grid with spacing ``tau``, anchored at the origin."""

    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("grid spacing must be positive")


@dataclass
class IdealDistances:
    """Symmetric ideal-distance matrix.  Unreachable pairs are ``inf``."""

    d: np.ndarray
    dL: float
    finite: np.ndarray = field(init=False)

    def __post_init__(self):
        self.finite = np.isfinite(self.d)


def load_graph(source: Union[bytes, str, IO], fmt: str = "json") -> Graph:
    """Parse and validate a graph document.

    Schema: ``{"nodes":[{"id","w","h","tags"?}], "edges":[[id,id]]}``.
    Node order in the document is preserved.
    """
    if fmt != "json":
        raise GraphError(f"unsupported format {fmt!r}")
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as e:
        raise GraphError(f"invalid JSON: {e}") from e
    return graph_from_document(doc)


def graph_from_document(doc: dict) -> Graph:
    if not isinstance(doc, dict) or "nodes" not in doc:
        raise GraphError("document must be an object with a 'nodes' list")
    nodes = []
    for nd in doc["nodes"]:
        try:
            nodes.append(
                Node(
                    id=str(nd["id"]),
                    w=float(nd["w"]),
                    h=float(nd["h"]),
                    tags=frozenset(nd.get("tags", ())),
                )
            )
        except (KeyError, TypeError) as e:
            raise GraphError(f"malformed node entry {nd!r}") from e
    edges = []
    for ed in doc.get("edges", []):
        if not isinstance(ed, (list, tuple)) or len(ed) != 2:
            raise GraphError(f"malformed edge entry {ed!r}")
        edges.append((str(ed[0]), str(ed[1])))
    return Graph(nodes, edges)


def shortest_path_distances(g: Graph, dL: float) -> IdealDistances:
    """Unweighted hop counts scaled by the ideal edge length ``dL``.

    Cross-component pairs come out infinite; callers exclude them from
    stress sums (their weight ``1/d**2`` would vanish anyway).
    """
    n = g.n
    if n == 0:
        return IdealDistances(np.zeros((0, 0)), dL)
    rows = [u for u, v in g.edges] + [v for u, v in g.edges]
    cols = [v for u, v in g.edges] + [u for u, v in g.edges]
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    hops = shortest_path(adj, method="D", unweighted=True, directed=False)
    return IdealDistances(hops * dL, dL)


def _closest_grid_coord(p: float, tau: float) -> float:
    lo = math.floor(p / tau) * tau
    hi = lo + tau
    if abs(p - lo) < abs(p - hi):
        return lo
    if abs(p - hi) < abs(p - lo):
        return hi
    # midpoint: favour the multiple closer to the origin, then the
    # nonnegative one
    if abs(lo) < abs(hi):
        return lo
    if abs(hi) < abs(lo):
        return hi
    return max(lo, hi)


def closest_grid_point(p: tuple[float, float], grid: GridSpec) -> tuple[float, float]:
    """Nearest grid point to ``p``; ties go toward the origin."""
    return (_closest_grid_coord(p[0], grid.tau), _closest_grid_coord(p[1], grid.tau))


def closest_grid_coords(vals: np.ndarray, tau: float) -> np.ndarray:
    """Vectorized per-axis nearest grid coordinate with the same tie rule."""
    lo = np.floor(vals / tau) * tau
    hi = lo + tau
    d_lo = np.abs(vals - lo)
    d_hi = np.abs(vals - hi)
    pick_lo = d_lo < d_hi
    tie = d_lo == d_hi
    # on distance ties prefer smaller magnitude, then the nonnegative one
    lo_closer_origin = np.abs(lo) < np.abs(hi)
    pick_lo = pick_lo | (tie & lo_closer_origin)
    return np.where(pick_lo, lo, hi)
