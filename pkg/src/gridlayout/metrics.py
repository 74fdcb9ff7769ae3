"""Aesthetic metrics for judging how grid-like a drawing is."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from gridlayout.graph import Graph, GridSpec, IdealDistances, LayoutState, closest_grid_point
from gridlayout.stress import p_stress


@dataclass(frozen=True)
class MFunction:
    """M-shaped edge-angle penalty over [0, pi/2].

    Zero for exactly horizontal/vertical edges, a mild penalty ``p`` at 45
    degrees, and the harshest penalty ``P`` for edges that are almost but not
    quite axis-aligned (at ``delta`` off either axis), linear in between.
    """

    p: float = 10.0
    P: float = 100.0
    delta: float = math.pi / 36.0

    def __call__(self, theta: float) -> float:
        xs = [0.0, self.delta, math.pi / 4.0, math.pi / 2.0 - self.delta, math.pi / 2.0]
        ys = [0.0, self.P, self.p, self.P, 0.0]
        return float(np.interp(theta, xs, ys))


def edge_angle(s: LayoutState, u: int, v: int) -> float:
    """Absolute inclination of the edge, in [0, pi/2]; vertical maps to pi/2."""
    dx = abs(float(s.x[u] - s.x[v]))
    dy = abs(float(s.y[u] - s.y[v]))
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return math.atan2(dy, dx)


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _open_segments_intersect(p1, p2, p3, p4) -> bool:
    """Whether the open segments p1-p2 and p3-p4 share an interior point."""
    d1 = _orient(*p3, *p4, *p1)
    d2 = _orient(*p3, *p4, *p2)
    d3 = _orient(*p1, *p2, *p3)
    d4 = _orient(*p1, *p2, *p4)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    # collinear configurations: overlap of interiors along the common line
    if d1 == 0 and d2 == 0 and d3 == 0 and d4 == 0:
        if abs(p2[0] - p1[0]) >= abs(p2[1] - p1[1]):
            a_lo, a_hi = sorted((p1[0], p2[0]))
            b_lo, b_hi = sorted((p3[0], p4[0]))
        else:
            a_lo, a_hi = sorted((p1[1], p2[1]))
            b_lo, b_hi = sorted((p3[1], p4[1]))
        return min(a_hi, b_hi) > max(a_lo, b_lo)
    return False


def edge_crossings(g: Graph, s: LayoutState) -> int:
    """Count of edge pairs (no shared endpoint) whose open segments intersect."""
    count = 0
    pts = [(float(s.x[i]), float(s.y[i])) for i in range(g.n)]
    m = len(g.edges)
    for i in range(m):
        a, b = g.edges[i]
        for j in range(i + 1, m):
            c, dd = g.edges[j]
            if a in (c, dd) or b in (c, dd):
                continue
            if _open_segments_intersect(pts[a], pts[b], pts[c], pts[dd]):
                count += 1
    return count


def _segment_hits_box(p1, p2, cx, cy, w, h) -> bool:
    """Closed-box vs segment intersection (tangency counts); slab clipping."""
    x0, x1 = cx - w / 2.0, cx + w / 2.0
    y0, y1 = cy - h / 2.0, cy + h / 2.0
    t_lo, t_hi = 0.0, 1.0
    dx = p2[0] - p1[0]
    dy = p2[1] - p1[1]
    for p, q_lo, q_hi, dp in ((p1[0], x0, x1, dx), (p1[1], y0, y1, dy)):
        if dp == 0.0:
            if p < q_lo or p > q_hi:
                return False
            continue
        ta = (q_lo - p) / dp
        tb = (q_hi - p) / dp
        if ta > tb:
            ta, tb = tb, ta
        t_lo = max(t_lo, ta)
        t_hi = min(t_hi, tb)
        if t_lo > t_hi:
            return False
    return True


def edge_node_overlaps(g: Graph, s: LayoutState) -> int:
    """(edge, node) pairs where a non-endpoint node box meets the segment."""
    count = 0
    pts = [(float(s.x[i]), float(s.y[i])) for i in range(g.n)]
    for u, v in g.edges:
        for k, node in enumerate(g.nodes):
            if k in (u, v):
                continue
            if _segment_hits_box(pts[u], pts[v], pts[k][0], pts[k][1], node.w, node.h):
                count += 1
    return count


def angular_resolution(g: Graph, s: LayoutState) -> float:
    """Deviation of incident-edge angles from the uniform spacing 2pi/deg(v),
    summed over all unordered pairs of incident edges at every node."""
    total = 0.0
    incident: dict[int, list[int]] = {i: [] for i in range(g.n)}
    for u, v in g.edges:
        incident[u].append(v)
        incident[v].append(u)
    for v, nbrs in incident.items():
        deg = len(nbrs)
        if deg < 2:
            continue
        ideal = 2.0 * math.pi / deg
        dirs = []
        for w in nbrs:
            dx = float(s.x[w] - s.x[v])
            dy = float(s.y[w] - s.y[v])
            norm = math.hypot(dx, dy)
            if norm == 0.0:
                continue
            dirs.append((dx / norm, dy / norm))
        for i in range(len(dirs)):
            for j in range(i + 1, len(dirs)):
                dot = max(-1.0, min(1.0, dirs[i][0] * dirs[j][0] + dirs[i][1] * dirs[j][1]))
                theta = math.acos(dot)
                total += abs(ideal - theta)
    return total


def obliqueness(g: Graph, s: LayoutState, m: MFunction = MFunction()) -> float:
    """Mean M-penalty per edge; zero for an edgeless graph."""
    if not g.edges:
        return 0.0
    return sum(m(edge_angle(s, u, v)) for u, v in g.edges) / len(g.edges)


def grid_placement(g: Graph, s: LayoutState, grid: GridSpec) -> float:
    """Mean distance from node centres to their nearest grid point."""
    if g.n == 0:
        return 0.0
    total = 0.0
    for i in range(g.n):
        gx, gy = closest_grid_point((float(s.x[i]), float(s.y[i])), grid)
        total += math.hypot(s.x[i] - gx, s.y[i] - gy)
    return total / g.n


@dataclass
class MetricsReport:
    p_stress: float
    crossings: int
    edge_node_overlaps: int
    angular_resolution: float
    obliqueness: float
    grid_placement: float
    wall_times: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "p_stress": self.p_stress,
            "crossings": self.crossings,
            "edge_node_overlaps": self.edge_node_overlaps,
            "angular_resolution": self.angular_resolution,
            "obliqueness": self.obliqueness,
            "grid_placement": self.grid_placement,
            "wall_times": {k: round(v, 3) for k, v in self.wall_times.items()},
        }


def compute_report(
    g: Graph,
    d: IdealDistances,
    s: LayoutState,
    grid: GridSpec,
    wp: float,
    wall_times: dict[str, float] | None = None,
    m: MFunction = MFunction(),
) -> MetricsReport:
    return MetricsReport(
        p_stress=p_stress(g, d, s, wp),
        crossings=edge_crossings(g, s),
        edge_node_overlaps=edge_node_overlaps(g, s),
        angular_resolution=angular_resolution(g, s),
        obliqueness=obliqueness(g, s, m),
        grid_placement=grid_placement(g, s, grid),
        wall_times=dict(wall_times or {}),
    )
