"""Goal-function terms, analytic gradients and Hessian quadratic forms.

The goal being minimized is

    P-stress + k_ns * NS-stress + k_gs * GS-stress + k_en * EN-sep

All snap terms are built from the compact-support quadratic ``q``: inside the
snap radius it is a scaled parabola, outside it is identically zero, so every
term (and its derivatives) has strictly local influence.

Each term offers three faces: the scalar value, its contribution to the
gradient, and its contribution to the scalar g'Hg used for the Newton step.
The Hessian is never materialized; only the quadratic form is accumulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from gridlayout.graph import Graph, GridSpec, IdealDistances, LayoutState, closest_grid_coords

_EPS_COINCIDENT = 1e-12
ALIGN_TOL = 1e-9


@dataclass
class StressParams:
    """Term weights and snap radii for one solve.

    ``ns_sigma_x``/``ns_sigma_y`` are optional per-edge snap radii; when left
    unset the global ``sigma`` applies to every edge (batch behaviour).
    ``gs_exclude`` removes individual nodes from the grid term, which is how
    a dragged node temporarily escapes the grid forces.
    """

    k_ns: float = 0.0
    k_gs: float = 0.0
    k_en: float = 0.0
    sigma: float = 25.0
    wp: float = 0.01
    grid: Optional[GridSpec] = None
    ns_sigma_x: Optional[np.ndarray] = None
    ns_sigma_y: Optional[np.ndarray] = None
    gs_exclude: frozenset = frozenset()


@dataclass
class GoalBreakdown:
    p_stress: float
    ns_stress: float
    gs_stress: float
    en_sep: float
    total: float = field(init=False, default=0.0)

    def finish(self, params: StressParams) -> "GoalBreakdown":
        self.total = (
            self.p_stress
            + params.k_ns * self.ns_stress
            + params.k_gs * self.gs_stress
            + params.k_en * self.en_sep
        )
        return self


@dataclass(frozen=True)
class AlignedEdges:
    """Indices (into ``g.edges``) of exactly vertical / horizontal edges."""

    vertical: tuple[int, ...] = ()
    horizontal: tuple[int, ...] = ()


def q(sigma: float, z: float) -> float:
    """Snap penalty: z^2/sigma^2 inside the radius, zero outside."""
    if abs(z) <= sigma:
        return z * z / (sigma * sigma)
    return 0.0


def q_grad(sigma: float, z: float) -> float:
    """gamma: derivative of q, 2z/sigma^2 inside the radius."""
    if abs(z) <= sigma:
        return 2.0 * z / (sigma * sigma)
    return 0.0


def q_hess(sigma: float, z: float) -> float:
    """eta: second derivative of q, 2/sigma^2 inside the radius."""
    if abs(z) <= sigma:
        return 2.0 / (sigma * sigma)
    return 0.0


def detect_aligned_edges(g: Graph, s: LayoutState, tol: float = ALIGN_TOL) -> AlignedEdges:
    """Edges whose endpoints share a coordinate to within ``tol``.

    Only hard-constraint-aligned edges reach exact equality; soft near-
    alignment deliberately does not count.
    """
    vert, horiz = [], []
    for i, (u, v) in enumerate(g.edges):
        if abs(s.x[u] - s.x[v]) <= tol:
            vert.append(i)
        if abs(s.y[u] - s.y[v]) <= tol:
            horiz.append(i)
    return AlignedEdges(tuple(vert), tuple(horiz))


def snap_radii_uniform(g: Graph, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    m = len(g.edges)
    return np.full(m, sigma), np.full(m, sigma)


def snap_radii_node_sizes(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Per-edge radii (alpha, beta): mean width and mean height of endpoints."""
    w, h = g.widths(), g.heights()
    eu = np.array([u for u, v in g.edges], dtype=int)
    ev = np.array([v for u, v in g.edges], dtype=int)
    return 0.5 * (w[eu] + w[ev]), 0.5 * (h[eu] + h[ev])


def _pair_direction(u: int, v: int) -> tuple[float, float]:
    # deterministic unit direction for coincident points, seeded by indices
    theta = 0.7390851332151607 * (u + 1) + 2.718281828459045 * (v + 1)
    return math.cos(theta), math.sin(theta)


def _edge_arrays(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    eu = np.fromiter((u for u, v in g.edges), dtype=int, count=len(g.edges))
    ev = np.fromiter((v for u, v in g.edges), dtype=int, count=len(g.edges))
    return eu, ev


def _ns_sigmas(g: Graph, params: StressParams) -> tuple[np.ndarray, np.ndarray]:
    if params.ns_sigma_x is not None:
        return params.ns_sigma_x, params.ns_sigma_y
    return snap_radii_uniform(g, params.sigma)


# ---------------------------------------------------------------------------
# term values
# ---------------------------------------------------------------------------

def p_stress(g: Graph, d: IdealDistances, s: LayoutState, wp: float) -> float:
    n = g.n
    if n < 2:
        return 0.0
    iu, iv = np.triu_indices(n, k=1)
    dist = np.hypot(s.x[iu] - s.x[iv], s.y[iu] - s.y[iv])
    ideal = d.d[iu, iv]
    ok = np.isfinite(ideal) & (ideal > 0)
    short = np.clip(ideal[ok] - dist[ok], 0.0, None)
    total = float(np.sum(short * short / (ideal[ok] * ideal[ok])))
    if g.edges:
        eu, ev = _edge_arrays(g)
        de = np.hypot(s.x[eu] - s.x[ev], s.y[eu] - s.y[ev])
        over = np.clip(de - d.dL, 0.0, None)
        total += float(wp * np.sum(over * over))
    return total


def ns_stress(g: Graph, s: LayoutState, sigma_x, sigma_y=None) -> float:
    """Node-snap term; ``sigma_x``/``sigma_y`` may be scalars or per-edge arrays."""
    if not g.edges:
        return 0.0
    if sigma_y is None:
        sigma_y = sigma_x
    eu, ev = _edge_arrays(g)
    sx = np.broadcast_to(np.asarray(sigma_x, dtype=float), eu.shape)
    sy = np.broadcast_to(np.asarray(sigma_y, dtype=float), eu.shape)
    dx = s.x[eu] - s.x[ev]
    dy = s.y[eu] - s.y[ev]
    tx = np.where(np.abs(dx) <= sx, dx * dx / (sx * sx), 0.0)
    ty = np.where(np.abs(dy) <= sy, dy * dy / (sy * sy), 0.0)
    return float(np.sum(tx) + np.sum(ty))


def gs_stress(
    g: Graph, s: LayoutState, grid: GridSpec, sigma: float, exclude: frozenset = frozenset()
) -> float:
    ax = closest_grid_coords(s.x, grid.tau)
    by = closest_grid_coords(s.y, grid.tau)
    dx = s.x - ax
    dy = s.y - by
    tx = np.where(np.abs(dx) <= sigma, dx * dx / (sigma * sigma), 0.0)
    ty = np.where(np.abs(dy) <= sigma, dy * dy / (sigma * sigma), 0.0)
    if exclude:
        keep = np.ones(g.n, dtype=bool)
        keep[list(exclude)] = False
        tx, ty = tx[keep], ty[keep]
    return float(np.sum(tx) + np.sum(ty))


def _aligned_edge_geometry(g: Graph, s: LayoutState, edge_idx: int, horizontal: bool):
    """(coordinate of the edge line, extent lo, extent hi, endpoints)."""
    u, v = g.edges[edge_idx]
    if horizontal:
        line = 0.5 * (s.y[u] + s.y[v])
        lo, hi = sorted((s.x[u], s.x[v]))
    else:
        line = 0.5 * (s.x[u] + s.x[v])
        lo, hi = sorted((s.y[u], s.y[v]))
    return line, lo, hi, (u, v)


def en_sep(g: Graph, s: LayoutState, aligned: AlignedEdges, sigma: float) -> float:
    """Node-to-aligned-edge separation penalty.

    A node contributes only when the perpendicular foot lands on the segment
    and the node is within ``sigma`` of the edge line; edge endpoints are
    excluded from the inner sum.
    """
    total = 0.0
    for horizontal, idxs in ((True, aligned.horizontal), (False, aligned.vertical)):
        for ei in idxs:
            line, lo, hi, (u, v) = _aligned_edge_geometry(g, s, ei, horizontal)
            along = s.x if horizontal else s.y
            perp = s.y if horizontal else s.x
            foot = (along >= lo) & (along <= hi)
            foot[u] = foot[v] = False
            dist = np.abs(perp[foot] - line)
            z = np.clip(sigma - dist, 0.0, None)
            total += float(np.sum(z * z / (sigma * sigma)))
    return total


def goal_breakdown(
    g: Graph,
    d: IdealDistances,
    s: LayoutState,
    params: StressParams,
    aligned: AlignedEdges,
) -> GoalBreakdown:
    ns = gs = en = 0.0
    if params.k_ns:
        sx, sy = _ns_sigmas(g, params)
        ns = ns_stress(g, s, sx, sy)
    if params.k_gs and params.grid is not None:
        gs = gs_stress(g, s, params.grid, params.sigma, params.gs_exclude)
    if params.k_en:
        en = en_sep(g, s, aligned, params.sigma)
    return GoalBreakdown(p_stress(g, d, s, params.wp), ns, gs, en).finish(params)


# ---------------------------------------------------------------------------
# gradient
# ---------------------------------------------------------------------------

def goal_and_gradient(
    g: Graph,
    d: IdealDistances,
    s: LayoutState,
    params: StressParams,
    aligned: AlignedEdges,
) -> tuple[GoalBreakdown, np.ndarray]:
    """Goal value plus its gradient, laid out as all x then all y.

    Positions of aligned-edge lines are treated as fixed by the alignment
    constraints: EN-sep pushes only the offending node, never the edge.
    """
    n = g.n
    grad = np.zeros(2 * n)
    gx, gy = grad[:n], grad[n:]

    # P-stress: attraction of too-close pairs toward ideal distance plus
    # spring on overlong edges
    if n >= 2:
        dx = s.x[:, None] - s.x[None, :]
        dy = s.y[:, None] - s.y[None, :]
        dist = np.hypot(dx, dy)
        ideal = d.d
        valid = np.isfinite(ideal) & (ideal > 0)
        coincident = valid & (dist < _EPS_COINCIDENT)
        dist_safe = np.where(dist < _EPS_COINCIDENT, 1.0, dist)
        short = np.where(valid, np.clip(ideal - dist, 0.0, None), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            c1 = np.where(valid, -2.0 * short / (ideal * ideal * dist_safe), 0.0)
        np.fill_diagonal(c1, 0.0)
        gx += np.sum(c1 * dx, axis=1)
        gy += np.sum(c1 * dy, axis=1)
        # coincident pairs: clamp gradient direction is undefined, push along
        # a deterministic index-seeded direction instead
        for u, v in zip(*np.nonzero(np.triu(coincident, k=1))):
            mag = 2.0 * ideal[u, v] / (ideal[u, v] * ideal[u, v])
            ex, ey = _pair_direction(int(u), int(v))
            gx[u] -= mag * ex
            gy[u] -= mag * ey
            gx[v] += mag * ex
            gy[v] += mag * ey

    if g.edges:
        eu, ev = _edge_arrays(g)
        dxe = s.x[eu] - s.x[ev]
        dye = s.y[eu] - s.y[ev]
        de = np.hypot(dxe, dye)
        de_safe = np.where(de < _EPS_COINCIDENT, 1.0, de)
        c2 = 2.0 * params.wp * np.clip(de - d.dL, 0.0, None) / de_safe
        np.add.at(gx, eu, c2 * dxe)
        np.add.at(gx, ev, -c2 * dxe)
        np.add.at(gy, eu, c2 * dye)
        np.add.at(gy, ev, -c2 * dye)

        if params.k_ns:
            sx, sy = _ns_sigmas(g, params)
            gxx = np.where(np.abs(dxe) <= sx, 2.0 * dxe / (sx * sx), 0.0) * params.k_ns
            gyy = np.where(np.abs(dye) <= sy, 2.0 * dye / (sy * sy), 0.0) * params.k_ns
            np.add.at(gx, eu, gxx)
            np.add.at(gx, ev, -gxx)
            np.add.at(gy, eu, gyy)
            np.add.at(gy, ev, -gyy)

    if params.k_gs and params.grid is not None:
        sig = params.sigma
        ax = closest_grid_coords(s.x, params.grid.tau)
        by = closest_grid_coords(s.y, params.grid.tau)
        ddx = s.x - ax
        ddy = s.y - by
        ggx = np.where(np.abs(ddx) <= sig, 2.0 * ddx / (sig * sig), 0.0) * params.k_gs
        ggy = np.where(np.abs(ddy) <= sig, 2.0 * ddy / (sig * sig), 0.0) * params.k_gs
        if params.gs_exclude:
            idx = list(params.gs_exclude)
            ggx[idx] = 0.0
            ggy[idx] = 0.0
        gx += ggx
        gy += ggy

    if params.k_en:
        sig = params.sigma
        for horizontal, idxs in ((True, aligned.horizontal), (False, aligned.vertical)):
            for ei in idxs:
                line, lo, hi, (u, v) = _aligned_edge_geometry(g, s, ei, horizontal)
                along = s.x if horizontal else s.y
                perp = s.y if horizontal else s.x
                foot = (along >= lo) & (along <= hi)
                foot[u] = foot[v] = False
                off = perp[foot] - line
                z = np.clip(sig - np.abs(off), 0.0, None)
                # repulsion: the descent direction pushes the node away from
                # the edge line
                comp = -np.sign(off) * 2.0 * z / (sig * sig) * params.k_en
                target = gy if horizontal else gx
                np.add.at(target, np.nonzero(foot)[0], comp)

    breakdown = goal_breakdown(g, d, s, params, aligned)
    return breakdown, grad


# ---------------------------------------------------------------------------
# Hessian quadratic form
# ---------------------------------------------------------------------------

def hessian_quadform(
    g: Graph,
    d: IdealDistances,
    s: LayoutState,
    params: StressParams,
    aligned: AlignedEdges,
    vec: np.ndarray,
) -> float:
    """v' H v accumulated term by term without forming H."""
    n = g.n
    vx, vy = vec[:n], vec[n:]
    total = 0.0

    if n >= 2:
        iu, iv = np.triu_indices(n, k=1)
        dx = s.x[iu] - s.x[iv]
        dy = s.y[iu] - s.y[iv]
        dist = np.hypot(dx, dy)
        ideal = d.d[iu, iv]
        ok = np.isfinite(ideal) & (ideal > 0) & (dist >= _EPS_COINCIDENT)
        dx, dy, dist, ideal = dx[ok], dy[ok], dist[ok], ideal[ok]
        ju, jv = iu[ok], iv[ok]
        w = 1.0 / (ideal * ideal)
        short = np.clip(ideal - dist, 0.0, None)
        fp = -2.0 * w * short
        fpp = np.where(dist < ideal, 2.0 * w, 0.0)
        tx = vx[ju] - vx[jv]
        ty = vy[ju] - vy[jv]
        sdot = (tx * dx + ty * dy) / dist
        tnorm2 = tx * tx + ty * ty
        total += float(np.sum(fpp * sdot * sdot + fp * (tnorm2 - sdot * sdot) / dist))

    if g.edges:
        eu, ev = _edge_arrays(g)
        dxe = s.x[eu] - s.x[ev]
        dye = s.y[eu] - s.y[ev]
        de = np.hypot(dxe, dye)
        ok = de >= _EPS_COINCIDENT
        dxe, dye, de = dxe[ok], dye[ok], de[ok]
        ju, jv = eu[ok], ev[ok]
        fp = 2.0 * params.wp * np.clip(de - d.dL, 0.0, None)
        fpp = np.where(de > d.dL, 2.0 * params.wp, 0.0)
        tx = vx[ju] - vx[jv]
        ty = vy[ju] - vy[jv]
        sdot = (tx * dxe + ty * dye) / de
        tnorm2 = tx * tx + ty * ty
        total += float(np.sum(fpp * sdot * sdot + fp * (tnorm2 - sdot * sdot) / de))

        if params.k_ns:
            sx, sy = _ns_sigmas(g, params)
            dxa = s.x[eu] - s.x[ev]
            dya = s.y[eu] - s.y[ev]
            etax = np.where(np.abs(dxa) <= sx, 2.0 / (sx * sx), 0.0)
            etay = np.where(np.abs(dya) <= sy, 2.0 / (sy * sy), 0.0)
            tx = vx[eu] - vx[ev]
            ty = vy[eu] - vy[ev]
            total += params.k_ns * float(np.sum(etax * tx * tx + etay * ty * ty))

    if params.k_gs and params.grid is not None:
        sig = params.sigma
        ax = closest_grid_coords(s.x, params.grid.tau)
        by = closest_grid_coords(s.y, params.grid.tau)
        etax = np.where(np.abs(s.x - ax) <= sig, 2.0 / (sig * sig), 0.0)
        etay = np.where(np.abs(s.y - by) <= sig, 2.0 / (sig * sig), 0.0)
        if params.gs_exclude:
            idx = list(params.gs_exclude)
            etax[idx] = 0.0
            etay[idx] = 0.0
        total += params.k_gs * float(np.sum(etax * vx * vx + etay * vy * vy))

    if params.k_en:
        sig = params.sigma
        for horizontal, idxs in ((True, aligned.horizontal), (False, aligned.vertical)):
            for ei in idxs:
                line, lo, hi, (u, v) = _aligned_edge_geometry(g, s, ei, horizontal)
                along = s.x if horizontal else s.y
                perp = s.y if horizontal else s.x
                foot = (along >= lo) & (along <= hi)
                foot[u] = foot[v] = False
                active = foot & (np.abs(perp - line) < sig)
                comp = vy if horizontal else vx
                total += params.k_en * float(
                    np.sum(2.0 / (sig * sig) * comp[active] * comp[active])
                )

    return total


def step_size(gradient: np.ndarray, hessian_quadratic: float, fallback: float) -> float:
    """Newton step g'g / g'Hg; ``fallback`` when curvature is not positive.

    A zero gradient signals convergence and yields a zero step.
    """
    gg = float(np.dot(gradient, gradient))
    if gg == 0.0:
        return 0.0
    if hessian_quadratic <= 0.0:
        return fallback
    return gg / hessian_quadratic
