"""Adaptive constrained alignment: greedy hard-alignment of edges.

The loop repeatedly picks the cheapest separated alignment that provably
cannot create an edge coincidence, applies its two tentative constraints,
re-solves, and continues until no candidate remains.  The coincidence test
is purely symbolic: it asks whether the constraint set would *entail* two
collinear overlapping edges, reading alignment classes and order relations
from the constraints rather than from coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from gridlayout.constraints import (
    Dim,
    Direction,
    Priority,
    SeparationConstraint,
    SeparatedAlignment,
    apply_separated_alignment,
    remove_separated_alignment,
)
from gridlayout.graph import Graph, IdealDistances, LayoutState
from gridlayout.metrics import MFunction, edge_angle
from gridlayout.solver import cfdl
from gridlayout.stress import StressParams

BEND_COST = 1000.0


@dataclass
class CostModel:
    """Which basic cost to use and how bend points are penalized."""

    basis: str = "ds"  # "ds" (stress-change estimate) or "ob" (negated obliqueness)
    bend_rule: str = "deg2"  # "deg2" or "nonleaf2"
    bend_cost: float = BEND_COST
    m: MFunction = field(default_factory=MFunction)


class AlignFlags:
    """Alignment/adjacency bookkeeping backing the coincidence test.

    ``h_aligned[u, v]`` means the constraints force equal y (a horizontal
    visual alignment); ``v_aligned`` likewise for x.  Strict order edges come
    from separation constraints with positive gaps; ``order_closure`` builds
    entailed less-than relations by chaining them through the alignment
    classes.
    """

    def __init__(self, n: int):
        self.n = n
        self.h_aligned = np.zeros((n, n), dtype=bool)
        self.v_aligned = np.zeros((n, n), dtype=bool)
        self.adjacent = np.zeros((n, n), dtype=bool)
        self.x_less: set[tuple[int, int]] = set()
        self.y_less: set[tuple[int, int]] = set()
        self._closure: dict[str, np.ndarray] = {}

    # -- construction -------------------------------------------------------

    def add_edge(self, u: int, v: int) -> None:
        self.adjacent[u, v] = self.adjacent[v, u] = True

    def _aligned(self, axis: str) -> np.ndarray:
        # order along x interacts with x-equality classes, i.e. vertical
        # visual alignment
        return self.v_aligned if axis == "x" else self.h_aligned

    def add_alignment(self, dim: Dim, u: int, v: int) -> None:
        mat = self.h_aligned if dim == Dim.Y else self.v_aligned
        group = {u, v}
        group.update(np.nonzero(mat[u])[0].tolist())
        group.update(np.nonzero(mat[v])[0].tolist())
        idx = sorted(group)
        mat[np.ix_(idx, idx)] = True
        mat[idx, idx] = False
        self._closure.clear()

    def add_order(self, dim: Dim, left: int, right: int) -> None:
        (self.x_less if dim == Dim.X else self.y_less).add((left, right))
        self._closure.clear()

    # -- queries ------------------------------------------------------------

    def order_closure(self, axis: str) -> np.ndarray:
        """Entailed strict-order matrix for one axis (cached)."""
        if axis in self._closure:
            return self._closure[axis]
        eq = self._aligned(axis) | np.eye(self.n, dtype=bool)
        strict = np.zeros((self.n, self.n), dtype=bool)
        for l, r in self.x_less if axis == "x" else self.y_less:
            strict[l, r] = True
        step = eq @ strict @ eq
        closure = step.copy()
        while True:
            grown = closure | (closure @ closure)
            if (grown == closure).all():
                break
            closure = grown
        self._closure[axis] = closure
        return closure

    def entails_less(self, axis: str, a: int, b: int) -> bool:
        return bool(self.order_closure(axis)[a, b])


def init_flags(g: Graph, constraints: Sequence[SeparationConstraint]) -> AlignFlags:
    f = AlignFlags(g.n)
    for u, v in g.edges:
        f.add_edge(u, v)
    for c in constraints:
        if c.unsatisfiable:
            continue
        l, r = g.index[c.left], g.index[c.right]
        if c.is_eq and c.gap == 0.0:
            f.add_alignment(c.dim, l, r)
        elif c.gap > 0.0:
            f.add_order(c.dim, l, r)
    return f


def update_flags(f: AlignFlags, g: Graph, sa: SeparatedAlignment) -> AlignFlags:
    a = sa.alignment
    f.add_alignment(a.dim, g.index[a.left], g.index[a.right])
    sep = sa.separation
    if sep.gap > 0:
        f.add_order(sep.dim, g.index[sep.left], g.index[sep.right])
    return f


def _overlay_pair_exists(
    aligned: np.ndarray, less: np.ndarray, eu: np.ndarray, ev: np.ndarray
) -> bool:
    """Two distinct edges in one alignment class with interleaved orders.

    An overlay between edges (a, b) and (c, d) needs all four endpoints in
    the same class plus entailed ``a < d`` and ``c < b``; every labeling of
    the two edges is tried.
    """
    n = aligned.shape[0]
    eq = aligned | np.eye(n, dtype=bool)
    mask = eq[eu, ev]
    if int(np.count_nonzero(mask)) < 2:
        return False
    a, b = eu[mask], ev[mask]
    same = eq[a[:, None], a[None, :]]
    p = less[a[:, None], b[None, :]]
    q = less[a[:, None], a[None, :]]
    r = less[b[:, None], b[None, :]]
    t = less[b[:, None], a[None, :]]
    interleaved = (p & p.T) | (q & r.T) | (r & q.T) | (t & t.T)
    hit = same & interleaved
    np.fill_diagonal(hit, False)
    return bool(hit.any())


def creates_coincidence(
    f: AlignFlags,
    g: Graph,
    s: LayoutState,
    u: str,
    v: str,
    direction: Direction,
) -> bool:
    """Whether applying SA(u, v, direction) would entail an edge coincidence.

    Purely symbolic: the proposal's equality and strict order are added to
    the entailed relations and the result is scanned for any pair of edges
    forced collinear with overlapping extents.  A local witness scan around
    u and v is not enough, because the class merge can align two edges that
    touch neither u nor v.  One augmentation pass per axis is exact here: a
    feasible system can use the single new relation at most once in any
    entailment chain (twice would close a strict cycle).  S and W reduce to
    N and E with swapped arguments.
    """
    iu, iv = g.index[u], g.index[v]
    if not f.adjacent[iu, iv]:
        raise ValueError(f"({u!r}, {v!r}) is not an edge")
    if direction == Direction.S:
        return creates_coincidence(f, g, s, v, u, Direction.N)
    if direction == Direction.W:
        return creates_coincidence(f, g, s, v, u, Direction.E)
    if direction == Direction.E:
        first, second, axis = iu, iv, "x"
    else:  # N: v lies before u along y
        first, second, axis = iv, iu, "y"

    n = f.n
    ident = np.eye(n, dtype=bool)
    align_axis = "y" if axis == "x" else "x"
    align_eq = f._aligned(align_axis)
    order_eq = f._aligned(axis) | ident
    order_less = f.order_closure(axis)
    align_less = f.order_closure(align_axis)

    # the proposal's equality merges the alignment classes of u and v
    members = align_eq[:, first] | align_eq[:, second]
    members[first] = members[second] = True
    merged_align = align_eq | (members[:, None] & members[None, :])

    # its strict order (first before second) chains through existing relations
    a_le_first = order_less[:, first] | order_eq[:, first]
    second_le_b = order_less[second, :] | order_eq[second, :]
    merged_order = order_less | (a_le_first[:, None] & second_le_b[None, :])

    # the equality also completes strict orders along the alignment axis
    align_le = align_less | align_eq | ident
    via_merge = (
        (align_le[:, first][:, None] & align_less[second, :][None, :])
        | (align_less[:, first][:, None] & align_le[second, :][None, :])
        | (align_le[:, second][:, None] & align_less[first, :][None, :])
        | (align_less[:, second][:, None] & align_le[first, :][None, :])
    )
    merged_cross = align_less | via_merge

    eu = np.fromiter((a for a, b in g.edges), dtype=int, count=len(g.edges))
    ev = np.fromiter((b for a, b in g.edges), dtype=int, count=len(g.edges))
    return _overlay_pair_exists(merged_align, merged_order, eu, ev) or _overlay_pair_exists(
        f._aligned(axis), merged_cross, eu, ev
    )


# ---------------------------------------------------------------------------
# cost heuristics
# ---------------------------------------------------------------------------

def _local_p_stress(
    g: Graph, d: IdealDistances, x: np.ndarray, y: np.ndarray, wp: float, iu: int, iv: int
) -> float:
    """P-stress restricted to terms touching either endpoint."""
    total = 0.0
    for a in (iu, iv):
        dist = np.hypot(x - x[a], y - y[a])
        ideal = d.d[a]
        ok = np.isfinite(ideal) & (ideal > 0)
        short = np.clip(ideal[ok] - dist[ok], 0.0, None)
        total += float(np.sum(short * short / (ideal[ok] * ideal[ok])))
    # the (iu, iv) pair itself was counted twice
    dist_uv = math.hypot(x[iu] - x[iv], y[iu] - y[iv])
    ideal_uv = d.d[iu, iv]
    if np.isfinite(ideal_uv) and ideal_uv > 0:
        total -= (max(ideal_uv - dist_uv, 0.0) / ideal_uv) ** 2
    for a, b in g.edges:
        if iu in (a, b) or iv in (a, b):
            de = math.hypot(x[a] - x[b], y[a] - y[b])
            total += wp * max(de - d.dL, 0.0) ** 2
    return total


def cost_ds(
    g: Graph,
    d: IdealDistances,
    s: LayoutState,
    wp: float,
    u: str,
    v: str,
    direction: Direction,
) -> float:
    """Estimated stress change from snapping the pair onto their mean line."""
    iu, iv = g.index[u], g.index[v]
    x, y = s.x, s.y
    before = _local_p_stress(g, d, x, y, wp, iu, iv)
    x2, y2 = x.copy(), y.copy()
    if direction in (Direction.E, Direction.W):
        y2[iu] = y2[iv] = 0.5 * (y[iu] + y[iv])
    else:
        x2[iu] = x2[iv] = 0.5 * (x[iu] + x[iv])
    after = _local_p_stress(g, d, x2, y2, wp, iu, iv)
    return after - before


def cost_ob(
    g: Graph, s: LayoutState, u: str, v: str, direction: Direction, m: MFunction = MFunction()
) -> float:
    """Negated obliqueness: the most nearly-axis-aligned edges go first."""
    return -m(edge_angle(s, g.index[u], g.index[v]))


def _nonleaf_neighbors(g: Graph, degrees: list[int], n: int) -> list[int]:
    return [k for k in g.neighbors(n) if degrees[k] >= 2]


def bend_penalty(
    g: Graph,
    f: AlignFlags,
    model: CostModel,
    u: str,
    v: str,
    direction: Direction,
) -> float:
    """Fixed surcharge for turning an effective-degree-2 node into a bend.

    A node bends when one of its (considered) incident edges ends up
    horizontally aligned while another ends up vertically aligned.  With the
    non-leaf rule, leaf edges neither count toward the degree nor toward the
    bend itself, which lets SBGN process nodes keep their currency molecules
    unaligned.
    """
    iu, iv = g.index[u], g.index[v]
    horizontal = direction in (Direction.E, Direction.W)
    degrees = [g.degree(i) for i in range(g.n)]
    for node, other in ((iu, iv), (iv, iu)):
        if model.bend_rule == "nonleaf2":
            considered = _nonleaf_neighbors(g, degrees, node)
        else:
            if degrees[node] != 2:
                continue
            considered = g.neighbors(node)
        if len(considered) != 2:
            continue
        proposed_in = other in considered
        has_h = any(f.h_aligned[node, k] for k in considered) or (horizontal and proposed_in)
        has_v = any(f.v_aligned[node, k] for k in considered) or (
            not horizontal and proposed_in
        )
        if has_h and has_v:
            return model.bend_cost
    return 0.0


def choose_sa(
    g: Graph,
    f: AlignFlags,
    s: LayoutState,
    constraints: Sequence[SeparationConstraint],
    model: CostModel,
    d: Optional[IdealDistances] = None,
    wp: float = 0.01,
    ineligible: Optional[set] = None,
) -> Optional[SeparatedAlignment]:
    """Cheapest coincidence-free separated alignment, or None when exhausted.

    Each edge contributes at most one horizontal and one vertical candidate,
    with the direction chosen to keep the current relative order.  Ties go to
    the earliest edge, horizontal before vertical.
    """
    ineligible = ineligible or set()
    best: Optional[tuple[float, SeparatedAlignment]] = None
    for iu, iv in g.edges:
        u, v = g.nodes[iu].id, g.nodes[iv].id
        pair = frozenset((iu, iv))
        # an edge aligned in either dimension is done: aligning it in the
        # other dimension too would collapse its endpoints onto each other
        if f.h_aligned[iu, iv] or f.v_aligned[iu, iv]:
            continue
        candidates = []
        if (pair, "h") not in ineligible:
            candidates.append(Direction.E if s.x[iu] <= s.x[iv] else Direction.W)
        if (pair, "v") not in ineligible:
            candidates.append(Direction.N if s.y[iv] <= s.y[iu] else Direction.S)
        for direction in candidates:
            if creates_coincidence(f, g, s, u, v, direction):
                continue
            if model.basis == "ob":
                basic = cost_ob(g, s, u, v, direction, model.m)
            else:
                basic = cost_ds(g, d, s, wp, u, v, direction)
            if math.isinf(basic):
                continue
            total = basic + bend_penalty(g, f, model, u, v, direction)
            if best is None or total < best[0]:
                best = (total, SeparatedAlignment.make(g, u, v, direction))
    return best[1] if best else None


@dataclass
class AcaResult:
    layout: LayoutState
    constraints: list[SeparationConstraint]
    alignments: list[SeparatedAlignment]
    selections: int


def _sa_key(g: Graph, sa: SeparatedAlignment):
    pair = frozenset((g.index[sa.u], g.index[sa.v]))
    return (pair, "h" if sa.direction in (Direction.E, Direction.W) else "v")


def adapt_const_align(
    g: Graph,
    d: IdealDistances,
    constraints: Sequence[SeparationConstraint],
    model: CostModel,
    s0: LayoutState,
    params: Optional[StressParams] = None,
) -> AcaResult:
    """Greedy alignment loop: choose, apply, re-solve, repeat.

    Alignments rejected by the projection (in deference to user constraints
    or earlier alignments) are discarded and their edge-dimension becomes
    ineligible, so the loop performs at most 2|E| candidate selections.
    """
    params = params or StressParams(wp=1.0 / d.dL)
    constraints = list(constraints)
    s = cfdl(g, d, s0, params, constraints)
    flags = init_flags(g, constraints)
    ineligible: set = set()
    alignments: list[SeparatedAlignment] = []
    selections = 0

    for _ in range(2 * len(g.edges) + 2):
        sa = choose_sa(
            g, flags, s, constraints, model, d=d, wp=params.wp, ineligible=ineligible
        )
        if sa is None:
            break
        selections += 1
        apply_separated_alignment(sa, constraints)
        # a rough intermediate solve is enough to steer the next choice; the
        # loop ends with one full-precision solve
        s = cfdl(g, d, s, params, constraints, max_iter=50, rel_tol=1e-3)
        # projection may have rejected the newcomer or (when a definite
        # constraint was involved) sacrificed an earlier alignment
        rejected_new = sa.rejected
        if rejected_new:
            remove_separated_alignment(sa, constraints)
            ineligible.add(_sa_key(g, sa))
        dropped = [a for a in alignments if a.rejected]
        if dropped:
            for a in dropped:
                remove_separated_alignment(a, constraints)
                alignments.remove(a)
                ineligible.add(_sa_key(g, a))
            flags = init_flags(g, constraints)
        if rejected_new:
            continue
        alignments.append(sa)
        update_flags(flags, g, sa)

    s = cfdl(g, d, s, params, constraints)
    s = _repair_geometric_coincidences(g, d, s, constraints, params, flags)
    return AcaResult(s, constraints, alignments, selections)


# ---------------------------------------------------------------------------
# geometric fold repair
# ---------------------------------------------------------------------------

def _geometric_overlaps(g: Graph, s: LayoutState, tol: float = 1e-6) -> list:
    """Pairs of distinct edges collinear with overlapping extents, by
    coordinates rather than constraints."""
    out = []
    x, y = s.x, s.y
    for i, (a, b) in enumerate(g.edges):
        abx, aby = x[b] - x[a], y[b] - y[a]
        scale = tol * (math.hypot(abx, aby) + 1.0)
        for j in range(i + 1, len(g.edges)):
            c, e = g.edges[j]
            if abs(abx * (y[c] - y[a]) - aby * (x[c] - x[a])) > scale:
                continue
            if abs(abx * (y[e] - y[a]) - aby * (x[e] - x[a])) > scale:
                continue
            arr = x if abs(abx) >= abs(aby) else y
            lo1, hi1 = sorted((arr[a], arr[b]))
            lo2, hi2 = sorted((arr[c], arr[e]))
            if min(hi1, hi2) - max(lo1, lo2) > 0.0:
                out.append(((a, b), (c, e)))
    return out


def _separation_for_overlap(
    g: Graph, f: AlignFlags, s: LayoutState, e1: tuple, e2: tuple
) -> Optional[SeparationConstraint]:
    """A tentative separation that pulls two collinear overlapping edges apart.

    Edges constrained into the same alignment class are ordered along the
    shared line (an ordering the coincidence test could not require, since it
    was never entailed); otherwise the collinearity is accidental and the two
    sides are separated perpendicular to the line.
    """
    a, b = e1
    c, e = e2
    axis = "x" if abs(s.x[b] - s.x[a]) >= abs(s.y[b] - s.y[a]) else "y"
    perp = "y" if axis == "x" else "x"
    eqm = f._aligned(perp)

    def same_class(u: int, v: int) -> bool:
        return u == v or bool(eqm[u, v])

    arr = s.x if axis == "x" else s.y
    along = g.widths() if axis == "x" else g.heights()
    across = g.heights() if axis == "x" else g.widths()

    if same_class(a, b) and same_class(c, e) and same_class(a, c):
        # both edges lie on one constrained line: order their extents
        if arr[a] + arr[b] > arr[c] + arr[e]:
            (a, b), (c, e) = (c, e), (a, b)
        inner_left = a if arr[a] >= arr[b] else b
        inner_right = c if arr[c] <= arr[e] else e
        if inner_left == inner_right:
            return None
        gap = 0.5 * (along[inner_left] + along[inner_right])
        return SeparationConstraint(
            Dim(axis),
            g.nodes[inner_left].id,
            g.nodes[inner_right].id,
            float(gap),
            priority=Priority.TENTATIVE,
        )

    # accidental collinearity: push the unconstrained sides off the line
    for na in (a, b):
        for nc in (c, e):
            if not same_class(na, nc):
                lo, hi = (na, nc) if na < nc else (nc, na)
                gap = 0.5 * (across[lo] + across[hi])
                return SeparationConstraint(
                    Dim(perp),
                    g.nodes[lo].id,
                    g.nodes[hi].id,
                    float(gap),
                    priority=Priority.TENTATIVE,
                )
    return None


def _repair_geometric_coincidences(
    g: Graph,
    d: IdealDistances,
    s: LayoutState,
    constraints: list[SeparationConstraint],
    params: StressParams,
    flags: AlignFlags,
    max_rounds: int = 5,
) -> LayoutState:
    """Break residual collinear edge overlaps with tentative separations.

    The symbolic coincidence test only blocks overlaps the constraints would
    *entail*; the solver can still park unordered segments of one alignment
    class on top of each other, or two separate classes on the same line.
    Repairs rejected by the projection are dropped, leaving the layout as is.
    """
    for _ in range(max_rounds):
        pairs = _geometric_overlaps(g, s)
        if not pairs:
            break
        fresh = []
        seen = set()
        for e1, e2 in pairs:
            c = _separation_for_overlap(g, flags, s, e1, e2)
            if c is None:
                continue
            key = (c.dim, c.left, c.right)
            if key in seen:
                continue
            seen.add(key)
            fresh.append(c)
            constraints.append(c)
        if not fresh:
            break
        s = cfdl(g, d, s, params, constraints)
        for c in fresh:
            if c.unsatisfiable:
                constraints.remove(c)
    return s
