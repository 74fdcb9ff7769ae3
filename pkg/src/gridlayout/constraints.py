"""Hard-constraint machinery: separation constraints and projection.

Projection finds the positions of least squared displacement from a vector of
desired positions subject to a set of one-dimensional separation constraints
(``left + gap <= right`` or ``left + gap = right``).  The solver merges
variables joined by tight constraints into blocks, splits blocks on negative
Lagrange multipliers, and repeats until no constraint is violated and no
active inequality wants to let go.

Constraints carry a priority.  Definite (user-supplied) constraints are never
dropped; when a conflict cannot be resolved otherwise a tentative constraint
is marked unsatisfiable and ignored from then on.  Among conflicting
tentative alignment equalities the one with the largest absolute Lagrange
multiplier is rejected, since removing it frees the most stress.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from gridlayout.graph import Graph, LayoutState

_TOL = 1e-9


class Dim(str, Enum):
    X = "x"
    Y = "y"


class Priority(str, Enum):
    DEFINITE = "definite"
    TENTATIVE = "tentative"


class DefiniteConflictError(Exception):
    """An infeasible cycle made entirely of definite constraints."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        desc = "; ".join(str(c) for c in self.cycle)
        super().__init__(f"infeasible definite constraints: {desc}")


_id_counter = itertools.count()


@dataclass
class SeparationConstraint:
    """One linear relation between two node coordinates in one dimension."""

    dim: Dim
    left: str
    right: str
    gap: float
    is_eq: bool = False
    priority: Priority = Priority.DEFINITE
    unsatisfiable: bool = False
    multiplier: float = 0.0
    generated: bool = False  # emitted by non-overlap generation, not persistent
    cid: int = field(default_factory=lambda: next(_id_counter))

    def __str__(self):
        op = "=" if self.is_eq else "<="
        return f"{self.dim.value}[{self.left}]+{self.gap:g} {op} {self.dim.value}[{self.right}]"

    def violation(self, pos_left: float, pos_right: float) -> float:
        v = pos_left + self.gap - pos_right
        if self.is_eq:
            return abs(v)
        return v

    def to_json(self) -> dict:
        return {
            "dim": self.dim.value,
            "left": self.left,
            "right": self.right,
            "gap": self.gap,
            "eq": self.is_eq,
            "priority": self.priority.value,
        }

    @staticmethod
    def from_json(doc: dict) -> "SeparationConstraint":
        return SeparationConstraint(
            dim=Dim(doc["dim"]),
            left=doc["left"],
            right=doc["right"],
            gap=float(doc["gap"]),
            is_eq=bool(doc.get("eq", False)),
            priority=Priority(doc.get("priority", "definite")),
        )


class Direction(str, Enum):
    N = "N"
    S = "S"
    E = "E"
    W = "W"


@dataclass
class SeparatedAlignment:
    """An alignment equality plus an ordering inequality over one edge.

    ``SA(u, v, E)`` aligns the pair horizontally and keeps ``u`` west of
    ``v`` by at least the mean width; the other directions follow by
    symmetry (``SA(u,v,S) == SA(v,u,N)``, ``SA(u,v,E) == SA(v,u,W)``).
    """

    u: str
    v: str
    direction: Direction
    alignment: SeparationConstraint
    separation: SeparationConstraint

    @staticmethod
    def make(g: Graph, u: str, v: str, direction: Direction) -> "SeparatedAlignment":
        iu, iv = g.index[u], g.index[v]
        alpha = 0.5 * (g.nodes[iu].w + g.nodes[iv].w)
        beta = 0.5 * (g.nodes[iu].h + g.nodes[iv].h)
        # reduce S and W to N and E with swapped arguments
        if direction == Direction.S:
            return SeparatedAlignment.make(g, v, u, Direction.N)
        if direction == Direction.W:
            return SeparatedAlignment.make(g, v, u, Direction.E)
        if direction == Direction.E:
            align = SeparationConstraint(Dim.Y, u, v, 0.0, True, Priority.TENTATIVE)
            sep = SeparationConstraint(Dim.X, u, v, alpha, False, Priority.TENTATIVE)
        else:  # N: v lies above u (smaller y)
            align = SeparationConstraint(Dim.X, u, v, 0.0, True, Priority.TENTATIVE)
            sep = SeparationConstraint(Dim.Y, v, u, beta, False, Priority.TENTATIVE)
        return SeparatedAlignment(u, v, direction, align, sep)

    @property
    def rejected(self) -> bool:
        return self.alignment.unsatisfiable or self.separation.unsatisfiable


def apply_separated_alignment(
    sa: SeparatedAlignment, constraints: list[SeparationConstraint]
) -> list[SeparationConstraint]:
    constraints.append(sa.alignment)
    constraints.append(sa.separation)
    return constraints


def remove_separated_alignment(
    sa: SeparatedAlignment, constraints: list[SeparationConstraint]
) -> list[SeparationConstraint]:
    for c in (sa.alignment, sa.separation):
        if c in constraints:
            constraints.remove(c)
    return constraints


def choose_rejection(conflict: Sequence[SeparationConstraint]) -> SeparationConstraint:
    """Tentative constraint with maximal |multiplier|; insertion order breaks ties."""
    if not conflict:
        raise ValueError("empty conflict set")
    best = conflict[0]
    for c in conflict[1:]:
        if abs(c.multiplier) > abs(best.multiplier):
            best = c
    return best


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

class _Block:
    __slots__ = ("vars", "offset", "active", "posn", "pinned")

    def __init__(self, var: int, desired: float, pin: Optional[float]):
        self.vars = [var]
        self.offset = {var: 0.0}
        self.active: list[SeparationConstraint] = []
        self.pinned: dict[int, float] = {} if pin is None else {var: pin}
        self.posn = desired if pin is None else pin

    def recompute(self, desired: np.ndarray) -> None:
        if self.pinned:
            var, val = next(iter(self.pinned.items()))
            self.posn = val - self.offset[var]
        else:
            self.posn = sum(desired[v] - self.offset[v] for v in self.vars) / len(self.vars)

    def pos(self, var: int) -> float:
        return self.posn + self.offset[var]


class _Projector:
    """One projection problem over a single dimension."""

    def __init__(self, desired, constraints, index, pins):
        self.desired = np.asarray(desired, dtype=float)
        self.constraints = [c for c in constraints if not c.unsatisfiable]
        self.index = index
        self.pins = pins or {}
        self.n = len(self.desired)

    def _var(self, node_id) -> int:
        return self.index[node_id] if self.index is not None else int(node_id)

    def solve(self) -> np.ndarray:
        # restart from scratch every time a tentative constraint is rejected;
        # rejections are monotone so this terminates
        while True:
            try:
                return self._attempt()
            except _Rejected:
                continue

    # -- core active-set loop ----------------------------------------------

    def _attempt(self) -> np.ndarray:
        self.block_of: list[_Block] = []
        for i in range(self.n):
            b = _Block(i, self.desired[i], self.pins.get(i))
            self.block_of.append(b)
        for c in self.constraints:
            c.multiplier = 0.0

        live = [c for c in self.constraints if not c.unsatisfiable]
        for c in live:
            if c.is_eq:
                self._activate_equality(c)

        inequalities = [c for c in live if not c.is_eq and not c.unsatisfiable]
        cap = 100 + 10 * (self.n + len(live))
        for _ in range(cap):
            c = self._most_violated(inequalities)
            if c is not None:
                l, r = self._var(c.left), self._var(c.right)
                if self.block_of[l] is self.block_of[r]:
                    self._expand_or_reject(c)
                else:
                    self._merge(c)
                continue
            self._compute_multipliers()
            worst = None
            for bl in self._blocks():
                for ac in bl.active:
                    if not ac.is_eq and ac.multiplier < -_TOL:
                        if worst is None or ac.multiplier < worst.multiplier:
                            worst = ac
            if worst is None:
                break
            self._split(worst)
        out = np.empty(self.n)
        for i in range(self.n):
            out[i] = self.block_of[i].pos(i)
        return out

    def _blocks(self):
        seen = set()
        for b in self.block_of:
            if id(b) not in seen:
                seen.add(id(b))
                yield b

    def _most_violated(self, inequalities):
        worst, worst_v = None, _TOL
        for c in inequalities:
            if c.unsatisfiable:
                continue
            l, r = self._var(c.left), self._var(c.right)
            v = self.block_of[l].pos(l) + c.gap - self.block_of[r].pos(r)
            if v > worst_v:
                worst, worst_v = c, v
        return worst

    # -- block operations ---------------------------------------------------

    def _merge(self, c: SeparationConstraint) -> None:
        l, r = self._var(c.left), self._var(c.right)
        bl, br = self.block_of[l], self.block_of[r]
        if len(br.vars) > len(bl.vars):
            # absorb the smaller side; rebase its offsets so that the
            # constraint is tight: pos(r) = pos(l) + gap
            shift = br.offset[r] - c.gap - bl.offset[l]
            for v in bl.vars:
                br.offset[v] = bl.offset[v] + shift
                self.block_of[v] = br
            br.vars.extend(bl.vars)
            br.active.extend(bl.active)
            for v, val in bl.pinned.items():
                br.pinned[v] = val
            keep = br
        else:
            shift = bl.offset[l] + c.gap - br.offset[r]
            for v in br.vars:
                bl.offset[v] = br.offset[v] + shift
                self.block_of[v] = bl
            bl.vars.extend(br.vars)
            bl.active.extend(br.active)
            for v, val in br.pinned.items():
                bl.pinned[v] = val
            keep = bl
        keep.active.append(c)
        if len(keep.pinned) > 1:
            vals = {v: keep.pinned[v] - keep.offset[v] for v in keep.pinned}
            ref = next(iter(vals.values()))
            if any(abs(val - ref) > _TOL for val in vals.values()):
                path = self._tree_path(keep, *list(keep.pinned)[:2])
                self._reject_from(c, [p for p, _ in path])
        keep.recompute(self.desired)

    def _activate_equality(self, c: SeparationConstraint) -> None:
        l, r = self._var(c.left), self._var(c.right)
        bl, br = self.block_of[l], self.block_of[r]
        if bl is not br:
            self._merge(c)
            return
        # already joined: consistent offsets make c redundant, otherwise
        # it conflicts with the active tree
        if abs((br.offset[r] - bl.offset[l]) - c.gap) <= 1e-7:
            return
        self._expand_or_reject(c)

    def _tree_path(self, block: _Block, src: int, dst: int):
        """Path of (constraint, +1/-1) from src to dst through active constraints."""
        adj: dict[int, list] = {v: [] for v in block.vars}
        for ac in block.active:
            l, r = self._var(ac.left), self._var(ac.right)
            adj[l].append((r, ac, +1))
            adj[r].append((l, ac, -1))
        prev = {src: None}
        dq = deque([src])
        while dq:
            cur = dq.popleft()
            if cur == dst:
                break
            for nxt, ac, sign in adj[cur]:
                if nxt not in prev:
                    prev[nxt] = (cur, ac, sign)
                    dq.append(nxt)
        path = []
        cur = dst
        while prev.get(cur) is not None:
            p, ac, sign = prev[cur]
            path.append((ac, sign))
            cur = p
        path.reverse()
        return path

    def _expand_or_reject(self, c: SeparationConstraint) -> None:
        l, r = self._var(c.left), self._var(c.right)
        block = self.block_of[l]
        path = self._tree_path(block, l, r)
        self._compute_multipliers()
        # an inequality traversed left-to-right gains slack when the block is
        # split there and rejoined through c, so it may be deactivated
        cuttable = [ac for ac, sign in path if not ac.is_eq and sign > 0]
        if cuttable:
            cut = min(cuttable, key=lambda ac: (ac.multiplier, ac.cid))
            self._split(cut)
            bl, br = self.block_of[l], self.block_of[r]
            if bl is not br:
                self._merge(c)
                return
            # cut did not actually separate the endpoints (stale path); fall
            # through to rejection
            path = self._tree_path(block, l, r)
        self._reject_from(c, [ac for ac, _ in path])

    def _reject_from(self, c: SeparationConstraint, path: list[SeparationConstraint]):
        # drop the newcomer first so an infeasible late addition cannot
        # cascade into tearing down established alignments
        if c.priority == Priority.TENTATIVE:
            victim = c
        else:
            tentative_eq = [
                ac for ac in path if ac.priority == Priority.TENTATIVE and ac.is_eq
            ]
            tentative_ineq = [ac for ac in path if ac.priority == Priority.TENTATIVE]
            if tentative_eq:
                victim = choose_rejection(tentative_eq)
            elif tentative_ineq:
                victim = choose_rejection(tentative_ineq)
            else:
                raise DefiniteConflictError([c, *path])
        victim.unsatisfiable = True
        raise _Rejected(victim)

    def _split(self, cut: SeparationConstraint) -> None:
        l, r = self._var(cut.left), self._var(cut.right)
        block = self.block_of[l]
        block.active.remove(cut)
        # reachable set on the left side of the cut
        adj: dict[int, list] = {v: [] for v in block.vars}
        for ac in block.active:
            a, b = self._var(ac.left), self._var(ac.right)
            adj[a].append((b, ac))
            adj[b].append((a, ac))
        left_side = {l}
        dq = deque([l])
        while dq:
            cur = dq.popleft()
            for nxt, _ in adj[cur]:
                if nxt not in left_side:
                    left_side.add(nxt)
                    dq.append(nxt)
        for vars_side in (left_side, set(block.vars) - left_side):
            nb = _Block(next(iter(vars_side)), 0.0, None)
            nb.vars = list(vars_side)
            nb.offset = {v: block.offset[v] for v in vars_side}
            nb.active = [
                ac
                for ac in block.active
                if self._var(ac.left) in vars_side and self._var(ac.right) in vars_side
            ]
            nb.pinned = {v: val for v, val in block.pinned.items() if v in vars_side}
            nb.recompute(self.desired)
            for v in vars_side:
                self.block_of[v] = nb

    # -- multipliers --------------------------------------------------------

    def _compute_multipliers(self) -> None:
        for c in self.constraints:
            c.multiplier = 0.0
        for block in self._blocks():
            if not block.active:
                continue
            # leaf elimination on the active tree: each variable's optimality
            # condition 2(p - d) + sum(+/- lambda) = 0 resolves one multiplier
            residual = {
                v: 2.0 * (block.pos(v) - self.desired[v]) for v in block.vars
            }
            incident: dict[int, list] = {v: [] for v in block.vars}
            for ac in block.active:
                incident[self._var(ac.left)].append(ac)
                incident[self._var(ac.right)].append(ac)
            remaining = {id(ac): ac for ac in block.active}
            degree = {v: len(incident[v]) for v in block.vars}
            leaves = deque(
                v for v in block.vars if degree[v] == 1 and v not in block.pinned
            )
            while leaves:
                v = leaves.popleft()
                ac = next(
                    (a for a in incident[v] if id(a) in remaining), None
                )
                if ac is None:
                    continue
                l, r = self._var(ac.left), self._var(ac.right)
                if v == l:
                    ac.multiplier = -residual[v]
                    other = r
                else:
                    ac.multiplier = residual[v]
                    other = l
                residual[other] += ac.multiplier if other == l else -ac.multiplier
                del remaining[id(ac)]
                degree[other] -= 1
                degree[v] -= 1
                if degree[other] == 1 and other not in block.pinned:
                    leaves.append(other)


class _Rejected(Exception):
    def __init__(self, constraint):
        self.constraint = constraint


def project(
    dim: Dim,
    desired: np.ndarray,
    constraints: Sequence[SeparationConstraint],
    index: Optional[dict[str, int]] = None,
    pins: Optional[dict[int, float]] = None,
) -> tuple[np.ndarray, list[SeparationConstraint]]:
    """Least-squares projection of ``desired`` onto the constraints of ``dim``.

    Returns positions plus the (shared) constraint objects with multipliers
    and unsatisfiable flags updated.  ``pins`` holds exact fixed values for
    individual variables (the drag anchor).
    """
    cs = [c for c in constraints if c.dim == dim]
    proj = _Projector(desired, cs, index, pins)
    positions = proj.solve()
    return positions, cs


def project_layout(
    g: Graph,
    s: LayoutState,
    constraints: Sequence[SeparationConstraint],
    pins_x: Optional[dict[int, float]] = None,
    pins_y: Optional[dict[int, float]] = None,
) -> LayoutState:
    """Project both dimensions of a layout at once."""
    px, _ = project(Dim.X, s.x, constraints, g.index, pins_x)
    py, _ = project(Dim.Y, s.y, constraints, g.index, pins_y)
    return LayoutState(px, py)


# ---------------------------------------------------------------------------
# non-overlap constraint generation
# ---------------------------------------------------------------------------

class NonOverlapMode(str, Enum):
    OFF = "off"
    NODE_SIZES = "node_sizes"
    GRID = "grid"


def _equality_classes(
    g: Graph, constraints: Sequence[SeparationConstraint], dim: Dim
) -> list[int]:
    """Union-find labels joining nodes tied by zero-gap equalities in ``dim``."""
    parent = list(range(g.n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for c in constraints:
        if c.is_eq and c.gap == 0.0 and c.dim == dim and not c.unsatisfiable:
            ra, rb = find(g.index[c.left]), find(g.index[c.right])
            if ra != rb:
                parent[ra] = rb
    return [find(i) for i in range(g.n)]


def generate_non_overlap(
    g: Graph,
    s: LayoutState,
    mode: NonOverlapMode = NonOverlapMode.NODE_SIZES,
    tau: float = 0.0,
    constraints: Sequence[SeparationConstraint] = (),
) -> list[SeparationConstraint]:
    """Definite constraints separating every currently-overlapping node pair.

    For each pair whose (inflated) boxes overlap in both dimensions, one
    constraint is emitted in the dimension needing the least displacement,
    with ties broken toward x.  In grid mode the required gaps are at least
    the grid spacing so no two centres crowd one grid point.  Pairs held at
    equal coordinates by an alignment in ``constraints`` are separated in the
    other dimension (and skipped entirely when aligned in both).
    """
    if mode == NonOverlapMode.OFF:
        return []
    out: list[SeparationConstraint] = []
    w, h = g.widths(), g.heights()
    n = g.n
    cls_x = _equality_classes(g, constraints, Dim.X)
    cls_y = _equality_classes(g, constraints, Dim.Y)
    for i in range(n):
        for j in range(i + 1, n):
            need_x = 0.5 * (w[i] + w[j])
            need_y = 0.5 * (h[i] + h[j])
            if mode == NonOverlapMode.GRID:
                need_x = max(need_x, tau)
                need_y = max(need_y, tau)
            dx = abs(s.x[i] - s.x[j])
            dy = abs(s.y[i] - s.y[j])
            if dx >= need_x or dy >= need_y:
                continue
            same_x = cls_x[i] == cls_x[j]
            same_y = cls_y[i] == cls_y[j]
            # a pair aligned in both dimensions is entailed coincident; emit
            # anyway (x, by the tie rule) so projection can break a tentative
            # alignment rather than leaving the overlap standing
            disp_x = need_x - dx
            disp_y = need_y - dy
            if same_y or (not same_x and disp_x <= disp_y) or (same_x and same_y):
                left, right = (i, j) if s.x[i] <= s.x[j] else (j, i)
                out.append(
                    SeparationConstraint(
                        Dim.X, g.nodes[left].id, g.nodes[right].id, need_x,
                        generated=True,
                    )
                )
            else:
                left, right = (i, j) if s.y[i] <= s.y[j] else (j, i)
                out.append(
                    SeparationConstraint(
                        Dim.Y, g.nodes[left].id, g.nodes[right].id, need_y,
                        generated=True,
                    )
                )
    return out


def overlapping_pairs(g: Graph, s: LayoutState, slack: float = 1e-7) -> list[tuple[int, int]]:
    """Exact box-overlap test used by the pipeline and the test suite."""
    out = []
    w, h = g.widths(), g.heights()
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if (
                abs(s.x[i] - s.x[j]) < 0.5 * (w[i] + w[j]) - slack
                and abs(s.y[i] - s.y[j]) < 0.5 * (h[i] + h[j]) - slack
            ):
                out.append((i, j))
    return out
