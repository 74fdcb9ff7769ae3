"""Constrained force-directed layout loop and the batch pipeline.

``cfdl`` alternates Newton-sized gradient steps with per-dimension projection
onto the separation constraints, guarded by a halving line search so the goal
never increases.  ``run_pipeline`` wraps it in the two-phase recipe: untangle
with plain stress first, then beautify with snap terms, non-overlap
constraints and (optionally) adaptive alignment.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from gridlayout import stress
from gridlayout.constraints import (
    NonOverlapMode,
    Priority,
    SeparationConstraint,
    generate_non_overlap,
    overlapping_pairs,
    project_layout,
)
from gridlayout.graph import (
    Graph,
    GridSpec,
    IdealDistances,
    LayoutState,
    shortest_path_distances,
)
from gridlayout.stress import StressParams

DEFAULT_DL = 100.0
DEFAULT_TAU = 50.0
DEFAULT_K_NS = 1.0
DEFAULT_K_GS = 400.0
DEFAULT_K_EN = 10.0

MAX_ITER = 10_000
REL_TOL = 1e-4
_SLACK = 1e-12


class LayoutMode(str, Enum):
    FD = "FD"
    NS = "NS"
    GS = "GS"
    NS_GS = "NS_GS"
    ACA = "ACA"
    ACA_GS = "ACA_GS"


def cfdl(
    g: Graph,
    d: IdealDistances,
    s0: LayoutState,
    params: StressParams,
    constraints: Sequence[SeparationConstraint] = (),
    pins_x: Optional[dict[int, float]] = None,
    pins_y: Optional[dict[int, float]] = None,
    max_iter: int = MAX_ITER,
    rel_tol: float = REL_TOL,
) -> LayoutState:
    """Minimize the goal subject to the constraints, starting from ``s0``.

    Terminates when an iteration improves the goal by less than ``rel_tol``
    relative, when no backtracking step improves it at all, or after
    ``max_iter`` iterations.  The result satisfies every satisfiable
    constraint (projection runs even on the input).
    """
    constrained = bool(constraints) or bool(pins_x) or bool(pins_y)

    def proj(state: LayoutState) -> LayoutState:
        if not constrained:
            return state
        return project_layout(g, state, constraints, pins_x, pins_y)

    def evaluate(state: LayoutState):
        aligned = (
            stress.detect_aligned_edges(g, state) if params.k_en else stress.AlignedEdges()
        )
        return stress.goal_breakdown(g, d, state, params, aligned), aligned

    s = proj(s0.copy())
    breakdown, aligned = evaluate(s)
    fallback_step = 0.1 * d.dL

    for _ in range(max_iter):
        _, grad = stress.goal_and_gradient(g, d, s, params, aligned)
        gg = float(np.dot(grad, grad))
        if gg == 0.0:
            break
        ghg = stress.hessian_quadform(g, d, s, params, aligned, grad)
        alpha = stress.step_size(grad, ghg, fallback_step)

        accepted = None
        t = alpha
        for _halving in range(11):
            cand = LayoutState(s.x - t * grad[: g.n], s.y - t * grad[g.n :])
            cand = proj(cand)
            cand_breakdown, cand_aligned = evaluate(cand)
            if cand_breakdown.total <= breakdown.total + _SLACK:
                accepted = (cand, cand_breakdown, cand_aligned)
                break
            t *= 0.5
        if accepted is None:
            break
        prev_total = breakdown.total
        s, breakdown, aligned = accepted
        if prev_total - breakdown.total < rel_tol * max(abs(prev_total), 1e-12):
            break
    return s


@dataclass
class PipelineResult:
    layout: LayoutState
    constraints: list[SeparationConstraint]
    timings: dict[str, float]
    phase1: LayoutState
    grid: Optional[GridSpec] = None
    ideal: Optional[IdealDistances] = None
    params: Optional[StressParams] = None
    aca_selections: int = 0


@dataclass
class PipelineConfig:
    tau: float = DEFAULT_TAU
    dL: float = DEFAULT_DL
    k_ns: float = DEFAULT_K_NS
    k_gs: float = DEFAULT_K_GS
    k_en: float = DEFAULT_K_EN
    aca_cost: str = "ds"
    aca_bend: str = "deg2"
    user_constraints: list[SeparationConstraint] = field(default_factory=list)


def random_initial_layout(g: Graph, seed: int, dL: float) -> LayoutState:
    rng = np.random.default_rng(seed)
    side = np.sqrt(max(g.n, 1)) * dL
    return LayoutState(rng.uniform(0.0, side, g.n), rng.uniform(0.0, side, g.n))


def solve_with_overlap_removal(
    g: Graph,
    d: IdealDistances,
    s: LayoutState,
    params: StressParams,
    base_constraints: list[SeparationConstraint],
    overlap_mode: NonOverlapMode,
    tau: float,
    max_rounds: int = 20,
) -> tuple[LayoutState, list[SeparationConstraint]]:
    """Solve, regenerating non-overlap constraints until no boxes overlap.

    Constraints are regenerated fresh each round (stale ones could encode a
    reversed ordering after the solve).  A final projection-only loop
    guarantees an exactly overlap-free result.
    """
    cons = list(base_constraints)
    for _ in range(max_rounds):
        nov = generate_non_overlap(g, s, overlap_mode, tau, base_constraints)
        cons = list(base_constraints) + nov
        s = cfdl(g, d, s, params, cons)
        if not overlapping_pairs(g, s):
            return s, cons
    # projection-only cleanup: constraints accumulate so a pair separated in
    # one round cannot be pushed back by a later one
    extra: list[SeparationConstraint] = []
    for _ in range(50):
        if not overlapping_pairs(g, s):
            break
        extra += generate_non_overlap(g, s, overlap_mode, tau, base_constraints + extra)
        cons = list(base_constraints) + extra
        s = project_layout(g, s, cons)
    return s, cons


def snap_layout_to_grid(
    g: Graph,
    s: LayoutState,
    grid: GridSpec,
    constraints: Sequence[SeparationConstraint],
) -> LayoutState:
    """Constrained rounding: desired positions are the nearest grid points,
    projection finds the feasible layout of least squared distance to them."""
    from gridlayout.graph import closest_grid_coords

    desired = LayoutState(
        closest_grid_coords(np.asarray(s.x, dtype=float), grid.tau),
        closest_grid_coords(np.asarray(s.y, dtype=float), grid.tau),
    )
    return project_layout(g, desired, constraints)


def run_pipeline(
    g: Graph,
    mode: LayoutMode,
    seed: int,
    config: Optional[PipelineConfig] = None,
) -> PipelineResult:
    """Two-phase layout: seeded random start, plain-stress untangle, then the
    mode-specific beautification."""
    from gridlayout.aca import CostModel, adapt_const_align

    cfg = config or PipelineConfig()
    mode = LayoutMode(mode)
    tau = cfg.tau
    grid = GridSpec(tau)
    grid_mode = mode in (LayoutMode.GS, LayoutMode.NS_GS)
    # grid recipes want ideal edge lengths equal to the grid size already in
    # the untangling phase
    dL = tau if grid_mode else cfg.dL

    timings: dict[str, float] = {}
    t0 = time.monotonic()
    d = shortest_path_distances(g, dL)
    base = StressParams(wp=1.0 / dL)
    s = random_initial_layout(g, seed, dL)
    s = cfdl(g, d, s, base, [])
    timings["untangle"] = time.monotonic() - t0
    phase1 = s.copy()

    sigma = tau / 2.0
    constraints: list[SeparationConstraint] = list(cfg.user_constraints)
    selections = 0
    params = base

    t1 = time.monotonic()
    if mode == LayoutMode.FD:
        s, constraints = solve_with_overlap_removal(
            g, d, s, base, constraints, NonOverlapMode.NODE_SIZES, tau
        )
    elif mode == LayoutMode.NS:
        params = StressParams(
            k_ns=cfg.k_ns, k_en=cfg.k_en, sigma=sigma, wp=1.0 / dL
        )
        s, constraints = solve_with_overlap_removal(
            g, d, s, params, constraints, NonOverlapMode.NODE_SIZES, tau
        )
    elif mode in (LayoutMode.GS, LayoutMode.NS_GS):
        params = StressParams(
            k_ns=cfg.k_ns if mode == LayoutMode.NS_GS else 0.0,
            k_gs=cfg.k_gs,
            k_en=cfg.k_en,
            sigma=sigma,
            wp=1.0 / dL,
            grid=grid,
        )
        s, constraints = solve_with_overlap_removal(
            g, d, s, params, constraints, NonOverlapMode.GRID, tau
        )
    elif mode in (LayoutMode.ACA, LayoutMode.ACA_GS):
        model = CostModel(basis=cfg.aca_cost, bend_rule=cfg.aca_bend)
        result = adapt_const_align(g, d, constraints, model, s, base)
        s, selections = result.layout, result.selections
        # user constraints plus the surviving separated-alignment pairs;
        # non-overlap constraints get layered on top per phase
        aca_base = [c for c in result.constraints if not c.unsatisfiable]
        params = StressParams(k_en=cfg.k_en, sigma=sigma, wp=1.0 / dL)
        s, constraints = solve_with_overlap_removal(
            g, d, s, params, aca_base, NonOverlapMode.NODE_SIZES, tau
        )
        timings["aca"] = time.monotonic() - t1
        if mode == LayoutMode.ACA_GS:
            t2 = time.monotonic()
            # alignments earned by ACA are kept hard through the grid phase
            aca_base = [c for c in aca_base if not c.unsatisfiable]
            for c in aca_base:
                c.priority = Priority.DEFINITE
            d = shortest_path_distances(g, tau)
            params = StressParams(
                k_gs=cfg.k_gs, k_en=cfg.k_en, sigma=sigma, wp=1.0 / tau, grid=grid
            )
            s, constraints = solve_with_overlap_removal(
                g, d, s, params, aca_base, NonOverlapMode.GRID, tau
            )
            # soft grid forces get close; polish with a few rounds of a much
            # stiffer grid pull followed by a least-squares snap of every
            # node onto its nearest grid point, subject to the same
            # alignment and non-overlap constraints
            polish = StressParams(
                k_gs=10.0 * cfg.k_gs, k_en=cfg.k_en, sigma=sigma, wp=1.0 / tau, grid=grid
            )
            for _ in range(3):
                nov = generate_non_overlap(g, s, NonOverlapMode.GRID, tau, aca_base)
                constraints = aca_base + nov
                s = cfdl(g, d, s, polish, constraints, max_iter=200, rel_tol=1e-8)
                s = snap_layout_to_grid(g, s, grid, constraints)
            extra: list[SeparationConstraint] = []
            for _ in range(50):
                if not overlapping_pairs(g, s):
                    break
                extra += generate_non_overlap(
                    g, s, NonOverlapMode.GRID, tau, aca_base + extra
                )
                constraints = aca_base + extra
                s = project_layout(g, s, constraints)
            timings["grid"] = time.monotonic() - t2
    if "aca" not in timings:
        timings["beautify"] = time.monotonic() - t1

    return PipelineResult(
        layout=s,
        constraints=constraints,
        timings=timings,
        phase1=phase1,
        grid=grid,
        ideal=d,
        params=params,
        aca_selections=selections,
    )
