"""Interactive layout session: protocol message handling plus a step loop.

The session owns one graph, its layout and constraints.  ``handle_message``
applies a client message and returns any immediately-produced events;
``step`` advances the background solve by a few iterations and publishes a
snapshot when something moved.  The transport (see ``service``) just pumps
messages in and events out, so all interaction semantics live here and are
testable without a server.

During a drag the dragged node is pinned exactly to the cursor (except in
grid mode, where it rides the cursor unpinned and snaps to the nearest grid
point on release) and non-overlap constraints are suspended until release.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from gridlayout import stress
from gridlayout.constraints import (
    DefiniteConflictError,
    NonOverlapMode,
    SeparationConstraint,
    generate_non_overlap,
)
from gridlayout.graph import (
    Graph,
    GridSpec,
    LayoutState,
    closest_grid_point,
    graph_from_document,
)
from gridlayout.metrics import compute_report
from gridlayout.solver import (
    DEFAULT_TAU,
    LayoutMode,
    PipelineConfig,
    cfdl,
    run_pipeline,
)
from gridlayout.stress import StressParams, snap_radii_node_sizes

_CONV_TOL = 1e-9
_STEP_ITERS = 5


@dataclass
class DragState:
    node: int
    cursor: tuple[float, float]
    pinned: bool


class SessionError(Exception):
    pass


class Session:
    """One client's layout state machine."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.mode = LayoutMode.FD
        self.tau = DEFAULT_TAU
        self.graph: Optional[Graph] = None
        self.layout: Optional[LayoutState] = None
        self.ideal = None
        self.params = StressParams()
        self.grid = GridSpec(self.tau)
        self.user_constraints: list[SeparationConstraint] = []
        self.layout_constraints: list[SeparationConstraint] = []
        self.non_overlap: list[SeparationConstraint] = []
        self.drag: Optional[DragState] = None
        self.revision = 0
        self.converged = True
        self._goal = 0.0

    # -- message handling ---------------------------------------------------

    def handle_message(self, msg: dict) -> list[dict]:
        """Apply one client message; invalid messages leave the session as-is."""
        try:
            t = msg.get("t")
            if t == "load":
                return self._on_load(msg)
            if t == "mode":
                return self._on_mode(msg)
            if t == "drag_start":
                return self._on_drag_start(msg)
            if t == "drag_move":
                return self._on_drag_move(msg)
            if t == "drag_end":
                return self._on_drag_end(msg)
            if t == "constraint_add":
                return self._on_constraint_add(msg)
            if t == "constraint_del":
                return self._on_constraint_del(msg)
            if t == "save":
                return self._on_save(msg)
            raise SessionError(f"unknown message type {t!r}")
        except (SessionError, DefiniteConflictError, KeyError, ValueError, TypeError) as e:
            return [{"t": "error", "msg": str(e)}]

    def _require_graph(self) -> Graph:
        if self.graph is None:
            raise SessionError("no graph loaded")
        return self.graph

    def _on_load(self, msg: dict) -> list[dict]:
        g = graph_from_document(msg["graph"])
        self.graph = g
        self.drag = None
        self.user_constraints = []
        return self._relayout()

    def _on_mode(self, msg: dict) -> list[dict]:
        mode = LayoutMode(msg["mode"])
        tau = float(msg.get("tau", self.tau))
        if tau <= 0:
            raise SessionError("tau must be positive")
        self.mode = mode
        self.tau = tau
        if self.graph is None:
            return []
        return self._relayout()

    def _relayout(self) -> list[dict]:
        """Run the batch pipeline for the current mode, then keep it live."""
        g = self._require_graph()
        cfg = PipelineConfig(tau=self.tau, user_constraints=list(self.user_constraints))
        result = run_pipeline(g, self.mode, self.seed, cfg)
        self.layout = result.layout
        self.ideal = result.ideal
        self.grid = result.grid or GridSpec(self.tau)
        self.params = self._interactive_params(result.params or StressParams())
        # the pipeline's constraint list includes its last non-overlap batch;
        # keep the persistent ones and regenerate non-overlap from scratch
        self.layout_constraints = [
            c for c in result.constraints if not c.unsatisfiable and not c.generated
        ]
        self.non_overlap = []
        self._refresh_non_overlap()
        self.converged = False
        self._goal = self._current_goal()
        return [self._snapshot_event(), self.constraints_event()]

    def _interactive_params(self, base: StressParams) -> StressParams:
        """Batch params adjusted for interaction: per-pair snap radii."""
        g = self._require_graph()
        if base.k_ns:
            ax, ay = snap_radii_node_sizes(g)
            return replace(base, ns_sigma_x=ax, ns_sigma_y=ay)
        return base

    def _overlap_mode(self) -> NonOverlapMode:
        if self.mode in (LayoutMode.GS, LayoutMode.NS_GS, LayoutMode.ACA_GS):
            return NonOverlapMode.GRID
        return NonOverlapMode.NODE_SIZES

    def _refresh_non_overlap(self) -> None:
        g = self._require_graph()
        self.non_overlap = generate_non_overlap(
            g, self.layout, self._overlap_mode(), self.tau, self.layout_constraints
        )

    def _on_drag_start(self, msg: dict) -> list[dict]:
        g = self._require_graph()
        node_id = msg["id"]
        if node_id not in g.index:
            raise SessionError(f"unknown node id {node_id!r}")
        i = g.index[node_id]
        cursor = (float(self.layout.x[i]), float(self.layout.y[i]))
        grid_mode = self.mode in (LayoutMode.GS, LayoutMode.NS_GS, LayoutMode.ACA_GS)
        self.drag = DragState(node=i, cursor=cursor, pinned=not grid_mode)
        self.non_overlap = []
        if grid_mode:
            self.params = replace(self.params, gs_exclude=frozenset({i}))
        self.converged = False
        return []

    def _on_drag_move(self, msg: dict) -> list[dict]:
        if self.drag is None:
            raise SessionError("drag_move without drag_start")
        x, y = float(msg["x"]), float(msg["y"])
        self.drag.cursor = (x, y)
        i = self.drag.node
        self.layout.x[i] = x
        self.layout.y[i] = y
        self.converged = False
        return []

    def _on_drag_end(self, msg: dict) -> list[dict]:
        if self.drag is None:
            raise SessionError("drag_end without drag_start")
        i = self.drag.node
        self.drag = None
        if self.params.gs_exclude:
            self.params = replace(self.params, gs_exclude=frozenset())
        if self.mode in (LayoutMode.GS, LayoutMode.NS_GS, LayoutMode.ACA_GS):
            gx, gy = closest_grid_point(
                (float(self.layout.x[i]), float(self.layout.y[i])), self.grid
            )
            self.layout.x[i] = gx
            self.layout.y[i] = gy
        self._refresh_non_overlap()
        self.converged = False
        return []

    def _on_constraint_add(self, msg: dict) -> list[dict]:
        g = self._require_graph()
        c = SeparationConstraint.from_json(msg)
        if c.left not in g.index or c.right not in g.index:
            raise SessionError("constraint references unknown node")
        self.user_constraints.append(c)
        self.layout_constraints.append(c)
        self.converged = False
        return [self.constraints_event()]

    def _on_constraint_del(self, msg: dict) -> list[dict]:
        cid = int(msg["cid"])
        match = [c for c in self.user_constraints if c.cid == cid]
        if not match:
            raise SessionError(f"no constraint with cid {cid}")
        for c in match:
            self.user_constraints.remove(c)
            if c in self.layout_constraints:
                self.layout_constraints.remove(c)
        self.converged = False
        return [self.constraints_event()]

    def _on_save(self, msg: dict) -> list[dict]:
        g = self._require_graph()
        return [
            {
                "t": "save",
                "graph": g.to_document(),
                "positions": {
                    k: [vx, vy] for k, (vx, vy) in self.layout.positions(g).items()
                },
                "constraints": [c.to_json() | {"cid": c.cid} for c in self.user_constraints],
            }
        ]

    # -- background solve ----------------------------------------------------

    def _active_constraints(self) -> list[SeparationConstraint]:
        return self.layout_constraints + self.non_overlap

    def _pins(self) -> tuple[Optional[dict], Optional[dict]]:
        if self.drag is None or not self.drag.pinned:
            return None, None
        i = self.drag.node
        return {i: self.drag.cursor[0]}, {i: self.drag.cursor[1]}

    def _current_goal(self) -> float:
        g = self._require_graph()
        aligned = (
            stress.detect_aligned_edges(g, self.layout)
            if self.params.k_en
            else stress.AlignedEdges()
        )
        return stress.goal_breakdown(g, self.ideal, self.layout, self.params, aligned).total

    def step(self) -> list[dict]:
        """Advance the solve a little; returns the events to publish."""
        if self.graph is None or self.converged:
            return []
        pins_x, pins_y = self._pins()
        cons = self._active_constraints()
        try:
            self.layout = cfdl(
                self.graph,
                self.ideal,
                self.layout,
                self.params,
                cons,
                pins_x,
                pins_y,
                max_iter=_STEP_ITERS,
                rel_tol=0.0,
            )
        except DefiniteConflictError as e:
            self.converged = True
            return [{"t": "error", "msg": str(e)}]
        goal = self._current_goal()
        done = abs(self._goal - goal) <= _CONV_TOL * max(abs(self._goal), 1.0)
        self._goal = goal
        events = [self._snapshot_event(done and self.drag is None)]
        if done and self.drag is None:
            self.converged = True
            events.append(self.metrics_event())
        return events

    # -- events --------------------------------------------------------------

    def _snapshot_event(self, converged: bool = False) -> dict:
        g = self._require_graph()
        self.revision += 1
        return {
            "t": "snapshot",
            "rev": self.revision,
            "positions": {
                n.id: [float(self.layout.x[i]), float(self.layout.y[i])]
                for i, n in enumerate(g.nodes)
            },
            "converged": bool(converged),
        }

    def constraints_event(self) -> dict:
        return {
            "t": "constraints",
            "constraints": [
                c.to_json() | {"cid": c.cid, "unsatisfiable": c.unsatisfiable}
                for c in self._active_constraints()
            ],
        }

    def metrics_event(self) -> dict:
        g = self._require_graph()
        report = compute_report(
            g, self.ideal, self.layout, self.grid, self.params.wp
        )
        return {"t": "metrics"} | report.to_json()
