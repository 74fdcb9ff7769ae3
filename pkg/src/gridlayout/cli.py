"""Batch command line runner: layout a corpus, emit SVGs, metrics and a CSV.

Example::

    gridlayout graphs/*.json --mode ACA,NS --out results --csv results/all.csv
    gridlayout --gen-random 20 --seed 7 --mode GS --out results
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from gridlayout.graph import Graph, GridSpec, LayoutState, Node, load_graph
from gridlayout.metrics import compute_report
from gridlayout.solver import (
    DEFAULT_DL,
    DEFAULT_TAU,
    LayoutMode,
    PipelineConfig,
    run_pipeline,
)

CSV_FIELDS = [
    "name",
    "mode",
    "nodes",
    "edges",
    "p_stress",
    "crossings",
    "edge_node_overlaps",
    "angular_resolution",
    "obliqueness",
    "grid_placement",
    "time_total",
]


def random_graph(seed: int, n_lo: int = 10, n_hi: int = 60) -> Graph:
    """Seeded sparse random graph in the size band used for benchmarks."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi + 1))
    target_m = min(int(1.5 * n), n * (n - 1) // 2)
    nodes = [Node(id=f"n{i}", w=40.0, h=30.0) for i in range(n)]
    # random spanning tree first so the graph tends to hang together
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        a = int(order[i])
        b = int(order[rng.integers(0, i)])
        edges.add((min(a, b), max(a, b)))
    while len(edges) < target_m:
        a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return Graph(nodes, sorted((f"n{a}", f"n{b}") for a, b in edges))


def emit_svg(
    g: Graph,
    s: LayoutState,
    constraints: Sequence = (),
    grid: Optional[GridSpec] = None,
) -> bytes:
    """Deterministic standalone SVG: optional grid lines, edges, node boxes."""
    margin = 40.0
    if g.n:
        w, h = g.widths(), g.heights()
        x0 = float(np.min(s.x - w / 2)) - margin
        x1 = float(np.max(s.x + w / 2)) + margin
        y0 = float(np.min(s.y - h / 2)) - margin
        y1 = float(np.max(s.y + h / 2)) + margin
    else:
        x0, y0, x1, y1 = -margin, -margin, margin, margin
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.2f} {y0:.2f} '
        f'{x1 - x0:.2f} {y1 - y0:.2f}">',
    ]
    if grid is not None:
        t = grid.tau
        out.append('<g stroke="#dddddd" stroke-width="0.5">')
        k = int(np.floor(x0 / t))
        while k * t <= x1:
            gx = k * t
            out.append(f'<line x1="{gx:.2f}" y1="{y0:.2f}" x2="{gx:.2f}" y2="{y1:.2f}"/>')
            k += 1
        k = int(np.floor(y0 / t))
        while k * t <= y1:
            gy = k * t
            out.append(f'<line x1="{x0:.2f}" y1="{gy:.2f}" x2="{x1:.2f}" y2="{gy:.2f}"/>')
            k += 1
        out.append("</g>")
    out.append('<g stroke="#555555" stroke-width="1.5">')
    for u, v in g.edges:
        out.append(
            f'<line x1="{s.x[u]:.2f}" y1="{s.y[u]:.2f}" '
            f'x2="{s.x[v]:.2f}" y2="{s.y[v]:.2f}"/>'
        )
    out.append("</g>")
    out.append('<g fill="#9ecae1" stroke="#3182bd">')
    for i, node in enumerate(g.nodes):
        out.append(
            f'<rect x="{s.x[i] - node.w / 2:.2f}" y="{s.y[i] - node.h / 2:.2f}" '
            f'width="{node.w:.2f}" height="{node.h:.2f}"/>'
        )
    out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


def _run_one(task: tuple) -> dict:
    """Worker: lay out one (graph, mode) pair and write its artifacts."""
    name, doc, mode_name, cfg_kwargs, out_dir, seed = task
    from gridlayout.graph import graph_from_document

    g = graph_from_document(doc)
    mode = LayoutMode(mode_name)
    cfg = PipelineConfig(**cfg_kwargs)
    written: list[Path] = []
    try:
        result = run_pipeline(g, mode, seed, cfg)
        grid = result.grid if mode in (LayoutMode.GS, LayoutMode.NS_GS, LayoutMode.ACA_GS) else None
        report = compute_report(
            g,
            result.ideal,
            result.layout,
            result.grid,
            result.params.wp if result.params else 1.0 / cfg.dL,
            result.timings,
        )
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            svg_path = out / f"{name}.{mode.value}.svg"
            written.append(svg_path)
            svg_path.write_bytes(emit_svg(g, result.layout, result.constraints, grid))
            met_path = out / f"{name}.{mode.value}.metrics.json"
            written.append(met_path)
            met_path.write_text(json.dumps(report.to_json(), indent=2) + "\n")
        rep = report.to_json()
        return {
            "ok": True,
            "row": {
                "name": name,
                "mode": mode.value,
                "nodes": g.n,
                "edges": len(g.edges),
                "p_stress": f"{rep['p_stress']:.6g}",
                "crossings": rep["crossings"],
                "edge_node_overlaps": rep["edge_node_overlaps"],
                "angular_resolution": f"{rep['angular_resolution']:.6g}",
                "obliqueness": f"{rep['obliqueness']:.6g}",
                "grid_placement": f"{rep['grid_placement']:.6g}",
                "time_total": f"{sum(result.timings.values()):.3f}",
            },
        }
    except Exception as e:  # noqa: BLE001 - a batch run reports, not crashes
        for p in written:
            p.unlink(missing_ok=True)
        return {"ok": False, "name": name, "mode": mode_name, "error": str(e)}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gridlayout",
        description="Grid-like graph layout: batch runner with SVG and metric output.",
    )
    ap.add_argument("inputs", nargs="*", help="graph JSON files or directories of them")
    ap.add_argument(
        "--mode",
        default="FD",
        help="comma-separated list out of FD,NS,GS,NS_GS,ACA,ACA_GS",
    )
    ap.add_argument("--tau", type=float, default=DEFAULT_TAU, help="grid spacing")
    ap.add_argument("--ideal-edge", type=float, default=DEFAULT_DL, help="ideal edge length")
    ap.add_argument("--seed", type=int, default=0, help="layout and generator seed")
    ap.add_argument("--aca-cost", choices=["ds", "ob"], default="ds")
    ap.add_argument("--aca-bend", choices=["deg2", "nonleaf2"], default="deg2")
    ap.add_argument("--out", default=None, help="output directory for SVG and metrics files")
    ap.add_argument(
        "--gen-random",
        type=int,
        default=0,
        metavar="N",
        help="generate N seeded random graphs instead of reading files",
    )
    ap.add_argument("--csv", default=None, help="write an aggregate CSV to this path")
    ap.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return ap


def _collect_graphs(args) -> list[tuple[str, dict]]:
    graphs: list[tuple[str, dict]] = []
    for raw in args.inputs:
        p = Path(raw)
        paths = sorted(p.glob("*.json")) if p.is_dir() else [p]
        for path in paths:
            g = load_graph(path.read_text())
            graphs.append((path.stem, g.to_document()))
    for i in range(args.gen_random):
        g = random_graph(args.seed + i)
        graphs.append((f"random{i:03d}", g.to_document()))
    return graphs


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        modes = [LayoutMode(m.strip()) for m in args.mode.split(",") if m.strip()]
    except ValueError:
        print(f"unknown mode in {args.mode!r}", file=sys.stderr)
        return 2
    if not modes:
        print("no mode given", file=sys.stderr)
        return 2
    if not args.inputs and not args.gen_random:
        print("no inputs: pass graph files or --gen-random N", file=sys.stderr)
        return 2

    try:
        graphs = _collect_graphs(args)
    except Exception as e:  # noqa: BLE001
        print(f"error reading inputs: {e}", file=sys.stderr)
        return 1

    cfg_kwargs = dict(
        tau=args.tau,
        dL=args.ideal_edge,
        aca_cost=args.aca_cost,
        aca_bend=args.aca_bend,
    )
    tasks = [
        (name, doc, mode.value, cfg_kwargs, args.out, args.seed)
        for name, doc in graphs
        for mode in modes
    ]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    failed = False
    rows = []
    for res in results:
        if res["ok"]:
            rows.append(res["row"])
        else:
            failed = True
            print(f"FAILED {res['name']} [{res['mode']}]: {res['error']}", file=sys.stderr)

    if args.csv:
        csv_path = Path(args.csv)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
            writer.writeheader()
            writer.writerows(rows)

    for row in rows:
        print(
            f"{row['name']} [{row['mode']}] obliqueness={row['obliqueness']} "
            f"grid={row['grid_placement']} t={row['time_total']}s"
        )
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
