import { describe, expect, it } from "vitest";

import { Camera } from "../src/camera.js";
import { SnapshotMailbox } from "../src/mailbox.js";
import type { GraphDoc, Snapshot } from "../src/protocol.js";
import { DrawContext, render } from "../src/render.js";

/** Records fillRect calls so tests can recover rendered node centers. */
class RecordingContext implements DrawContext {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 0;
  rects: [number, number, number, number][] = [];
  lines: [number, number, number, number][] = [];
  cleared = 0;
  private cursor: [number, number] | null = null;

  clearRect(): void {
    this.cleared += 1;
    this.rects = [];
    this.lines = [];
  }
  fillRect(x: number, y: number, w: number, h: number): void {
    this.rects.push([x, y, w, h]);
  }
  strokeRect(): void {}
  beginPath(): void {
    this.cursor = null;
  }
  moveTo(x: number, y: number): void {
    this.cursor = [x, y];
  }
  lineTo(x: number, y: number): void {
    if (this.cursor) {
      this.lines.push([this.cursor[0], this.cursor[1], x, y]);
    }
    this.cursor = [x, y];
  }
  stroke(): void {}
}

const GRAPH: GraphDoc = {
  nodes: [
    { id: "a", w: 40, h: 30 },
    { id: "b", w: 40, h: 30 },
    { id: "c", w: 40, h: 30 },
  ],
  edges: [
    ["a", "b"],
    ["b", "c"],
  ],
};

function snap(rev: number, shift = 0): Snapshot {
  return {
    t: "snapshot",
    rev,
    positions: {
      a: [0 + shift, 0],
      b: [100 + shift, 0],
      c: [100 + shift, 80],
    },
    converged: false,
  };
}

const OPTS = { width: 800, height: 600, showGrid: false, tau: 50 };

function centers(ctx: RecordingContext): [number, number][] {
  return ctx.rects.map(([x, y, w, h]) => [x + w / 2, y + h / 2]);
}

describe("renderer", () => {
  it("draws each node box centered on its snapshot position", () => {
    const ctx = new RecordingContext();
    const cam = new Camera(50, 40, 1);
    render(ctx, cam, GRAPH, snap(1), OPTS);
    expect(ctx.rects).toHaveLength(3);
    const got = centers(ctx);
    GRAPH.nodes.forEach((node, i) => {
      const [wx, wy] = snap(1).positions[node.id];
      const [sx, sy] = cam.worldToScreen(wx, wy);
      expect(Math.abs(got[i][0] - sx)).toBeLessThanOrEqual(1);
      expect(Math.abs(got[i][1] - sy)).toBeLessThanOrEqual(1);
    });
    expect(ctx.lines).toHaveLength(2);
  });

  it("a frame drawn from the mailbox shows the latest snapshot only", () => {
    const box = new SnapshotMailbox();
    box.offer(snap(1));
    box.offer(snap(2, 500));
    box.offer(snap(1, 999)); // stale, dropped
    const ctx = new RecordingContext();
    const cam = new Camera(0, 0, 1);
    render(ctx, cam, GRAPH, box.take(), OPTS);
    const got = centers(ctx);
    const want = snap(2, 500).positions;
    GRAPH.nodes.forEach((node, i) => {
      expect(Math.abs(got[i][0] - want[node.id][0])).toBeLessThanOrEqual(1);
      expect(Math.abs(got[i][1] - want[node.id][1])).toBeLessThanOrEqual(1);
    });
  });

  it("renders the dragged node at the optimistic cursor position", () => {
    const ctx = new RecordingContext();
    render(ctx, new Camera(0, 0, 1), GRAPH, snap(3), {
      ...OPTS,
      dragId: "b",
      dragPos: [250, -40],
    });
    const got = centers(ctx);
    expect(Math.abs(got[1][0] - 250)).toBeLessThanOrEqual(1);
    expect(Math.abs(got[1][1] + 40)).toBeLessThanOrEqual(1);
    // the others stay on the snapshot
    expect(Math.abs(got[0][0] - 0)).toBeLessThanOrEqual(1);
    expect(Math.abs(got[2][1] - 80)).toBeLessThanOrEqual(1);
  });

  it("grid mode draws grid lines; empty graph gives a blank canvas", () => {
    const ctx = new RecordingContext();
    render(ctx, new Camera(0, 0, 1), null, null, { ...OPTS, showGrid: true });
    expect(ctx.cleared).toBe(1);
    expect(ctx.rects).toHaveLength(0);
    expect(ctx.lines.length).toBeGreaterThan(0);
    const vertical = ctx.lines.filter(([x0, , x1]) => x0 === x1);
    const spacing = vertical[1][0] - vertical[0][0];
    expect(spacing).toBe(50);
  });

  it("aligned edges land on identical screen rows", () => {
    const ctx = new RecordingContext();
    const cam = new Camera(3.3, 7.7, 1.37);
    render(ctx, cam, GRAPH, snap(4), OPTS);
    // edge a-b is horizontal in world space; pixel snapping must keep
    // both endpoints on the same row
    const [, y0, , y1] = ctx.lines[0];
    expect(y0).toBe(y1);
    expect(Number.isInteger(y0)).toBe(true);
  });
});
