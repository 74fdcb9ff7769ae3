import { Camera } from "./camera.js";
import type { GraphDoc, Snapshot } from "./protocol.js";

/**
 * The slice of CanvasRenderingContext2D the renderer touches, so tests can
 * substitute a recording stub.
 */
export interface DrawContext {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
}

export interface RenderOptions {
  width: number;
  height: number;
  showGrid: boolean;
  tau: number;
  /** Node id rendered at an optimistic position while a drag is in flight. */
  dragId?: string | null;
  dragPos?: [number, number] | null;
  selectedId?: string | null;
}

/** Screen-space pixel snap keeping aligned edges exactly collinear. */
function px(v: number): number {
  return Math.round(v);
}

function nodeScreenRect(
  cam: Camera,
  cx: number,
  cy: number,
  w: number,
  h: number
): [number, number, number, number] {
  const [sx, sy] = cam.worldToScreen(cx, cy);
  const sw = Math.max(w * cam.zoom, 4);
  const sh = Math.max(h * cam.zoom, 4);
  return [px(sx - sw / 2), px(sy - sh / 2), Math.round(sw), Math.round(sh)];
}

function drawGrid(
  ctx: DrawContext,
  cam: Camera,
  width: number,
  height: number,
  tau: number
): void {
  const step = tau * cam.zoom;
  if (step < 4) {
    return;
  }
  ctx.strokeStyle = "#e3e8ee";
  ctx.lineWidth = 1;
  const [wx0, wy0] = cam.screenToWorld(0, 0);
  const x0 = Math.floor(wx0 / tau) * tau;
  const y0 = Math.floor(wy0 / tau) * tau;
  ctx.beginPath();
  for (let wx = x0; ; wx += tau) {
    const [sx] = cam.worldToScreen(wx, 0);
    if (sx > width) break;
    ctx.moveTo(px(sx), 0);
    ctx.lineTo(px(sx), height);
  }
  for (let wy = y0; ; wy += tau) {
    const [, sy] = cam.worldToScreen(0, wy);
    if (sy > height) break;
    ctx.moveTo(0, px(sy));
    ctx.lineTo(width, px(sy));
  }
  ctx.stroke();
}

/**
 * Immediate-mode redraw of one frame: grid, edges, then node boxes.
 *
 * Every node position comes from the snapshot except the dragged node,
 * which is drawn at the cursor optimistically until the next snapshot
 * reconciles it.
 */
export function render(
  ctx: DrawContext,
  cam: Camera,
  graph: GraphDoc | null,
  snapshot: Snapshot | null,
  opts: RenderOptions
): void {
  ctx.clearRect(0, 0, opts.width, opts.height);
  if (opts.showGrid) {
    drawGrid(ctx, cam, opts.width, opts.height, opts.tau);
  }
  if (graph === null || snapshot === null) {
    return;
  }
  const pos = (id: string): [number, number] | null => {
    if (id === opts.dragId && opts.dragPos) {
      return opts.dragPos;
    }
    return snapshot.positions[id] ?? null;
  };

  ctx.strokeStyle = "#7a8699";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  for (const [a, b] of graph.edges) {
    const pa = pos(a);
    const pb = pos(b);
    if (pa === null || pb === null) continue;
    const [ax, ay] = cam.worldToScreen(pa[0], pa[1]);
    const [bx, by] = cam.worldToScreen(pb[0], pb[1]);
    ctx.moveTo(px(ax), px(ay));
    ctx.lineTo(px(bx), px(by));
  }
  ctx.stroke();

  for (const node of graph.nodes) {
    const p = pos(node.id);
    if (p === null) continue;
    const [x, y, w, h] = nodeScreenRect(cam, p[0], p[1], node.w, node.h);
    ctx.fillStyle = node.id === opts.dragId ? "#ffd9a0" : "#cfe3ff";
    ctx.strokeStyle = node.id === opts.selectedId ? "#d4522a" : "#3b5d8f";
    ctx.lineWidth = node.id === opts.selectedId ? 2 : 1;
    ctx.fillRect(x, y, w, h);
    ctx.strokeRect(x, y, w, h);
  }
}
