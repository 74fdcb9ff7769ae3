import { Camera } from "./camera.js";
import type {
  ClientMessage,
  GraphDoc,
  LayoutMode,
  Snapshot,
} from "./protocol.js";

/**
 * Turns pointer and widget events into protocol messages.
 *
 * Dragging a node sends drag_start / drag_move / drag_end; moves are
 * coalesced so at most one drag_move goes out per flush (the render loop
 * flushes once per frame). Dragging empty canvas pans the camera and sends
 * nothing. The editor never moves nodes itself: positions only change via
 * snapshots, plus the transient optimistic cursor position exposed through
 * dragId/dragPos for the renderer.
 */
export class Editor {
  readonly camera: Camera;
  graph: GraphDoc | null = null;
  mode: LayoutMode = "FD";
  tau = 50;
  selectedId: string | null = null;
  dragId: string | null = null;
  dragPos: [number, number] | null = null;

  private send: (msg: ClientMessage) => void;
  private getSnapshot: () => Snapshot | null;
  private pendingMove: [number, number] | null = null;
  private panning = false;
  private lastPointer: [number, number] = [0, 0];

  constructor(
    send: (msg: ClientMessage) => void,
    getSnapshot: () => Snapshot | null,
    camera = new Camera()
  ) {
    this.send = send;
    this.getSnapshot = getSnapshot;
    this.camera = camera;
  }

  /** Topmost node whose box contains the given world point, if any. */
  hitTest(wx: number, wy: number): string | null {
    const snap = this.getSnapshot();
    if (this.graph === null || snap === null) {
      return null;
    }
    for (let i = this.graph.nodes.length - 1; i >= 0; i--) {
      const node = this.graph.nodes[i];
      const p = snap.positions[node.id];
      if (!p) continue;
      if (
        Math.abs(wx - p[0]) <= node.w / 2 &&
        Math.abs(wy - p[1]) <= node.h / 2
      ) {
        return node.id;
      }
    }
    return null;
  }

  pointerDown(sx: number, sy: number): void {
    this.lastPointer = [sx, sy];
    const [wx, wy] = this.camera.screenToWorld(sx, sy);
    const hit = this.hitTest(wx, wy);
    if (hit !== null) {
      this.dragId = hit;
      this.dragPos = [wx, wy];
      this.selectedId = hit;
      this.send({ t: "drag_start", id: hit });
    } else {
      this.panning = true;
      this.selectedId = null;
    }
  }

  pointerMove(sx: number, sy: number): void {
    const [dx, dy] = [sx - this.lastPointer[0], sy - this.lastPointer[1]];
    this.lastPointer = [sx, sy];
    if (this.dragId !== null) {
      const world = this.camera.screenToWorld(sx, sy);
      this.dragPos = world;
      this.pendingMove = world;
    } else if (this.panning) {
      this.camera.panBy(dx, dy);
    }
  }

  pointerUp(): void {
    if (this.dragId !== null) {
      this.flushMoves();
      this.send({ t: "drag_end" });
      this.dragId = null;
      this.dragPos = null;
    }
    this.panning = false;
  }

  /** Send the newest buffered drag_move; called once per frame. */
  flushMoves(): void {
    if (this.pendingMove !== null) {
      const [x, y] = this.pendingMove;
      this.pendingMove = null;
      this.send({ t: "drag_move", x, y });
    }
  }

  wheel(sx: number, sy: number, deltaY: number): void {
    this.camera.zoomAt(sx, sy, Math.exp(-deltaY * 0.001));
  }

  setMode(mode: LayoutMode): void {
    this.mode = mode;
    this.send({ t: "mode", mode, tau: this.tau });
  }

  setTau(tau: number): void {
    this.tau = tau;
    this.send({ t: "mode", mode: this.mode, tau });
  }

  loadGraph(graph: GraphDoc): void {
    this.graph = graph;
    this.selectedId = null;
    this.dragId = null;
    this.dragPos = null;
    this.pendingMove = null;
    this.send({ t: "load", graph });
  }
}
