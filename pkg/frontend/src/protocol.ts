/** Message and event shapes of the layout service WebSocket protocol. */

export interface NodeDoc {
  id: string;
  w: number;
  h: number;
}

export interface GraphDoc {
  nodes: NodeDoc[];
  edges: [string, string][];
}

export type LayoutMode = "FD" | "NS" | "GS" | "NS_GS" | "ACA" | "ACA_GS";

export const MODES: LayoutMode[] = ["FD", "NS", "GS", "NS_GS", "ACA", "ACA_GS"];

export function isGridMode(mode: LayoutMode): boolean {
  return mode === "GS" || mode === "NS_GS" || mode === "ACA_GS";
}

export type ClientMessage =
  | { t: "load"; graph: GraphDoc }
  | { t: "mode"; mode: LayoutMode; tau?: number }
  | { t: "drag_start"; id: string }
  | { t: "drag_move"; x: number; y: number }
  | { t: "drag_end" }
  | { t: "constraint_del"; cid: number }
  | { t: "save" };

export interface Snapshot {
  t: "snapshot";
  rev: number;
  positions: Record<string, [number, number]>;
  converged: boolean;
}

export interface ConstraintInfo {
  cid: number;
  dim: string;
  left: string;
  right: string;
  gap: number;
  is_eq: boolean;
  unsatisfiable: boolean;
}

export type ServerEvent =
  | Snapshot
  | { t: "constraints"; constraints: ConstraintInfo[] }
  | { t: "metrics"; [k: string]: unknown }
  | { t: "save"; graph: GraphDoc; positions: Record<string, [number, number]> }
  | { t: "error"; msg: string };
