// Wire schema shared with the navigation service: snapshot shape, command
// envelopes, and the run-length grid encoding. This module is transport and
// DOM free so both the Node bridge and the browser UI can use it.

export const GRID_UNEXPLORED = 0;
export const GRID_EXPLORED = 1;
export const GRID_OCCUPIED = 2;

export interface GridMeta {
  resolution: number;
  origin: [number, number];
  width: number;
  height: number;
}

export interface SnapshotObject {
  label: string;
  instance_id: number;
  x: number;
  y: number;
  anchor: number;
  observation_count: number;
}

export interface SnapshotFrontier {
  x: number;
  y: number;
  size: number;
  distance: number;
  score: number;
}

export interface PlanRecord {
  step: number;
  reply: string;
  action: string | null;
  outcome: string;
  verified: boolean | null;
  feedback: string | null;
  started_tick: number;
  ended_tick: number;
}

export interface TaskState {
  text: string | null;
  status: "idle" | "running" | "done" | "failed";
  steps: number;
}

export interface Snapshot {
  type: "snapshot";
  tick: number;
  robot: { true: [number, number, number]; est: [number, number, number] };
  grid_rle: [number, number][];
  grid_meta: GridMeta;
  objects: SnapshotObject[];
  scene_graph: { rooms: Record<string, unknown> };
  frontiers: SnapshotFrontier[];
  plan_log: PlanRecord[];
  task: TaskState;
}

export interface Ack {
  type: "ack";
  request_id: number | null;
  applied_tick: number;
}

export interface Rejection {
  type: "rejection";
  request_id: number | null;
  code: string;
  message: string;
}

export type ServerMessage = Snapshot | Ack | Rejection;

export type Command =
  | { type: "task"; text: string }
  | {
      type: "mutate";
      kind: "add_object" | "remove_object" | "move_object";
      object?: { id: number; label: string; position: [number, number] };
      target_id?: number;
      near?: [number, number];
      new_position?: [number, number];
    }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "step"; n: number }
  | { type: "speed"; x: number };

export function decodeGrid(runs: [number, number][], meta: GridMeta): Uint8Array {
  const total = meta.width * meta.height;
  const cells = new Uint8Array(total);
  let at = 0;
  for (const [value, count] of runs) {
    cells.fill(value, at, at + count);
    at += count;
  }
  if (at !== total) {
    throw new Error(`run-length data covers ${at} cells, grid has ${total}`);
  }
  return cells;
}

// Canonical JSON: recursively sorted keys, compact separators. Matches the
// service's transcript serialization so transcripts can be compared as text.
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value === "number" || typeof value === "boolean") {
    return JSON.stringify(value);
  }
  if (typeof value === "string") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const obj = value as Record<string, unknown>;
  const keys = Object.keys(obj).sort();
  return "{" + keys.map((k) => JSON.stringify(k) + ":" + canonicalJson(obj[k])).join(",") + "}";
}

let requestCounter = 0;

export function envelope(command: Command): Command & { request_id: number } {
  requestCounter += 1;
  return { ...command, request_id: requestCounter };
}

export function resetRequestCounter(): void {
  requestCounter = 0;
}
