// Console view state: the newest snapshot, connection status, the selected
// mutation tool, and pending request bookkeeping. A pure reducer so the UI
// and the tests share identical behavior.

import { Ack, Rejection, ServerMessage, Snapshot } from "./protocol.js";

export type Tool = "inspect" | "add_object" | "move_object" | "remove_object";

export interface PendingRequest {
  id: number;
  description: string;
}

export interface Resolution {
  id: number;
  ok: boolean;
  detail: string;
}

export interface ViewState {
  connected: boolean;
  snapshot: Snapshot | null;
  tool: Tool;
  pending: PendingRequest[];
  resolutions: Resolution[];
  errors: string[];
}

export function initialViewState(): ViewState {
  return {
    connected: false,
    snapshot: null,
    tool: "inspect",
    pending: [],
    resolutions: [],
    errors: [],
  };
}

export function reduce(state: ViewState, msg: ServerMessage): ViewState {
  if (msg.type === "snapshot") {
    const snap = msg as Snapshot;
    if (state.snapshot && snap.tick < state.snapshot.tick) {
      // stale frame: rendering always reflects the newest snapshot
      return state;
    }
    return { ...state, snapshot: snap };
  }
  if (msg.type === "ack" || msg.type === "rejection") {
    const id = msg.request_id;
    if (id === null || !state.pending.some((p) => p.id === id)) {
      return state; // unknown or already resolved: ignore
    }
    const resolution: Resolution =
      msg.type === "ack"
        ? { id, ok: true, detail: `applied at tick ${(msg as Ack).applied_tick}` }
        : { id, ok: false, detail: `${(msg as Rejection).code}: ${(msg as Rejection).message}` };
    return {
      ...state,
      pending: state.pending.filter((p) => p.id !== id),
      resolutions: [...state.resolutions, resolution],
    };
  }
  return state;
}

export function trackRequest(state: ViewState, id: number, description: string): ViewState {
  return { ...state, pending: [...state.pending, { id, description }] };
}

export function setConnected(state: ViewState, connected: boolean): ViewState {
  return { ...state, connected };
}

export function selectTool(state: ViewState, tool: Tool): ViewState {
  return { ...state, tool };
}

export function pushError(state: ViewState, message: string): ViewState {
  return { ...state, errors: [...state.errors, message] };
}
