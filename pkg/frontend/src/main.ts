// Browser entry: live map, scene-graph tree, plan transcript, task submission,
// and the mutation palette. Talks only to the console bridge, which relays the
// service wire schema verbatim.

import { Command, Rejection, ServerMessage, Snapshot } from "./protocol.js";
import { DEFAULT_LAYERS, Layers, renderMap } from "./render.js";
import {
  ViewState,
  initialViewState,
  pushError,
  reduce,
  selectTool,
  setConnected,
  trackRequest,
  Tool,
} from "./view.js";

const PIXELS_PER_CELL = 2;

let state: ViewState = initialViewState();
const layers: Layers = { ...DEFAULT_LAYERS };
const trail: [number, number][] = [];
let nextObjectId = 1000;
let moveAnchor: [number, number] | null = null;

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function canvas(): HTMLCanvasElement {
  return $("map") as HTMLCanvasElement;
}

async function sendCommand(command: Command, description: string): Promise<void> {
  if (!state.connected) {
    state = pushError(state, `not connected; dropped: ${description}`);
    renderStatus();
    return;
  }
  const resp = await fetch("/api/command", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(command),
  });
  if (!resp.ok) {
    state = pushError(state, `command failed: ${await resp.text()}`);
  } else {
    const { request_id } = (await resp.json()) as { request_id: number };
    state = trackRequest(state, request_id, description);
  }
  renderStatus();
}

function renderStatus(): void {
  $("status").textContent = state.connected ? "connected" : "disconnected";
  $("status").className = state.connected ? "ok" : "bad";
  const parts: string[] = [];
  for (const p of state.pending) parts.push(`… ${p.description}`);
  for (const r of state.resolutions.slice(-5)) {
    parts.push(`${r.ok ? "ack" : "REJECTED"} #${r.id}: ${r.detail}`);
  }
  for (const e of state.errors.slice(-3)) parts.push(`error: ${e}`);
  $("requests").textContent = parts.join("\n");
}

function renderAll(): void {
  renderStatus();
  const snap = state.snapshot;
  if (!snap) return;

  const meta = snap.grid_meta;
  const c = canvas();
  c.width = meta.width * PIXELS_PER_CELL;
  c.height = meta.height * PIXELS_PER_CELL;
  const ctx = c.getContext("2d");
  if (ctx) {
    renderMap(ctx as unknown as import("./render.js").Context2D, snap, {
      pixelsPerCell: PIXELS_PER_CELL,
      layers,
      trail,
    });
  }

  $("tick").textContent = String(snap.tick);
  $("task").textContent = snap.task.text
    ? `${snap.task.text} [${snap.task.status}, ${snap.task.steps} steps]`
    : "idle";

  const tree = $("graph");
  tree.textContent = "";
  const rooms = snap.scene_graph.rooms as Record<
    string,
    { location: [number, number]; objects: Record<string, { location: [number, number] }> }
  >;
  for (const [roomKey, room] of Object.entries(rooms)) {
    const li = document.createElement("li");
    const details = document.createElement("details");
    details.open = true;
    const summary = document.createElement("summary");
    summary.textContent = `${roomKey} @ (${room.location[0].toFixed(1)}, ${room.location[1].toFixed(1)})`;
    details.appendChild(summary);
    const ul = document.createElement("ul");
    for (const [objKey, obj] of Object.entries(room.objects)) {
      const item = document.createElement("li");
      item.textContent = `${objKey} @ (${obj.location[0].toFixed(1)}, ${obj.location[1].toFixed(1)})`;
      ul.appendChild(item);
    }
    details.appendChild(ul);
    li.appendChild(details);
    tree.appendChild(li);
  }

  const log = $("plan");
  log.textContent = snap.plan_log
    .map((r) => {
      const lines = [`#${r.step} ${r.action ?? "<unparseable>"} -> ${r.outcome}`];
      if (r.feedback) lines.push(`   feedback: ${r.feedback}`);
      return lines.join("\n");
    })
    .join("\n");
}

function onMessage(msg: ServerMessage): void {
  if (msg.type === "rejection") {
    state = pushError(state, `${(msg as Rejection).code}: ${(msg as Rejection).message}`);
  }
  state = reduce(state, msg);
  if (msg.type === "snapshot") {
    const snap = msg as Snapshot;
    const [x, y] = snap.robot.est;
    const last = trail[trail.length - 1];
    if (!last || Math.hypot(last[0] - x, last[1] - y) > 0.05) {
      trail.push([x, y]);
      if (trail.length > 2000) trail.shift();
    }
  }
  renderAll();
}

function canvasToWorld(event: MouseEvent): [number, number] {
  const snap = state.snapshot;
  if (!snap) return [0, 0];
  const rect = canvas().getBoundingClientRect();
  const px = event.clientX - rect.left;
  const py = event.clientY - rect.top;
  const meta = snap.grid_meta;
  const x = (px / PIXELS_PER_CELL) * meta.resolution + meta.origin[0];
  const y = (meta.height - py / PIXELS_PER_CELL) * meta.resolution + meta.origin[1];
  return [x, y];
}

function nearestObject(x: number, y: number) {
  const snap = state.snapshot;
  if (!snap || snap.objects.length === 0) return null;
  let best = snap.objects[0];
  let bestD = Infinity;
  for (const o of snap.objects) {
    const d = Math.hypot(o.x - x, o.y - y);
    if (d < bestD) {
      best = o;
      bestD = d;
    }
  }
  return bestD < 1.0 ? best : null;
}

function onMapClick(event: MouseEvent): void {
  const [x, y] = canvasToWorld(event);
  const tool = state.tool;
  if (tool === "inspect") {
    const obj = nearestObject(x, y);
    $("inspect").textContent = obj
      ? `${obj.label}-${obj.instance_id} @ (${obj.x.toFixed(2)}, ${obj.y.toFixed(2)}), seen x${obj.observation_count}`
      : `(${x.toFixed(2)}, ${y.toFixed(2)})`;
    return;
  }
  if (tool === "add_object") {
    const label = ($("palette") as HTMLSelectElement).value;
    nextObjectId += 1;
    void sendCommand(
      {
        type: "mutate",
        kind: "add_object",
        object: { id: nextObjectId, label, position: [x, y] },
      },
      `add ${label} at (${x.toFixed(1)}, ${y.toFixed(1)})`
    );
    return;
  }
  if (tool === "remove_object") {
    // The service resolves the click position to the nearest world object.
    void sendCommand(
      { type: "mutate", kind: "remove_object", near: [x, y] },
      `remove nearest to (${x.toFixed(1)}, ${y.toFixed(1)})`
    );
    return;
  }
  if (tool === "move_object") {
    if (moveAnchor === null) {
      moveAnchor = [x, y];
      $("inspect").textContent = `moving object near (${x.toFixed(2)}, ${y.toFixed(2)}): click destination`;
    } else {
      const from = moveAnchor;
      moveAnchor = null;
      void sendCommand(
        { type: "mutate", kind: "move_object", near: from, new_position: [x, y] },
        `move (${from[0].toFixed(1)}, ${from[1].toFixed(1)}) -> (${x.toFixed(1)}, ${y.toFixed(1)})`
      );
    }
  }
}

export function wireUp(): void {
  const source = new EventSource("/api/events");
  source.onopen = () => {
    state = setConnected(state, true);
    renderStatus();
  };
  source.onerror = () => {
    state = setConnected(state, false);
    renderStatus();
  };
  source.onmessage = (event) => onMessage(JSON.parse(event.data) as ServerMessage);

  $("send").addEventListener("click", () => {
    const text = ($("command") as HTMLInputElement).value.trim();
    if (text) void sendCommand({ type: "task", text }, `task: ${text}`);
  });
  $("pause").addEventListener("click", () => void sendCommand({ type: "pause" }, "pause"));
  $("resume").addEventListener("click", () => void sendCommand({ type: "resume" }, "resume"));
  $("step").addEventListener("click", () => void sendCommand({ type: "step", n: 20 }, "step 20"));
  canvas().addEventListener("click", onMapClick);
  for (const tool of ["inspect", "add_object", "move_object", "remove_object"] as Tool[]) {
    $(`tool-${tool}`).addEventListener("click", () => {
      state = selectTool(state, tool);
      for (const t of ["inspect", "add_object", "move_object", "remove_object"]) {
        $(`tool-${t}`).className = t === tool ? "tool active" : "tool";
      }
    });
  }
  for (const layer of Object.keys(layers) as (keyof Layers)[]) {
    const box = document.getElementById(`layer-${layer}`) as HTMLInputElement | null;
    box?.addEventListener("change", () => {
      layers[layer] = box.checked;
      renderAll();
    });
  }
}

if (typeof window !== "undefined") {
  window.addEventListener("load", wireUp);
}
