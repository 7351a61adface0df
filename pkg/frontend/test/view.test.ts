import { describe, expect, it } from "vitest";
import { Snapshot } from "../src/protocol.js";
import { initialViewState, reduce, selectTool, trackRequest } from "../src/view.js";

function snap(tick: number): Snapshot {
  return {
    type: "snapshot",
    tick,
    robot: { true: [0, 0, 0], est: [0, 0, 0] },
    grid_rle: [[0, 4]],
    grid_meta: { resolution: 0.1, origin: [0, 0], width: 2, height: 2 },
    objects: [],
    scene_graph: { rooms: {} },
    frontiers: [],
    plan_log: [],
    task: { text: null, status: "idle", steps: 0 },
  };
}

describe("view state reducer", () => {
  it("keeps only the newest snapshot", () => {
    let state = initialViewState();
    state = reduce(state, snap(10));
    state = reduce(state, snap(5)); // stale frame arrives late
    expect(state.snapshot?.tick).toBe(10);
    state = reduce(state, snap(15));
    expect(state.snapshot?.tick).toBe(15);
  });

  it("resolves pending requests exactly once", () => {
    let state = initialViewState();
    state = trackRequest(state, 1, "add monitor");
    state = reduce(state, { type: "ack", request_id: 1, applied_tick: 42 });
    expect(state.pending).toHaveLength(0);
    expect(state.resolutions).toHaveLength(1);
    expect(state.resolutions[0]).toMatchObject({ id: 1, ok: true });
    // duplicate ack is ignored
    state = reduce(state, { type: "ack", request_id: 1, applied_tick: 43 });
    expect(state.resolutions).toHaveLength(1);
  });

  it("records rejections with their diagnostics", () => {
    let state = initialViewState();
    state = trackRequest(state, 2, "remove ghost");
    state = reduce(state, {
      type: "rejection",
      request_id: 2,
      code: "invalid_mutation",
      message: "no present object with id 404",
    });
    expect(state.resolutions[0]).toMatchObject({ id: 2, ok: false });
    expect(state.resolutions[0].detail).toContain("invalid_mutation");
  });

  it("tool selection is explicit", () => {
    let state = initialViewState();
    expect(state.tool).toBe("inspect");
    state = selectTool(state, "add_object");
    expect(state.tool).toBe("add_object");
  });
});
