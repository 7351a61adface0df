// Immediate-mode map rendering over a minimal 2D context interface, so tests
// can drive it with a fake context and assert pixel-exact rasters.

import {
  GRID_EXPLORED,
  GRID_OCCUPIED,
  GRID_UNEXPLORED,
  Snapshot,
  decodeGrid,
} from "./protocol.js";

export interface Context2D {
  fillStyle: string;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  strokeStyle: string;
  lineWidth: number;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  fillText(text: string, x: number, y: number): void;
  font: string;
}

export interface Layers {
  grid: boolean;
  robot: boolean;
  trail: boolean;
  objects: boolean;
  frontiers: boolean;
}

export const DEFAULT_LAYERS: Layers = {
  grid: true,
  robot: true,
  trail: true,
  objects: true,
  frontiers: true,
};

export const GRID_COLORS: Record<number, string> = {
  [GRID_UNEXPLORED]: "#3a3f4a",
  [GRID_EXPLORED]: "#e8e6df",
  [GRID_OCCUPIED]: "#16181d",
};

export interface RenderOptions {
  pixelsPerCell: number;
  layers?: Partial<Layers>;
  trail?: [number, number][];
}

// World y points up; canvas y points down. One grid cell maps to a
// pixelsPerCell square.
export function worldToCanvas(
  x: number,
  y: number,
  snapshot: Snapshot,
  pixelsPerCell: number
): [number, number] {
  const meta = snapshot.grid_meta;
  const px = ((x - meta.origin[0]) / meta.resolution) * pixelsPerCell;
  const py = (meta.height - (y - meta.origin[1]) / meta.resolution) * pixelsPerCell;
  return [px, py];
}

export function renderMap(ctx: Context2D, snapshot: Snapshot, options: RenderOptions): void {
  const layers: Layers = { ...DEFAULT_LAYERS, ...(options.layers ?? {}) };
  const ppc = options.pixelsPerCell;
  const meta = snapshot.grid_meta;

  if (layers.grid) {
    const cells = decodeGrid(snapshot.grid_rle, meta);
    for (let row = 0; row < meta.height; row++) {
      const canvasRow = meta.height - 1 - row;
      let runStart = 0;
      let runValue = cells[row * meta.width];
      for (let col = 1; col <= meta.width; col++) {
        const value = col < meta.width ? cells[row * meta.width + col] : -1;
        if (value !== runValue) {
          ctx.fillStyle = GRID_COLORS[runValue];
          ctx.fillRect(runStart * ppc, canvasRow * ppc, (col - runStart) * ppc, ppc);
          runStart = col;
          runValue = value;
        }
      }
    }
  }

  if (layers.trail && options.trail && options.trail.length > 1) {
    ctx.strokeStyle = "#4f8dd8";
    ctx.lineWidth = 1;
    ctx.beginPath();
    const [sx, sy] = worldToCanvas(options.trail[0][0], options.trail[0][1], snapshot, ppc);
    ctx.moveTo(sx, sy);
    for (const [x, y] of options.trail.slice(1)) {
      const [px, py] = worldToCanvas(x, y, snapshot, ppc);
      ctx.lineTo(px, py);
    }
    ctx.stroke();
  }

  if (layers.frontiers) {
    ctx.fillStyle = "#d8a23f";
    for (const f of snapshot.frontiers) {
      const [px, py] = worldToCanvas(f.x, f.y, snapshot, ppc);
      ctx.beginPath();
      ctx.arc(px, py, Math.max(2, ppc / 2), 0, Math.PI * 2);
      ctx.fill();
    }
  }

  if (layers.objects) {
    ctx.fillStyle = "#bc4749";
    ctx.font = "10px sans-serif";
    for (const obj of snapshot.objects) {
      const [px, py] = worldToCanvas(obj.x, obj.y, snapshot, ppc);
      ctx.beginPath();
      ctx.arc(px, py, Math.max(2, ppc / 2), 0, Math.PI * 2);
      ctx.fill();
      ctx.fillText(`${obj.label}-${obj.instance_id}`, px + 4, py - 4);
    }
  }

  if (layers.robot) {
    const [x, y, theta] = snapshot.robot.est;
    const [px, py] = worldToCanvas(x, y, snapshot, ppc);
    ctx.fillStyle = "#2a9d8f";
    ctx.beginPath();
    ctx.arc(px, py, Math.max(3, ppc), 0, Math.PI * 2);
    ctx.fill();
    ctx.strokeStyle = "#14524b";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px, py);
    const r = Math.max(6, 2 * ppc);
    ctx.lineTo(px + r * Math.cos(theta), py - r * Math.sin(theta));
    ctx.stroke();
  }
}

// Test support: rasterize just the grid layer into cell values, bypassing any
// real canvas. Must agree with what renderMap paints cell by cell.
export function gridRaster(snapshot: Snapshot): Uint8Array {
  return decodeGrid(snapshot.grid_rle, snapshot.grid_meta);
}
