// Canvas drawing. Everything here is presentation: the numbers come
// straight from the server snapshot held in ViewState.

import { marchingSquares } from "./marching.js";
import { ViewState, Transform, fitRoom, worldToScreen } from "./view.js";

const CONE_FILL = "#e8821e";
const CONE_EDGE = "#b35f0a";
const TUBE_COLOR = "#c0392b";
const CAR_COLOR = "#1f6fb2";
const CAR_OVERRIDE_COLOR = "#c0392b";

export function renderFrame(ctx: CanvasRenderingContext2D, view: ViewState): void {
  const canvas = ctx.canvas;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!view.config) {
    banner(ctx, view.connected ? "waiting for configuration..." : "CONNECTING...");
    return;
  }
  const room = view.config.room;
  const t = fitRoom(room, {
    canvasWidth: canvas.width,
    canvasHeight: canvas.height,
    margin: 24,
  });

  drawRoom(ctx, room, t);
  drawSliceContour(ctx, view, t);
  drawObstacles(ctx, view, t);
  drawCar(ctx, view, t);
  drawHud(ctx, view);

  if (!view.connected) {
    banner(ctx, "DISCONNECTED - controls disabled");
  }
}

function drawRoom(ctx: CanvasRenderingContext2D,
                  room: { width: number; height: number }, t: Transform): void {
  const a = worldToScreen(-room.width / 2, room.height / 2, t);
  ctx.strokeStyle = "#444";
  ctx.lineWidth = 2;
  ctx.strokeRect(a.px, a.py, room.width * t.scale, room.height * t.scale);
}

function drawObstacles(ctx: CanvasRenderingContext2D, view: ViewState,
                       t: Transform): void {
  const physical = view.config!.physical_radius;
  for (const o of view.obstacles) {
    const c = worldToScreen(o.x, o.y, t);
    // effective (padded) radius, dashed
    ctx.beginPath();
    ctx.setLineDash([6, 4]);
    ctx.strokeStyle = CONE_EDGE;
    ctx.lineWidth = 1.2;
    ctx.arc(c.px, c.py, o.r * t.scale, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.setLineDash([]);
    // physical cone
    ctx.beginPath();
    ctx.fillStyle = CONE_FILL;
    ctx.arc(c.px, c.py, Math.max(physical * t.scale, 3), 0, 2 * Math.PI);
    ctx.fill();
  }
}

function drawSliceContour(ctx: CanvasRenderingContext2D, view: ViewState,
                          t: Transform): void {
  const slice = view.slice;
  const grid = view.config!.grid;
  if (!slice) return;
  const segments = marchingSquares(
    { width: slice.width, height: slice.height, values: slice.values }, 0);
  ctx.strokeStyle = TUBE_COLOR;
  ctx.lineWidth = 1.6;
  ctx.globalAlpha = view.brtStale ? 0.35 : 0.9;
  ctx.beginPath();
  for (const s of segments) {
    // index space -> world: i along x, j along y
    const p = worldToScreen(grid.mins[0] + s.x0 * grid.spacings[0],
                            grid.mins[1] + s.y0 * grid.spacings[1], t);
    const q = worldToScreen(grid.mins[0] + s.x1 * grid.spacings[0],
                            grid.mins[1] + s.y1 * grid.spacings[1], t);
    ctx.moveTo(p.px, p.py);
    ctx.lineTo(q.px, q.py);
  }
  ctx.stroke();
  ctx.globalAlpha = 1.0;
}

function drawCar(ctx: CanvasRenderingContext2D, view: ViewState,
                 t: Transform): void {
  const s = view.state;
  if (!s) return;
  const c = worldToScreen(s.x, s.y, t);
  const len = 0.28 * t.scale;
  const wid = 0.16 * t.scale;
  ctx.save();
  ctx.translate(c.px, c.py);
  ctx.rotate(-s.theta); // screen y points down
  ctx.beginPath();
  ctx.moveTo(len, 0);
  ctx.lineTo(-len * 0.6, wid * 0.7);
  ctx.lineTo(-len * 0.6, -wid * 0.7);
  ctx.closePath();
  ctx.fillStyle = s.intervening ? CAR_OVERRIDE_COLOR : CAR_COLOR;
  ctx.fill();
  ctx.restore();
}

function drawHud(ctx: CanvasRenderingContext2D, view: ViewState): void {
  const s = view.state;
  ctx.font = "14px monospace";
  ctx.textBaseline = "top";
  let x = 10;
  if (view.intervening) {
    x = badge(ctx, "OVERRIDE", "#c0392b", x);
  }
  if (view.brtStale) {
    x = badge(ctx, "STALE BRT", "#b58f00", x);
  }
  if (s) {
    ctx.fillStyle = "#222";
    ctx.fillText(
      `v=${s.v.toFixed(2)} m/s   value=${s.brt_value.toFixed(3)}`, x + 6, 12);
  }
  ctx.fillStyle = "#666";
  ctx.fillText("arrows/WASD drive | click: drop cone | drag: move | right-click: remove",
               10, ctx.canvas.height - 22);
}

function badge(ctx: CanvasRenderingContext2D, text: string, color: string,
               x: number): number {
  const w = ctx.measureText(text).width + 14;
  ctx.fillStyle = color;
  ctx.fillRect(x, 8, w, 22);
  ctx.fillStyle = "#fff";
  ctx.fillText(text, x + 7, 12);
  return x + w + 8;
}

function banner(ctx: CanvasRenderingContext2D, text: string): void {
  ctx.fillStyle = "rgba(40, 40, 40, 0.85)";
  ctx.fillRect(0, ctx.canvas.height / 2 - 26, ctx.canvas.width, 52);
  ctx.fillStyle = "#fff";
  ctx.font = "18px monospace";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  ctx.fillText(text, ctx.canvas.width / 2, ctx.canvas.height / 2);
  ctx.textAlign = "start";
  ctx.textBaseline = "alphabetic";
}
