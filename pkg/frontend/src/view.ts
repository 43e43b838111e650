// View-side state: the latest server snapshot, the slice raster being
// rendered, the obstacle edit buffer, and connection status. Applying a
// server message returns follow-up requests for the caller to send, which
// keeps the re-request logic pure and testable.
//
// Invariant maintained here: the rendered slice always corresponds to the
// car's current (v, theta) grid cell -- whenever either index changes, a
// fresh slice is requested.

import type {
  ConfigMessage,
  GridMeta,
  ObstacleSpec,
  ServerMessage,
  SliceMessage,
  StateMessage,
} from "./protocol.js";

export interface SliceRequest {
  kind: "request_slice";
  vIndex: number;
  thetaIndex: number;
}

export type FollowUp = SliceRequest;

const TWO_PI = 2 * Math.PI;

export function sliceIndicesFor(v: number, theta: number, grid: GridMeta):
    { vIndex: number; thetaIndex: number } {
  const n3 = grid.dims[2];
  const n4 = grid.dims[3];
  let k = Math.round((v - grid.mins[2]) / grid.spacings[2]);
  k = Math.min(Math.max(k, 0), n3 - 1);
  let l = Math.round((theta - grid.mins[3]) / grid.spacings[3]);
  if (grid.periodic[3]) {
    l = ((l % n4) + n4) % n4;
  } else {
    l = Math.min(Math.max(l, 0), n4 - 1);
  }
  return { vIndex: k, thetaIndex: l };
}

export class ViewState {
  config: ConfigMessage | null = null;
  state: StateMessage | null = null;
  slice: SliceMessage | null = null;
  obstacles: ObstacleSpec[] = [];
  connected = false;
  lastError = "";

  private requestedV = -1;
  private requestedTheta = -1;

  apply(msg: ServerMessage): FollowUp[] {
    switch (msg.type) {
      case "config": {
        this.config = msg;
        this.obstacles = msg.obstacles.map((o) => ({ ...o }));
        // layout changed: the cached raster may be for an old field
        return this.ensureSlice();
      }
      case "state": {
        this.state = msg;
        return this.ensureSlice();
      }
      case "brt_slice": {
        this.slice = msg;
        return [];
      }
      case "error": {
        this.lastError = msg.message;
        return [];
      }
    }
  }

  /** Request the slice for the car's current (v, theta) cell if it is not
   * the one already requested. */
  private ensureSlice(): FollowUp[] {
    if (!this.config || !this.state) return [];
    const { vIndex, thetaIndex } = sliceIndicesFor(
      this.state.v, this.state.theta, this.config.grid);
    if (vIndex === this.requestedV && thetaIndex === this.requestedTheta) {
      return [];
    }
    this.requestedV = vIndex;
    this.requestedTheta = thetaIndex;
    return [{ kind: "request_slice", vIndex, thetaIndex }];
  }

  /** Force the next state frame to re-request (used after obstacle edits so
   * a fresh post-resolve raster replaces the stale one). */
  invalidateSlice(): void {
    this.requestedV = -1;
    this.requestedTheta = -1;
  }

  setConnected(up: boolean): void {
    this.connected = up;
  }

  get intervening(): boolean {
    return this.state?.intervening ?? false;
  }

  get brtStale(): boolean {
    return this.state?.brt_stale ?? this.config?.brt_stale ?? false;
  }
}

// --- world <-> screen mapping -------------------------------------------

export interface Viewport {
  canvasWidth: number;
  canvasHeight: number;
  margin: number;
}

export interface Transform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** Fit the room rectangle (centered on the origin) into the canvas, y up. */
export function fitRoom(room: { width: number; height: number },
                        vp: Viewport): Transform {
  const sx = (vp.canvasWidth - 2 * vp.margin) / room.width;
  const sy = (vp.canvasHeight - 2 * vp.margin) / room.height;
  const scale = Math.min(sx, sy);
  return {
    scale,
    offsetX: vp.canvasWidth / 2,
    offsetY: vp.canvasHeight / 2,
  };
}

export function worldToScreen(x: number, y: number, t: Transform):
    { px: number; py: number } {
  return { px: t.offsetX + x * t.scale, py: t.offsetY - y * t.scale };
}

export function screenToWorld(px: number, py: number, t: Transform):
    { x: number; y: number } {
  return { x: (px - t.offsetX) / t.scale, y: (t.offsetY - py) / t.scale };
}

// --- obstacle editing ----------------------------------------------------

export const DEFAULT_CONE_RADIUS = 0.75;

/** Index of the obstacle whose center is within `pick` meters of (x, y). */
export function hitObstacle(obstacles: ObstacleSpec[], x: number, y: number,
                            pick = 0.4): number {
  let best = -1;
  let bestDist = pick;
  obstacles.forEach((o, i) => {
    const d = Math.hypot(o.x - x, o.y - y);
    if (d < bestDist) {
      best = i;
      bestDist = d;
    }
  });
  return best;
}

export function clampIntoRoom(x: number, y: number,
                              room: { width: number; height: number }):
    { x: number; y: number } {
  const hw = room.width / 2;
  const hh = room.height / 2;
  return {
    x: Math.min(Math.max(x, -hw), hw),
    y: Math.min(Math.max(y, -hh), hh),
  };
}

export function wrapAngle(theta: number): number {
  if (theta >= -Math.PI && theta < Math.PI) return theta;
  return ((((theta + Math.PI) % TWO_PI) + TWO_PI) % TWO_PI) - Math.PI;
}
