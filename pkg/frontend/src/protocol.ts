// Wire protocol: newline-delimited JSON text messages over one WebSocket.
// The UI is a pure view/controller -- every physical or safety quantity in
// these types is computed server-side and only rendered here.

export interface ControlPair {
  a: number;
  delta: number;
}

export interface ObstacleSpec {
  x: number;
  y: number;
  r: number;
}

export interface GridMeta {
  dims: [number, number, number, number];
  mins: [number, number, number, number];
  spacings: [number, number, number, number];
  periodic: [boolean, boolean, boolean, boolean];
}

export interface ConfigMessage {
  type: "config";
  room: { width: number; height: number };
  grid: GridMeta;
  obstacles: ObstacleSpec[];
  threshold: number;
  physical_radius: number;
  step_dt: number;
  brt_stale: boolean;
}

export interface StateMessage {
  type: "state";
  x: number;
  y: number;
  v: number;
  theta: number;
  user_control: ControlPair;
  applied_control: ControlPair;
  intervening: boolean;
  brt_value: number;
  brt_stale: boolean;
}

export interface SliceMessage {
  type: "brt_slice";
  v_index: number;
  theta_index: number;
  width: number;
  height: number;
  values: number[];
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage = ConfigMessage | StateMessage | SliceMessage | ErrorMessage;

const SERVER_TYPES = new Set(["config", "state", "brt_slice", "error"]);

export function parseServerMessage(raw: string): ServerMessage {
  const data = JSON.parse(raw);
  if (typeof data !== "object" || data === null || !SERVER_TYPES.has(data.type)) {
    throw new Error(`unexpected server message: ${raw.slice(0, 80)}`);
  }
  return data as ServerMessage;
}

function send(payload: object): string {
  return JSON.stringify(payload) + "\n";
}

export function controlMessage(control: ControlPair): string {
  return send({ type: "control", a: control.a, delta: control.delta });
}

export function setObstaclesMessage(obstacles: ObstacleSpec[]): string {
  return send({ type: "set_obstacles", obstacles });
}

export function resetMessage(state?: { x: number; y: number; v: number; theta: number }): string {
  return state ? send({ type: "reset", state }) : send({ type: "reset" });
}

export function getSliceMessage(vIndex: number, thetaIndex: number): string {
  return send({ type: "get_slice", v_index: vIndex, theta_index: thetaIndex });
}
