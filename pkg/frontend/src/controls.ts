// Keyboard to control mapping. Arrow keys (or WASD) pick one of three
// levels per channel; opposing keys cancel to zero.

import type { ControlPair } from "./protocol.js";

export const ACCEL = 1.5;
export const STEER = Math.PI / 18;

export interface KeyState {
  up: boolean;
  down: boolean;
  left: boolean;
  right: boolean;
}

export function emptyKeys(): KeyState {
  return { up: false, down: false, left: false, right: false };
}

const KEY_ALIASES: Record<string, keyof KeyState> = {
  ArrowUp: "up",
  ArrowDown: "down",
  ArrowLeft: "left",
  ArrowRight: "right",
  w: "up",
  s: "down",
  a: "left",
  d: "right",
};

export function keyFor(eventKey: string): keyof KeyState | null {
  return KEY_ALIASES[eventKey.length === 1 ? eventKey.toLowerCase() : eventKey] ?? null;
}

export function inputToControl(keys: KeyState): ControlPair {
  let a = 0;
  if (keys.up && !keys.down) a = ACCEL;
  else if (keys.down && !keys.up) a = -ACCEL;
  let delta = 0;
  if (keys.left && !keys.right) delta = STEER;
  else if (keys.right && !keys.left) delta = -STEER;
  return { a, delta };
}
