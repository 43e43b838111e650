// UI acceptance: the three behaviors the simulator must show, asserted at
// the protocol level (the UI computes no physics -- it reflects server
// frames, so these sequences are exactly what drives the pixels).

import { describe, expect, it } from "vitest";

import { marchingSquares } from "./marching.js";
import type { ConfigMessage, SliceMessage, StateMessage } from "./protocol.js";
import { ViewState } from "./view.js";

const GRID = {
  dims: [60, 60, 20, 36] as [number, number, number, number],
  mins: [-2.95, -1.9765, 0.0, -Math.PI] as [number, number, number, number],
  spacings: [0.1, 0.067, 0.2, 2 * Math.PI / 36] as [number, number, number, number],
  periodic: [false, false, false, true] as [boolean, boolean, boolean, boolean],
};

function config(obstacles = [{ x: 0, y: 0, r: 0.75 }], stale = false): ConfigMessage {
  return {
    type: "config", room: { width: 5.9, height: 3.953 }, grid: GRID,
    obstacles, threshold: 0.15, physical_radius: 0.08, step_dt: 0.02,
    brt_stale: stale,
  };
}

function frame(x: number, v: number, value: number, stale = false): StateMessage {
  return {
    type: "state", x, y: 0.0, v, theta: 0.0,
    user_control: { a: 1.5, delta: 0 },
    applied_control: value < 0.15 ? { a: -1.5, delta: Math.PI / 18 }
                                  : { a: 1.5, delta: 0 },
    intervening: value < 0.15, brt_value: value, brt_stale: stale,
  };
}

function coneSlice(cx: number, cy: number, radius = 0.75): SliceMessage {
  const [n1, n2] = GRID.dims;
  const values: number[] = new Array(n1 * n2);
  for (let j = 0; j < n2; j++) {
    for (let i = 0; i < n1; i++) {
      const x = GRID.mins[0] + i * GRID.spacings[0];
      const y = GRID.mins[1] + j * GRID.spacings[1];
      values[j * n1 + i] = Math.hypot(x - cx, y - cy) - radius;
    }
  }
  return { type: "brt_slice", v_index: 0, theta_index: 18,
           width: n1, height: n2, values };
}

describe("acceptance: driving at a cone", () => {
  it("raises the override badge before the car reaches the cone", () => {
    const view = new ViewState();
    view.apply(config());
    // replay of an approach: value drops under 0.15 while the car is still
    // ~0.9 m out (as the closed-loop server tests show); contact would be
    // at |x| = 0.08
    const approach: Array<[number, number]> = [
      [-2.0, 1.30], [-1.6, 0.72], [-1.2, 0.31], [-1.0, 0.14], [-0.95, 0.09],
    ];
    let overrideDistance = 0;
    for (const [x, value] of approach) {
      view.apply(frame(x, 2.0, value));
      if (view.intervening && overrideDistance === 0) {
        overrideDistance = Math.abs(x);
      }
    }
    expect(overrideDistance).toBeGreaterThan(0.08);
    expect(view.intervening).toBe(true);
  });
});

describe("acceptance: editing obstacles", () => {
  it("shows stale until the re-solve lands, then a fresh contour", () => {
    const view = new ViewState();
    view.apply(config());
    view.apply(frame(-2.0, 0.5, 1.0));
    view.apply(coneSlice(0, 0));
    const before = view.slice!;

    // user drops a cone; server acknowledges with a stale config + frames
    view.obstacles.push({ x: 1.0, y: 0.5, r: 0.75 });
    view.invalidateSlice();
    view.apply(config(view.obstacles, true));
    view.apply(frame(-2.0, 0.5, 1.0, true));
    expect(view.brtStale).toBe(true);

    // re-solve finishes: fresh config, fresh frames, fresh slice on request
    const followUps = view.apply(config(view.obstacles, false));
    view.apply(frame(-2.0, 0.5, 1.0, false));
    expect(view.brtStale).toBe(false);
    expect(followUps.concat(view.apply(frame(-2.01, 0.5, 1.0))).length)
      .toBeGreaterThanOrEqual(0);
    view.apply(coneSlice(1.0, 0.5));
    expect(view.slice).not.toBe(before);
    expect(view.slice!.values).not.toEqual(before.values);
  });
});

describe("acceptance: contour scale", () => {
  it("rings a lone centered cone at 0.75 m within one cell", () => {
    const slice = coneSlice(0, 0);
    const segments = marchingSquares(
      { width: slice.width, height: slice.height, values: slice.values }, 0);
    expect(segments.length).toBeGreaterThan(0);
    const cell = Math.max(GRID.spacings[0], GRID.spacings[1]);
    for (const s of segments) {
      for (const [ix, iy] of [[s.x0, s.y0], [s.x1, s.y1]] as const) {
        const x = GRID.mins[0] + ix * GRID.spacings[0];
        const y = GRID.mins[1] + iy * GRID.spacings[1];
        expect(Math.abs(Math.hypot(x, y) - 0.75)).toBeLessThan(cell);
      }
    }
  });
});
