// Wiring: WebSocket in, canvas out. Render runs on animation frames with
// latest-wins state; the control message goes out once per frame.

import { emptyKeys, inputToControl, keyFor } from "./controls.js";
import {
  controlMessage,
  getSliceMessage,
  parseServerMessage,
  resetMessage,
  setObstaclesMessage,
} from "./protocol.js";
import { renderFrame } from "./render.js";
import {
  DEFAULT_CONE_RADIUS,
  ViewState,
  clampIntoRoom,
  fitRoom,
  hitObstacle,
  screenToWorld,
} from "./view.js";

const canvas = document.getElementById("room") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const view = new ViewState();
const keys = emptyKeys();

const wsUrl = `ws://${location.hostname}:${location.port || "8700"}/`;
let ws: WebSocket | null = null;
let dragging = -1;

function connect(): void {
  ws = new WebSocket(wsUrl);
  ws.onopen = () => view.setConnected(true);
  ws.onclose = () => {
    view.setConnected(false);
    setTimeout(connect, 1000);
  };
  ws.onerror = () => view.setConnected(false);
  ws.onmessage = (event) => {
    const msg = parseServerMessage(event.data as string);
    for (const followUp of view.apply(msg)) {
      if (followUp.kind === "request_slice") {
        send(getSliceMessage(followUp.vIndex, followUp.thetaIndex));
      }
    }
  };
}

function send(text: string): void {
  if (ws && ws.readyState === WebSocket.OPEN && view.connected) {
    ws.send(text);
  }
}

window.addEventListener("keydown", (event) => {
  const key = keyFor(event.key);
  if (key) {
    keys[key] = true;
    event.preventDefault();
  } else if (event.key === "r") {
    send(resetMessage());
  }
});

window.addEventListener("keyup", (event) => {
  const key = keyFor(event.key);
  if (key) keys[key] = false;
});

function transform() {
  const room = view.config?.room ?? { width: 6, height: 4 };
  return fitRoom(room, {
    canvasWidth: canvas.width,
    canvasHeight: canvas.height,
    margin: 24,
  });
}

function pushObstacles(): void {
  send(setObstaclesMessage(view.obstacles));
  view.invalidateSlice(); // fetch a fresh raster once the re-solve lands
}

canvas.addEventListener("mousedown", (event) => {
  if (!view.config) return;
  const rect = canvas.getBoundingClientRect();
  const w = screenToWorld(event.clientX - rect.left, event.clientY - rect.top,
                          transform());
  const hit = hitObstacle(view.obstacles, w.x, w.y);
  if (event.button === 2) {
    if (hit >= 0 && view.obstacles.length > 1) {
      view.obstacles.splice(hit, 1);
      pushObstacles();
    }
    return;
  }
  if (hit >= 0) {
    dragging = hit;
  } else {
    const spot = clampIntoRoom(w.x, w.y, view.config.room);
    view.obstacles.push({ x: spot.x, y: spot.y, r: DEFAULT_CONE_RADIUS });
    pushObstacles();
  }
});

canvas.addEventListener("mousemove", (event) => {
  if (dragging < 0 || !view.config) return;
  const rect = canvas.getBoundingClientRect();
  const w = screenToWorld(event.clientX - rect.left, event.clientY - rect.top,
                          transform());
  const spot = clampIntoRoom(w.x, w.y, view.config.room);
  view.obstacles[dragging].x = spot.x;
  view.obstacles[dragging].y = spot.y;
});

canvas.addEventListener("mouseup", () => {
  if (dragging >= 0) {
    dragging = -1;
    pushObstacles();
  }
});

canvas.addEventListener("contextmenu", (event) => event.preventDefault());

function frame(): void {
  send(controlMessage(inputToControl(keys)));
  renderFrame(ctx, view);
  requestAnimationFrame(frame);
}

connect();
requestAnimationFrame(frame);
