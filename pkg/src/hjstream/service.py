"""Live simulation service: a WebSocket endpoint speaking newline-delimited
JSON text messages, one message per frame.

Client -> server:
    {"type": "control", "a": <float>, "delta": <float>}
    {"type": "set_obstacles", "obstacles": [{"x":..., "y":..., "r":...}, ...]}
    {"type": "reset", "state": {"x":..., "y":..., "v":..., "theta":...}}   (state optional)
    {"type": "get_slice", "v_index": <int>, "theta_index": <int>}

Server -> client:
    {"type": "config", ...}        on connect and whenever obstacles/BRT change
    {"type": "state", x, y, v, theta, user_control, applied_control,
     intervening, brt_value, brt_stale}                      at 50 Hz
    {"type": "brt_slice", v_index, theta_index, width, height, values}
    {"type": "error", "message": ...}   (malformed input; connection stays open)

Editing obstacles marks the active field stale and kicks off an asynchronous
re-solve (newest request wins; at most one in flight).  The 50 Hz loop keeps
filtering against the last valid field until the new one swaps in - the
solver kernels release the GIL, so the loop never blocks on a re-solve.
"""

from __future__ import annotations

import asyncio
import http
import json
import mimetypes
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from websockets.asyncio.server import broadcast, serve
from websockets.datastructures import Headers
from websockets.http11 import Response

from .config import DATAPATH_FIXED, RunConfig
from .dynamics import CarState
from .fixedpoint import solve_fixed, to_real_field
from .grid import ValueField
from .safety import (Environment, Obstacle, SafetyRuntime,
                     build_initial_values, clamp_state)
from .solver import solve

PHYSICAL_CONE_RADIUS = 0.08


class SimulationService:
    def __init__(self, config: RunConfig):
        self.config = config
        self.car = config.car()
        self.grid = config.grid
        self.environment = config.environment
        self.clients: set = set()
        self.user_control = (0.0, 0.0)
        self._pool = ThreadPoolExecutor(max_workers=1)
        self._solve_task: asyncio.Task | None = None
        self._latest_env: Environment | None = None
        brt = self._solve_blocking(self.environment)
        self.runtime = SafetyRuntime(self.car, brt, step_dt=0.02)
        self.state = self._default_state()

    # -- solving ------------------------------------------------------------

    def _solve_blocking(self, env: Environment) -> ValueField:
        v0 = build_initial_values(env, self.grid)
        if self.config.datapath == DATAPATH_FIXED:
            field, _ = solve_fixed(v0, self.car, self.config.solver)
            return to_real_field(field)
        field, _ = solve(v0, self.car, self.config.solver)
        return field

    def request_resolve(self, env: Environment):
        self._latest_env = env
        self.environment = env
        self.runtime.mark_stale()
        if self._solve_task is None or self._solve_task.done():
            self._solve_task = asyncio.get_running_loop().create_task(
                self._resolve_worker())

    async def _resolve_worker(self):
        loop = asyncio.get_running_loop()
        while True:
            env = self._latest_env
            field = await loop.run_in_executor(self._pool, self._solve_blocking, env)
            if env is self._latest_env:
                self.runtime.install_brt(field)
                self._broadcast(self._config_message())
                return

    # -- state --------------------------------------------------------------

    def _default_state(self) -> CarState:
        x_lo, _ = self.grid.extent(0)
        y_lo, _ = self.grid.extent(1)
        v_lo, _ = self.grid.extent(2)
        return clamp_state(CarState(x_lo + 0.4, y_lo + 0.4, max(v_lo, 0.0), 0.0),
                           self.grid)

    def _config_message(self) -> str:
        return json.dumps({
            "type": "config",
            "room": {"width": self.environment.room_width,
                     "height": self.environment.room_height},
            "grid": {"dims": list(self.grid.dims),
                     "mins": list(self.grid.mins),
                     "spacings": list(self.grid.spacings),
                     "periodic": list(self.grid.periodic)},
            "obstacles": [{"x": o.x, "y": o.y, "r": o.radius}
                          for o in self.environment.obstacles],
            "threshold": self.runtime.threshold,
            "physical_radius": PHYSICAL_CONE_RADIUS,
            "step_dt": self.runtime.step_dt,
            "brt_stale": self.runtime.stale,
        }) + "\n"

    def _state_message(self, decision) -> str:
        return json.dumps({
            "type": "state",
            "x": self.state.x, "y": self.state.y,
            "v": self.state.v, "theta": self.state.theta,
            "user_control": {"a": self.user_control[0],
                             "delta": self.user_control[1]},
            "applied_control": {"a": decision.control.a,
                                "delta": decision.control.delta},
            "intervening": decision.intervening,
            "brt_value": decision.value,
            "brt_stale": self.runtime.stale,
        }) + "\n"

    def _slice_message(self, v_index: int, theta_index: int) -> str:
        n1, n2, n3, n4 = self.grid.dims
        if not (0 <= v_index < n3 and 0 <= theta_index < n4):
            raise ValueError(f"slice indices ({v_index}, {theta_index}) out of range")
        plane = self.runtime.brt.data[:, :, v_index, theta_index]
        # row-major over y then x: values[j * width + i] = V[i, j]
        values = plane.T.reshape(-1).tolist()
        return json.dumps({
            "type": "brt_slice",
            "v_index": v_index, "theta_index": theta_index,
            "width": n1, "height": n2,
            "values": values,
        }) + "\n"

    def _broadcast(self, message: str):
        if self.clients:
            broadcast(self.clients, message)

    # -- loop & handler -----------------------------------------------------

    async def sim_loop(self):
        loop = asyncio.get_running_loop()
        period = self.runtime.step_dt
        next_t = loop.time()
        while True:
            self.state, decision = self.runtime.step(self.state, self.user_control)
            self._broadcast(self._state_message(decision))
            next_t += period
            delay = next_t - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_t = loop.time()

    async def handle_message(self, ws, raw):
        msg = json.loads(raw)
        kind = msg.get("type")
        if kind == "control":
            self.user_control = (float(msg["a"]), float(msg["delta"]))
        elif kind == "set_obstacles":
            obstacles = tuple(Obstacle(float(o["x"]), float(o["y"]),
                                       float(o.get("r", o.get("radius", 0.75))))
                              for o in msg["obstacles"])
            env = Environment(obstacles,
                              room_width=self.environment.room_width,
                              room_height=self.environment.room_height)
            self.request_resolve(env)
            self._broadcast(self._config_message())
        elif kind == "reset":
            raw_state = msg.get("state")
            if raw_state:
                self.state = clamp_state(
                    CarState(float(raw_state["x"]), float(raw_state["y"]),
                             float(raw_state["v"]), float(raw_state["theta"])),
                    self.grid)
            else:
                self.state = self._default_state()
            self.user_control = (0.0, 0.0)
        elif kind == "get_slice":
            await ws.send(self._slice_message(int(msg["v_index"]),
                                              int(msg["theta_index"])))
        else:
            raise ValueError(f"unknown message type {kind!r}")

    async def handler(self, ws):
        self.clients.add(ws)
        try:
            await ws.send(self._config_message())
            async for raw in ws:
                try:
                    await self.handle_message(ws, raw)
                except Exception as exc:  # malformed input keeps the connection
                    await ws.send(json.dumps(
                        {"type": "error", "message": str(exc)}) + "\n")
        finally:
            self.clients.discard(ws)


def _static_file_responder(ui_dir: str):
    root = Path(ui_dir).resolve()

    def respond(connection, request):
        if "Upgrade" in request.headers:
            return None  # let the WebSocket handshake proceed
        path = request.path.split("?", 1)[0]
        if path.endswith("/"):
            path += "index.html"
        candidate = (root / path.lstrip("/")).resolve()
        if not candidate.is_relative_to(root) or not candidate.is_file():
            return Response(http.HTTPStatus.NOT_FOUND, "Not Found",
                            Headers([("Content-Type", "text/plain")]), b"not found\n")
        body = candidate.read_bytes()
        ctype = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
        return Response(http.HTTPStatus.OK, "OK",
                        Headers([("Content-Type", ctype),
                                 ("Content-Length", str(len(body)))]), body)

    return respond


async def serve_forever(config: RunConfig, host: str, port: int,
                        ui_dir: str | None = None,
                        ready: asyncio.Event | None = None,
                        port_holder: list | None = None):
    service = SimulationService(config)
    process_request = _static_file_responder(ui_dir) if ui_dir else None
    async with serve(service.handler, host, port,
                     process_request=process_request) as server:
        if port_holder is not None:
            port_holder.append(server.sockets[0].getsockname()[1])
        if ready is not None:
            ready.set()
        await service.sim_loop()


def run_service(config: RunConfig, host: str = "127.0.0.1", port: int = 8700,
                ui_dir: str | None = None):
    print(f"solving initial field, then serving on ws://{host}:{port} ...")
    try:
        asyncio.run(serve_forever(config, host, port, ui_dir))
    except KeyboardInterrupt:
        pass
