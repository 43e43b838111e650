import asyncio
import json
import math
import threading
import time

import pytest
import yaml
from websockets.sync.client import connect

from hjstream.config import load_config
from hjstream.service import serve_forever

SLOW_SOLVE_DOC = {
    # tiny grid, but thousands of iterations so a re-solve visibly overlaps
    # several 50 Hz frames
    "grid": {
        "dims": [6, 6, 4, 8],
        "mins": [-1.25, -1.25, 0.0, -math.pi],
        "spacings": [0.5, 0.5, 0.4, 2 * math.pi / 8],
        "periodic": [False, False, False, True],
    },
    "environment": {
        "room": {"width": 2.5, "height": 2.5},
        "obstacles": [{"x": 0.0, "y": 0.0, "r": 0.75}],
    },
    "solver": {"mode": "fixed_horizon", "horizon": 0.5, "dt_override": 0.0001},
    "stream": {"n_pe": 4},
}


@pytest.fixture(scope="module")
def service_port(tmp_path_factory):
    path = tmp_path_factory.mktemp("svc") / "run.yaml"
    path.write_text(yaml.safe_dump(SLOW_SOLVE_DOC))
    cfg = load_config(path)
    holder = []

    def run():
        async def amain():
            await serve_forever(cfg, "127.0.0.1", 0, port_holder=holder)
        asyncio.run(amain())

    thread = threading.Thread(target=run, daemon=True)
    thread.start()
    deadline = time.time() + 60
    while not holder and time.time() < deadline:
        time.sleep(0.05)
    assert holder, "service did not start"
    yield holder[0]


def recv_until(ws, predicate, timeout=20.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        msg = json.loads(ws.recv(timeout=timeout))
        if predicate(msg):
            return msg
    raise AssertionError("expected message not received")


class TestService:
    def test_config_then_state_stream(self, service_port):
        with connect(f"ws://127.0.0.1:{service_port}") as ws:
            first = json.loads(ws.recv(timeout=10))
            assert first["type"] == "config"
            assert first["grid"]["dims"] == [6, 6, 4, 8]
            assert first["obstacles"] == [{"x": 0.0, "y": 0.0, "r": 0.75}]
            assert first["threshold"] == 0.15
            states = [recv_until(ws, lambda m: m["type"] == "state")
                      for _ in range(3)]
            for s in states:
                for key in ("x", "y", "v", "theta", "user_control",
                            "applied_control", "intervening", "brt_value",
                            "brt_stale"):
                    assert key in s

    def test_stream_runs_near_50hz(self, service_port):
        with connect(f"ws://127.0.0.1:{service_port}") as ws:
            recv_until(ws, lambda m: m["type"] == "state")
            t0 = time.time()
            count = 0
            while count < 20 and time.time() - t0 < 5.0:
                if json.loads(ws.recv(timeout=5))["type"] == "state":
                    count += 1
            assert count == 20
            # 20 frames at 50 Hz nominally take 0.4 s; allow generous slack
            assert time.time() - t0 < 3.0

    def test_throttle_accelerates_car(self, service_port):
        with connect(f"ws://127.0.0.1:{service_port}") as ws:
            ws.send(json.dumps({"type": "reset"}))
            ws.send(json.dumps({"type": "control", "a": 1.5, "delta": 0.0}))
            time.sleep(0.4)
            # drain to the freshest state
            msg = recv_until(ws, lambda m: m["type"] == "state" and m["v"] > 0.2)
            assert msg["applied_control"]["a"] == 1.5
            ws.send(json.dumps({"type": "control", "a": 0.0, "delta": 0.0}))
            ws.send(json.dumps({"type": "reset"}))

    def test_slice_request(self, service_port):
        with connect(f"ws://127.0.0.1:{service_port}") as ws:
            ws.send(json.dumps({"type": "get_slice", "v_index": 1,
                                "theta_index": 3}))
            msg = recv_until(ws, lambda m: m["type"] == "brt_slice")
            assert msg["width"] == 6 and msg["height"] == 6
            assert len(msg["values"]) == 36
            assert msg["v_index"] == 1 and msg["theta_index"] == 3

    def test_slice_bounds_reported(self, service_port):
        with connect(f"ws://127.0.0.1:{service_port}") as ws:
            ws.send(json.dumps({"type": "get_slice", "v_index": 99,
                                "theta_index": 0}))
            msg = recv_until(ws, lambda m: m["type"] == "error")
            assert "out of range" in msg["message"]

    def test_malformed_keeps_connection(self, service_port):
        with connect(f"ws://127.0.0.1:{service_port}") as ws:
            ws.send("this is not json")
            recv_until(ws, lambda m: m["type"] == "error")
            ws.send(json.dumps({"type": "wat"}))
            msg = recv_until(ws, lambda m: m["type"] == "error")
            assert "unknown message type" in msg["message"]
            # still alive
            recv_until(ws, lambda m: m["type"] == "state")

    def test_obstacle_edit_goes_stale_then_fresh(self, service_port):
        with connect(f"ws://127.0.0.1:{service_port}") as ws:
            recv_until(ws, lambda m: m["type"] == "state" and not m["brt_stale"])
            ws.send(json.dumps({"type": "set_obstacles",
                                "obstacles": [{"x": 0.4, "y": 0.3, "r": 0.75}]}))
            stale = recv_until(ws, lambda m: m["type"] == "state" and m["brt_stale"])
            assert stale["brt_stale"]
            fresh = recv_until(ws, lambda m: m["type"] == "state"
                               and not m["brt_stale"], timeout=60)
            assert not fresh["brt_stale"]
            # config rebroadcast carries the new layout
            ws.send(json.dumps({"type": "set_obstacles",
                                "obstacles": [{"x": 0.0, "y": 0.0, "r": 0.75}]}))
            cfg = recv_until(ws, lambda m: m["type"] == "config")
            assert cfg["obstacles"][0]["x"] == 0.0
