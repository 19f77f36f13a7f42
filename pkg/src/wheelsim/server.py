"""Dashboard-facing HTTP/WebSocket endpoints.

The server never owns simulation state: it forwards commands into the same
channel the glove feeds, reads status snapshots, relays telemetry from the
broadcast bus, and fronts the in-process cloud stub under the hosted
service's GET /update protocol. A slow or dead websocket client loses
frames; it never stalls the stepping thread.
"""
from __future__ import annotations

import asyncio
import json
import threading
import time
from pathlib import Path

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .netproto import InvalidFrame, RejectedKey, decode_command
from .scenario import Scenario
from .sim import Simulation

_NOT_RUNNING = {"detail": "simulation not running"}


def create_app(sim: Simulation | None = None,
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="wheelsim", docs_url=None, redoc_url=None)
    app.state.sim = sim
    app.state.invalid_control_frames = 0

    @app.get("/api/status")
    def status() -> JSONResponse:
        running: Simulation | None = app.state.sim
        if running is None:
            return JSONResponse(_NOT_RUNNING, status_code=503)
        return JSONResponse(running.status())

    @app.post("/api/command")
    async def command(request: Request) -> JSONResponse:
        running: Simulation | None = app.state.sim
        if running is None:
            return JSONResponse(_NOT_RUNNING, status_code=503)
        try:
            data = await request.json()
        except Exception:
            return JSONResponse({"detail": "body must be JSON"}, status_code=400)
        if not isinstance(data, dict) or "command" not in data:
            return JSONResponse({"detail": 'body must be {"command": "<F|B|L|R|S>"}'},
                                status_code=400)
        try:
            cmd = decode_command(data["command"])
        except InvalidFrame as exc:
            return JSONResponse({"detail": str(exc)}, status_code=400)
        running.inject_command(cmd, source="dashboard")
        return JSONResponse({"accepted": True, "command": cmd.value})

    @app.get("/update")
    def cloud_update(request: Request) -> PlainTextResponse:
        running: Simulation | None = app.state.sim
        if running is None:
            return PlainTextResponse("0", status_code=503)
        try:
            # The stub checks the raw query string, order and all.
            entry_id = running.stub.handle(request.url.query,
                                           running.world.time)
        except RejectedKey:
            return PlainTextResponse("0", status_code=401)
        return PlainTextResponse(str(entry_id))

    @app.websocket("/api/stream")
    async def stream(ws: WebSocket) -> None:
        await ws.accept()
        running: Simulation | None = app.state.sim
        if running is None:
            await ws.close(code=1013)
            return
        sub = running.bus.subscribe()
        try:
            while True:
                event = sub.pop(0)  # non-blocking; the bus is thread-safe
                if event is not None:
                    await ws.send_text(json.dumps(event, separators=(",", ":")))
                    continue
                try:
                    # Doubles as the idle sleep and the disconnect detector.
                    message = await asyncio.wait_for(ws.receive(), timeout=0.05)
                except asyncio.TimeoutError:
                    continue
                if message["type"] == "websocket.disconnect":
                    break
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            running.bus.unsubscribe(sub)

    @app.websocket("/ws/control")
    async def control(ws: WebSocket) -> None:
        await ws.accept()
        while True:
            try:
                frame = await ws.receive_text()
            except (WebSocketDisconnect, RuntimeError):
                break
            try:
                cmd = decode_command(frame)
            except InvalidFrame:
                # Bad frames are counted and dropped, never fatal.
                app.state.invalid_control_frames += 1
                continue
            running: Simulation | None = app.state.sim
            if running is not None:
                running.inject_command(cmd, source="remote")

    if static_dir is not None:
        static_dir = Path(static_dir)
        if static_dir.is_dir():
            app.mount("/", StaticFiles(directory=static_dir, html=True),
                      name="dashboard")

    return app


class LiveSim:
    """Steps a Simulation on a background thread at wall-clock pace.

    realtime=False steps flat out (useful for demos and tests). The thread
    stops after the planned duration or when stop() is called; the finished
    simulation stays attached so status stays queryable.
    """

    def __init__(self, sim: Simulation, duration_s: float | None = None,
                 realtime: bool = True):
        self.sim = sim
        self.duration_s = duration_s
        self.realtime = realtime
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self.result = None

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._loop, daemon=True,
                                        name="wheelsim-live")
        self._thread.start()

    def _loop(self) -> None:
        sim = self.sim
        ticks = sim.begin_run(self.duration_s)
        dt = sim.scenario.dt_s
        deadline = time.monotonic()
        for _ in range(ticks):
            if self._stop.is_set():
                break
            sim.step()
            if self.realtime:
                deadline += dt
                delay = deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
        self.result = sim.finish_run()

    def stop(self, timeout: float = 5.0) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout)

    @property
    def running(self) -> bool:
        return self._thread is not None and self._thread.is_alive()


def serve(scenario: Scenario, seed: int | None = None,
          duration_s: float | None = None, host: str = "127.0.0.1",
          port: int = 8000, static_dir: str | Path | None = None,
          realtime: bool = True, alert_dir: str | Path | None = None) -> None:
    """Run one scenario behind the API until it finishes or ctrl-C."""
    import uvicorn

    sim = Simulation(scenario, seed=seed, alert_dir=alert_dir)
    live = LiveSim(sim, duration_s=duration_s, realtime=realtime)
    app = create_app(sim, static_dir=static_dir)
    live.start()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        live.stop()
