"""HTTP + WebSocket boundary for a live simulation.

The simulation loop runs in its own thread and owns every bit of mutable
state; handlers talk to it only through a queue of (command, reply-slot)
pairs and by reading the latest telemetry snapshot, which the loop swaps
in atomically. Slow or broken subscribers never stall the loop: the
stream endpoint sends whatever snapshot is newest when its clock fires,
coalescing anything it missed.
"""

from __future__ import annotations

import asyncio
import io
import queue
import threading
import time

from fastapi import FastAPI, Response, WebSocket, WebSocketDisconnect

from .config import SimConfig, editable_ranges
from .service import PROTO_VERSION, SimLoop
from .vision import write_pgm


class ServiceRuntime:
    """Owns the loop thread and the command mailbox."""

    def __init__(self, cfg: SimConfig, real_time: bool | None = None):
        self.cfg = cfg
        self.loop = SimLoop(cfg)
        self.commands: queue.Queue = queue.Queue()
        self.real_time = (not cfg.run.headless) if real_time is None else real_time
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def start(self) -> None:
        self._thread.start()

    def shutdown(self) -> None:
        self._stop.set()
        self._thread.join(timeout=5)

    def submit(self, envelope: dict, timeout: float = 2.0) -> dict:
        slot: queue.Queue = queue.Queue(maxsize=1)
        self.commands.put((envelope, slot))
        try:
            return slot.get(timeout=timeout)
        except queue.Empty:
            return {"id": envelope.get("id"), "ok": False,
                    "error": {"code": "timeout",
                              "message": "simulation loop not responding"}}

    def _drain_commands(self) -> None:
        while True:
            try:
                envelope, slot = self.commands.get_nowait()
            except queue.Empty:
                return
            reply = self.loop.handle_command(envelope)
            slot.put(reply)

    def _run(self) -> None:
        loop = self.loop
        start_wall = time.monotonic()
        while not self._stop.is_set():
            self._drain_commands()
            if not loop.done():
                loop.tick()
            elif not loop.finished:
                loop.finished = True
                loop.telemetry = loop._telemetry_frame(terminal=True)
                loop.log.close()
            else:
                time.sleep(0.02)
                continue
            if self.real_time:
                ahead = loop.t_ms / 1000.0 - (time.monotonic() - start_wall)
                if ahead > 0.002:
                    time.sleep(min(ahead, 0.05))


def build_app(runtime: ServiceRuntime) -> FastAPI:
    app = FastAPI(title="beltline service")
    loop = runtime.loop
    telemetry_s = 1.0 / runtime.cfg.server.telemetry_hz

    @app.get("/state")
    def state() -> dict:
        return loop.telemetry

    @app.get("/config")
    def config() -> dict:
        return {"proto_version": PROTO_VERSION,
                "config": runtime.cfg.to_dict(),
                "ranges": editable_ranges()}

    @app.post("/command")
    def command(envelope: dict) -> dict:
        return runtime.submit(envelope)

    @app.get("/frame/latest")
    def latest_frame() -> Response:
        if loop.last_frame is None:
            return Response(status_code=404, content=b"no frame captured")
        object_id, frame = loop.last_frame
        buf = io.BytesIO()
        write_pgm(buf, frame)
        return Response(content=buf.getvalue(),
                        media_type="image/x-portable-graymap",
                        headers={"X-Object-Id": str(object_id)})

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        last_sent = None
        try:
            while True:
                snapshot = loop.telemetry
                if snapshot is not last_sent:
                    await ws.send_json(snapshot)
                    last_sent = snapshot
                    if snapshot.get("terminal"):
                        pass  # keep streaming; the flag marks run end
                await asyncio.sleep(telemetry_s)
        except (WebSocketDisconnect, RuntimeError):
            return

    return app


def serve(cfg: SimConfig, real_time: bool | None = None) -> None:
    """Run the service until interrupted (blocking)."""
    import uvicorn

    runtime = ServiceRuntime(cfg, real_time=real_time)
    runtime.start()
    try:
        uvicorn.run(build_app(runtime), host=cfg.server.host,
                    port=cfg.server.port, log_level="warning")
    finally:
        runtime.shutdown()
