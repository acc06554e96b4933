"""WebSocket state/command API for the operator panel.

Frames are JSON objects with a ``type`` field.

Server to client:
    manifest   once after connect: signal catalog (name/dir/kind/group),
               lane geometry and the entity views
    state      periodic snapshot (<= 20 Hz): sim_time, signal image,
               entity views, vehicles, event-log tail
    ack        a command was accepted; ``applies_at`` is the sim time of
               the tick boundary where it takes effect
    error      a command was rejected; the connection stays open

Client to server:
    {"type": "press",  "signal": <name-or-suffix>, "id": n}
    {"type": "toggle", "target": <entity-path>,    "id": n}
    {"type": "command", "line": "<scenario command>", "id": n}
"""

from __future__ import annotations

import json
import threading
from typing import List, Tuple

from websockets.sync.server import serve

from .harness import Session
from .scenario import ScenarioError, parse_command

SNAPSHOT_HZ = 20.0


class WsOperatorServer:
    """Broadcasts snapshots and queues commands for the session loop."""

    def __init__(self, session: Session, host: str = "127.0.0.1", port: int = 9100):
        self.session = session
        self._lock = threading.Lock()
        self._clients: List = []
        self._queue: List[Tuple[object, dict]] = []
        self._last_snapshot = -1.0
        self._manifest_json = json.dumps(self._manifest_frame())
        self._server = serve(self._handle, host, port)
        self.port = self._server.socket.getsockname()[1]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    # -- socket side -----------------------------------------------------

    def _handle(self, conn) -> None:
        with self._lock:
            self._clients.append(conn)
        try:
            conn.send(self._manifest_json)
            for message in conn:
                try:
                    frame = json.loads(message)
                    if not isinstance(frame, dict) or "type" not in frame:
                        raise ValueError("frame must be an object with a type")
                except ValueError as exc:
                    self._safe_send(conn, json.dumps(
                        {"type": "error", "reason": f"malformed frame: {exc}"}
                    ))
                    continue
                with self._lock:
                    self._queue.append((conn, frame))
        finally:
            with self._lock:
                if conn in self._clients:
                    self._clients.remove(conn)

    def _safe_send(self, conn, text: str) -> None:
        try:
            conn.send(text)
        except Exception:
            pass

    # -- session side (called from the simulation loop) --------------------

    def pump(self, session: Session) -> None:
        """Drain queued commands and broadcast a snapshot at <= 20 Hz."""
        with self._lock:
            queued = self._queue
            self._queue = []
        now = session.world.sim_time
        for conn, frame in queued:
            reply = self._execute(session, frame, now)
            self._safe_send(conn, json.dumps(reply))
        if now - self._last_snapshot >= 1.0 / SNAPSHOT_HZ - 1e-9:
            self._last_snapshot = now
            self.broadcast(json.dumps(self._state_frame(session)))

    def _execute(self, session: Session, frame: dict, now: float) -> dict:
        cmd_id = frame.get("id")
        kind = frame.get("type")
        try:
            if kind == "press":
                command = parse_command(["press", str(frame["signal"])])
            elif kind == "toggle":
                command = parse_command(["toggle", str(frame["target"])])
            elif kind == "command":
                command = parse_command(str(frame["line"]).split())
            else:
                raise ScenarioError(f"unknown frame type {kind!r}")
            session.apply_command(command, now)
        except KeyError as exc:
            return {"type": "error", "id": cmd_id, "reason": f"missing field {exc}"}
        except Exception as exc:
            return {"type": "error", "id": cmd_id, "reason": str(exc)}
        return {"type": "ack", "id": cmd_id, "applies_at": now}

    def broadcast(self, text: str) -> None:
        with self._lock:
            clients = list(self._clients)
        for conn in clients:
            self._safe_send(conn, text)

    # -- frames -----------------------------------------------------------

    def _manifest_frame(self) -> dict:
        world = self.session.world
        return {
            "type": "manifest",
            "signals": [
                {
                    "name": sig.name,
                    "direction": sig.direction.value,
                    "kind": sig.kind.value,
                    "group": sig.group,
                }
                for sig in world.bus.signals()
            ],
            "lanes": [
                {
                    "key": lane.key,
                    "tube": lane.tube,
                    "index": lane.index,
                    "length": lane.length,
                    "direction": lane.direction,
                    "fixtures": lane.fixtures,
                }
                for lane in world.lanes.values()
            ],
            "tick_rate": world.tick_rate,
        }

    def _state_frame(self, session: Session) -> dict:
        world = session.world
        return {
            "type": "state",
            "sim_time": world.sim_time,
            "signals": {k: int(v) for k, v in world.bus.snapshot().items()},
            "entities": world.snapshot_entities(),
            "vehicles": world.snapshot_vehicles(),
            "smoke": {str(k): v for k, v in world.smoke_alpha.items()},
            "events": world.event_log[-20:],
        }

    def close(self) -> None:
        self._server.shutdown()
