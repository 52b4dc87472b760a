"""Session service exposing a live Stick Button environment over WebSocket.

The browser (or a headless client) sends high-level inputs; the service is
the sole stepper of the transition function, so every recorded trajectory
is replay-valid by construction.  Goal-reaching sessions may be saved into
the standard demos file, appended under an exclusive writer lock.

Messages (JSON text frames):
  client -> server: start{seed}, input{kind, x?, y?}, action{vector},
                    finish{outcome}
  server -> client: snapshot{objects, atoms, goal, reachable_zone, status,
                    steps}, finished{outcome, saved}, error{code, message}
"""

from __future__ import annotations

import json
import socketserver
import threading
import time
import uuid
from pathlib import Path

import numpy as np

from skillplan.core import Action, State, Task, sorted_atoms
from skillplan.envs import get_env
from skillplan.envs.base import clip_step
from skillplan.envs.demos_io import append_demo
from skillplan.envs import stick_button as sb
from skillplan.core import Demonstration
from skillplan.demo_bridge import ws
from skillplan.util import get_logger

logger = get_logger("skillplan.demo_bridge")

IDLE_TIMEOUT_S = 600.0
STATIC_DEFAULT = Path(__file__).parent / "static"


class SessionError(RuntimeError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class DemoSession:
    """One live task: the service steps the environment, clients only ask."""

    def __init__(self, seed: int):
        self.env = get_env("stick_button")
        self.id = uuid.uuid4().hex[:12]
        self.task: Task = self.env.sample_task(seed, "train")
        self.x: State = self.task.init
        self.actions: list[Action] = []
        self.states: list[State] = [self.task.init]
        self.status = "active"
        self.last_activity = time.monotonic()

    def snapshot(self) -> dict:
        atoms = self.env.abstract(self.x)
        objects = []
        for o in self.task.objects:
            objects.append(
                {
                    "name": o.name,
                    "type": o.otype.name,
                    "features": {
                        f: float(v) for f, v in zip(o.otype.feature_names, self.x[o])
                    },
                }
            )
        return {
            "type": "snapshot",
            "session": self.id,
            "objects": objects,
            "atoms": [str(a) for a in sorted_atoms(atoms.atoms)],
            "goal": [str(a) for a in sorted_atoms(self.task.goal)],
            "reachable_zone": {
                "x_lo": sb.X_LO,
                "x_hi": sb.X_HI,
                "y_lo": sb.Y_LO,
                "y_hi": sb.Y_HI,
                "zone_y": sb.RZ_Y,
                "max_step": sb.MAX_STEP,
                "press_radius": sb.PRESS_RADIUS,
                "stick_len": sb.STICK_LEN,
                "holder_w": sb.HOLDER_W,
                "holder_h": sb.HOLDER_H,
            },
            "status": self.status,
            "steps": len(self.actions),
        }

    def _step(self, action: Action) -> None:
        if self.status != "active":
            raise SessionError("session-state", f"session is {self.status}")
        if len(self.actions) >= self.task.horizon:
            raise SessionError("horizon", "task horizon exhausted")
        self.x = self.env.transition(self.x, action)
        self.actions.append(action)
        self.states.append(self.x)
        self.last_activity = time.monotonic()
        atoms = self.env.abstract(self.x)
        if all(a in atoms.atoms for a in self.task.goal):
            self.status = "done"

    def apply_input(self, kind: str, x: float | None = None, y: float | None = None) -> None:
        if kind == "move":
            if x is None or y is None:
                raise SessionError("bad-input", "move needs x and y")
            tx = float(np.clip(x, sb.X_LO, sb.X_HI))
            ty = float(np.clip(y, sb.Y_LO, sb.Y_HI))
            robot = next(o for o in self.task.objects if o.otype is sb.ROBOT_TYPE)
            dx, dy = clip_step(
                tx - self.x.get(robot, "x"), ty - self.x.get(robot, "y"), sb.MAX_STEP
            )
            self._step(Action(np.array([dx, dy, 0.0])))
        elif kind == "press_key":
            self._step(Action(np.array([0.0, 0.0, 1.0])))
        else:
            raise SessionError("bad-input", f"unknown input kind {kind!r}")

    def apply_action(self, vector: list[float]) -> None:
        if len(vector) != self.env.action_dim:
            raise SessionError("bad-input", "action has the wrong dimension")
        self._step(Action(np.array(vector, dtype=np.float64)))

    def demonstration(self) -> Demonstration:
        return Demonstration(self.task, tuple(self.actions), tuple(self.states))


class DemoService:
    """Session registry plus the demos file writer."""

    def __init__(self, out_path: str | Path, seed_base: int = 0):
        self.out_path = Path(out_path)
        self.seed_base = seed_base
        self.sessions: dict[str, DemoSession] = {}
        self._write_lock = threading.Lock()
        self._registry_lock = threading.Lock()

    def start_session(self, seed: int) -> DemoSession:
        session = DemoSession(self.seed_base + int(seed))
        with self._registry_lock:
            self.sessions[session.id] = session
        return session

    def finish_session(self, session: DemoSession, outcome: str) -> bool:
        if outcome not in ("save", "discard"):
            raise SessionError("bad-input", f"unknown outcome {outcome!r}")
        if outcome == "discard":
            self._drop(session)
            return False
        if session.status != "done":
            raise SessionError("not-done", "only goal-reaching sessions can be saved")
        demo = session.demonstration()
        if not session.env.replay_valid(demo):
            raise SessionError("invalid-demo", "recorded trajectory failed replay")
        with self._write_lock:
            append_demo(self.out_path, session.env, demo)
        self._drop(session)
        return True

    def _drop(self, session: DemoSession) -> None:
        with self._registry_lock:
            self.sessions.pop(session.id, None)

    def sweep_idle(self) -> None:
        now = time.monotonic()
        with self._registry_lock:
            for session in list(self.sessions.values()):
                if now - session.last_activity > IDLE_TIMEOUT_S:
                    session.status = "abandoned"
                    self.sessions.pop(session.id, None)


def _error(code: str, message: str) -> str:
    return json.dumps({"type": "error", "code": code, "message": message})


def handle_message(service: DemoService, session_box: list, raw: str) -> list[str]:
    """One request in, zero or more JSON replies out (also used by tests)."""
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError:
        return [_error("bad-json", "message is not valid JSON")]
    kind = msg.get("type")
    session: DemoSession | None = session_box[0] if session_box else None
    try:
        if kind == "start":
            if session is not None:
                return [_error("session-state", "session already started")]
            session = service.start_session(int(msg.get("seed", 0)))
            session_box.append(session)
            return [json.dumps(session.snapshot())]
        if session is None:
            return [_error("session-state", "no session; send start first")]
        if kind == "input":
            session.apply_input(msg.get("kind"), msg.get("x"), msg.get("y"))
            return [json.dumps(session.snapshot())]
        if kind == "action":
            session.apply_action(msg.get("vector", []))
            return [json.dumps(session.snapshot())]
        if kind == "finish":
            saved = service.finish_session(session, msg.get("outcome"))
            session_box.clear()
            return [
                json.dumps(
                    {"type": "finished", "outcome": msg.get("outcome"), "saved": saved}
                )
            ]
        return [_error("bad-input", f"unknown message type {kind!r}")]
    except SessionError as e:
        return [_error(e.code, str(e))]


class _Handler(socketserver.StreamRequestHandler):
    service: DemoService
    static_dir: Path

    def handle(self) -> None:
        try:
            request = self.rfile.readline().decode("latin-1").strip()
        except Exception:
            return
        if not request:
            return
        headers = {}
        while True:
            line = self.rfile.readline().decode("latin-1").strip()
            if not line:
                break
            key, _, value = line.partition(":")
            headers[key.strip().lower()] = value.strip()
        parts = request.split()
        if len(parts) != 3 or parts[0] != "GET":
            self._respond(405, b"method not allowed")
            return
        path = parts[1].split("?")[0]
        if path == "/ws" and headers.get("upgrade", "").lower() == "websocket":
            self._websocket(headers)
            return
        self._static(path)

    def _respond(self, code: int, body: bytes, ctype: str = "text/plain") -> None:
        reason = {200: "OK", 404: "Not Found", 405: "Method Not Allowed"}.get(code, "")
        head = (
            f"HTTP/1.1 {code} {reason}\r\nContent-Type: {ctype}\r\n"
            f"Content-Length: {len(body)}\r\nConnection: close\r\n\r\n"
        )
        self.wfile.write(head.encode() + body)

    def _static(self, path: str) -> None:
        if path == "/":
            path = "/index.html"
        target = (self.static_dir / path.lstrip("/")).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            self._respond(404, b"not found")
            return
        ctype = {
            ".html": "text/html",
            ".js": "text/javascript",
            ".css": "text/css",
            ".map": "application/json",
        }.get(target.suffix, "application/octet-stream")
        self._respond(200, target.read_bytes(), ctype)

    def _websocket(self, headers: dict) -> None:
        key = headers.get("sec-websocket-key")
        if not key:
            self._respond(400, b"missing websocket key")
            return
        accept = ws.accept_key(key)
        self.wfile.write(
            (
                "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\n"
                f"Connection: Upgrade\r\nSec-WebSocket-Accept: {accept}\r\n\r\n"
            ).encode()
        )
        sock = self.connection
        session_box: list = []
        try:
            while True:
                raw = ws.recv_text(sock)
                for reply in handle_message(self.service, session_box, raw):
                    ws.send_frame(sock, reply.encode())
        except (ws.WsClosed, ConnectionError, OSError):
            pass
        finally:
            if session_box:
                session = session_box[0]
                if session.status == "active":
                    session.status = "abandoned"
                self.service._drop(session)


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def make_server(
    port: int,
    out_path: str | Path,
    seed_base: int = 0,
    static_dir: Path | None = None,
    host: str = "127.0.0.1",
) -> _Server:
    service = DemoService(out_path, seed_base)
    handler = type(
        "BoundHandler",
        (_Handler,),
        {"service": service, "static_dir": static_dir or STATIC_DEFAULT},
    )
    server = _Server((host, port), handler)
    server.service = service  # type: ignore[attr-defined]

    def sweeper() -> None:
        while True:
            time.sleep(30.0)
            service.sweep_idle()

    threading.Thread(target=sweeper, daemon=True).start()
    return server


def serve(port: int, out_path: str | Path, seed_base: int = 0, static_dir: Path | None = None) -> None:
    server = make_server(port, out_path, seed_base, static_dir, host="0.0.0.0")
    logger.warning("demo service listening on :%d, writing %s", port, out_path)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
