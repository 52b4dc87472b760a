"""Headless WebSocket client for the demo service (testing and automation)."""

from __future__ import annotations

import base64
import json
import os
import socket

from skillplan.demo_bridge import ws


class BridgeClient:
    """Blocking request/reply client: every send returns the next message."""

    def __init__(self, host: str, port: int, path: str = "/ws", timeout: float = 30.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        key = base64.b64encode(os.urandom(16)).decode()
        request = (
            f"GET {path} HTTP/1.1\r\nHost: {host}:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        )
        self.sock.sendall(request.encode())
        status = self._read_http_headers()
        if "101" not in status:
            raise ConnectionError(f"websocket handshake refused: {status}")

    def _read_http_headers(self) -> str:
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = self.sock.recv(1024)
            if not chunk:
                raise ConnectionError("server closed during handshake")
            data += chunk
        return data.split(b"\r\n", 1)[0].decode()

    def request(self, message: dict) -> dict:
        ws.send_frame(self.sock, json.dumps(message).encode(), mask=True)
        return json.loads(ws.recv_text(self.sock, respond_mask=True))

    def start(self, seed: int = 0) -> dict:
        return self.request({"type": "start", "seed": seed})

    def move(self, x: float, y: float) -> dict:
        return self.request({"type": "input", "kind": "move", "x": x, "y": y})

    def press_key(self) -> dict:
        return self.request({"type": "input", "kind": "press_key"})

    def action(self, vector: list[float]) -> dict:
        return self.request({"type": "action", "vector": vector})

    def finish(self, outcome: str) -> dict:
        return self.request({"type": "finish", "outcome": outcome})

    def close(self) -> None:
        try:
            ws.send_frame(self.sock, b"", ws.OP_CLOSE, mask=True)
        except OSError:
            pass
        self.sock.close()

    def __enter__(self) -> "BridgeClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
