"""HTTP service: chat sessions, spec browsing, JSON-RPC, and static console files.

Endpoints (JSON bodies, UTF-8):
  POST /api/session                -> {"session_id"}
  POST /api/session/{id}/message   -> {"answer", "trace"}
  GET  /api/spec/tools             -> {"tools": [descriptor...]}
  GET  /api/spec/tools/{name}      -> full tool spec rendering
  GET  /healthz                    -> {"status": "ok"}
  POST /rpc                        -> JSON-RPC 2.0 (tools/list, tools/call)
  GET  /ui/...                     -> static console files, when configured

Sessions run one turn at a time (the session lock enforces the single
writer); the registry and compiled artifacts are shared immutable state.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Optional

from .providers import ProviderError
from .rpc import RpcSession
from .runtime import AgentRuntime

log = logging.getLogger(__name__)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
    ".map": "application/json",
    ".png": "image/png",
}


class ConsoleServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], runtime: AgentRuntime, ui_dir: Optional[str] = None):
        self.runtime = runtime
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None
        self.rpc_session = RpcSession(runtime.registry)
        self.rpc_lock = threading.Lock()
        super().__init__(address, _Handler)


class _Handler(BaseHTTPRequestHandler):
    server: ConsoleServer

    def log_message(self, fmt: str, *args: Any) -> None:
        log.debug("http: " + fmt, *args)

    # -- plumbing ------------------------------------------------------------

    def _send_json(self, payload: Any, status: int = 200) -> None:
        body = json.dumps(payload, default=str).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> Optional[Any]:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return None
        try:
            return json.loads(raw)
        except ValueError:
            return ValueError

    # -- routes --------------------------------------------------------------

    def do_GET(self) -> None:  # noqa: N802 - BaseHTTPRequestHandler API
        path = self.path.split("?", 1)[0]
        if path == "/healthz":
            self._send_json({"status": "ok"})
        elif path == "/api/spec/tools":
            tools = [d.to_dict() for d in self.server.runtime.registry.list_tools()]
            self._send_json({"tools": tools})
        elif path.startswith("/api/spec/tools/"):
            self._tool_detail(path.rsplit("/", 1)[1])
        elif path == "/ui" or path.startswith("/ui/"):
            self._static(path)
        else:
            self._send_json({"error": f"no such resource: {path}"}, status=404)

    def do_POST(self) -> None:  # noqa: N802
        path = self.path.split("?", 1)[0]
        if path == "/api/session":
            session = self.server.runtime.create_session()
            self._send_json({"session_id": session.session_id})
        elif path.startswith("/api/session/") and path.endswith("/message"):
            self._message(path.split("/")[3])
        elif path == "/rpc":
            self._rpc()
        else:
            self._send_json({"error": f"no such resource: {path}"}, status=404)

    def _tool_detail(self, name: str) -> None:
        tool = self.server.runtime.bundle.tool(name)
        if tool is None:
            self._send_json({"error": f"unknown tool '{name}'"}, status=404)
            return
        self._send_json(tool.to_dict())

    def _message(self, session_id: str) -> None:
        runtime = self.server.runtime
        session = runtime.get_session(session_id)
        if session is None:
            self._send_json({"error": f"unknown session '{session_id}'"}, status=404)
            return
        body = self._read_json()
        if body is ValueError or not isinstance(body, dict) or not isinstance(body.get("text"), str):
            self._send_json({"error": "body must be a JSON object with a 'text' string"}, status=400)
            return
        try:
            answer, trace = runtime.run_turn(session, body["text"])
        except ProviderError as exc:
            # An interactive console is not an eval run: degrade, don't crash.
            self._send_json(
                {
                    "answer": "I have no scripted reply for that. Ask me about the registered tools.",
                    "trace": {"session_id": session_id, "utterance": body["text"], "notes": [str(exc)]},
                },
                status=200,
            )
            return
        self._send_json({"answer": answer, "trace": trace.to_dict()})

    def _rpc(self) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        with self.server.rpc_lock:
            response = self.server.rpc_session.handle_bytes(raw)
        self._send_json(response)

    def _static(self, path: str) -> None:
        ui_dir = self.server.ui_dir
        if ui_dir is None or not ui_dir.is_dir():
            self._send_json({"error": "console UI is not configured (serve --ui-dir)"}, status=404)
            return
        relative = path[len("/ui") :].lstrip("/") or "index.html"
        target = (ui_dir / relative).resolve()
        if not str(target).startswith(str(ui_dir)) or not target.is_file():
            self._send_json({"error": f"no such file: {relative}"}, status=404)
            return
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", _CONTENT_TYPES.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def create_server(runtime: AgentRuntime, addr: str = "127.0.0.1:8321", ui_dir: Optional[str] = None) -> ConsoleServer:
    host, _, port = addr.partition(":")
    return ConsoleServer((host or "127.0.0.1", int(port or "8321")), runtime, ui_dir)
