"""JSON-RPC 2.0 access to a tool registry.

Two transports carry the same payloads: newline-delimited JSON over a
byte stream, and HTTP POST /rpc (wired up in the HTTP server). Methods
are ``tools/list`` (no params) and ``tools/call`` ({name, arguments}).
Tool-level failures (not_found, bad_args, tool_error) are successful RPC
responses carrying the result status; protocol failures use JSON-RPC
error codes (-32700 parse, -32600 invalid request, -32601 unknown
method, -32602 invalid params).
"""

from __future__ import annotations

import json
import logging
from datetime import date
from typing import Any, BinaryIO, Optional

import requests

from .registry import ToolCall, ToolDescriptor, ToolRegistry

log = logging.getLogger(__name__)

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602


class RpcSession:
    """Dispatches decoded JSON-RPC requests; mints per-session call ids."""

    def __init__(self, registry: ToolRegistry):
        self.registry = registry
        self._calls = 0

    def handle_bytes(self, payload: bytes | str) -> dict[str, Any]:
        try:
            request = json.loads(payload)
        except (ValueError, UnicodeDecodeError):
            return _error_response(None, PARSE_ERROR, "Parse error")
        return self.handle_request(request)

    def handle_request(self, request: Any) -> dict[str, Any]:
        if not isinstance(request, dict) or not isinstance(request.get("method"), str):
            return _error_response(None, INVALID_REQUEST, "Invalid Request")
        request_id = request.get("id")
        method = request["method"]
        params = request.get("params") or {}
        if method == "tools/list":
            tools = [d.to_dict() for d in self.registry.list_tools()]
            return _result_response(request_id, {"tools": tools})
        if method == "tools/call":
            if not isinstance(params, dict) or not isinstance(params.get("name"), str):
                return _error_response(request_id, INVALID_PARAMS, "params must carry a tool name")
            arguments = params.get("arguments") or {}
            if not isinstance(arguments, dict):
                return _error_response(request_id, INVALID_PARAMS, "arguments must be an object")
            self._calls += 1
            call = ToolCall(call_id=f"call-{self._calls}", tool=params["name"], args=arguments)
            result = self.registry.invoke(call)
            return _result_response(request_id, result.to_dict())
        return _error_response(request_id, METHOD_NOT_FOUND, f"Method not found: {method}")


def _result_response(request_id: Any, result: dict[str, Any]) -> dict[str, Any]:
    return {"jsonrpc": "2.0", "id": request_id, "result": result}


def _error_response(request_id: Any, code: int, message: str) -> dict[str, Any]:
    return {"jsonrpc": "2.0", "id": request_id, "error": {"code": code, "message": message}}


def encode_response(response: dict[str, Any]) -> bytes:
    return json.dumps(response, sort_keys=True, separators=(",", ":"), default=str).encode("utf-8") + b"\n"


def serve_stream(registry: ToolRegistry, rin: BinaryIO, rout: BinaryIO) -> None:
    """Answer newline-delimited JSON-RPC requests until EOF or transport failure."""
    session = RpcSession(registry)
    while True:
        try:
            line = rin.readline()
        except OSError as exc:
            log.warning("rpc stream closed: %s", exc)
            return
        if not line:
            return
        if not line.strip():
            continue
        response = session.handle_bytes(line)
        try:
            rout.write(encode_response(response))
            rout.flush()
        except OSError as exc:
            log.warning("rpc stream write failed: %s", exc)
            return


class RpcToolClient:
    """Registry-shaped client that invokes tools on a remote /rpc endpoint."""

    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._next_id = 0

    def _post(self, method: str, params: Optional[dict[str, Any]] = None) -> dict[str, Any]:
        self._next_id += 1
        body: dict[str, Any] = {"jsonrpc": "2.0", "id": self._next_id, "method": method}
        if params is not None:
            body["params"] = params
        reply = requests.post(f"{self.endpoint}/rpc", json=body, timeout=self.timeout)
        reply.raise_for_status()
        payload = reply.json()
        if "error" in payload:
            raise RuntimeError(f"rpc error {payload['error'].get('code')}: {payload['error'].get('message')}")
        return payload["result"]

    def list_tools(self) -> list[ToolDescriptor]:
        result = self._post("tools/list")
        return [
            ToolDescriptor(
                name=entry["name"],
                docstring=entry.get("docstring", ""),
                params_schema=[
                    (p["name"], p["kind"], p["required"]) for p in entry.get("params_schema", [])
                ],
                version=entry.get("version", "0"),
            )
            for entry in result["tools"]
        ]

    def invoke(self, call: ToolCall):
        from .registry import ToolResult

        args = {k: (v.isoformat() if isinstance(v, date) else v) for k, v in call.args.items()}
        result = self._post("tools/call", {"name": call.tool, "arguments": args})
        return ToolResult(
            call_id=call.call_id or result.get("call_id", ""),
            status=result["status"],
            fields=result.get("fields", {}),
            message=result.get("message", ""),
        )
