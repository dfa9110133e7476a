"""JSON-RPC wire protocol: golden exchanges, stream transport, wire/in-process parity."""

import io
import json
import random
import threading
from pathlib import Path

import pytest
import requests

from specagent.registry import ToolCall
from specagent.rpc import RpcSession, encode_response, serve_stream
from specagent.runtime import AgentRuntime
from specagent.server import create_server

GOLDEN = Path(__file__).parent / "golden" / "rpc_exchanges.jsonl"


def normalize(payload: str) -> str:
    return json.dumps(json.loads(payload), sort_keys=True, separators=(",", ":"))


def golden_exchanges():
    return [json.loads(line) for line in GOLDEN.read_text().splitlines()]


class TestGoldenExchanges:
    def test_replay_matches_byte_for_byte(self, registry):
        session = RpcSession(registry)
        for exchange in golden_exchanges():
            response = session.handle_bytes(exchange["request"].encode())
            assert encode_response(response).decode().rstrip("\n") == exchange["response"], exchange["name"]

    def test_golden_covers_required_cases(self):
        names = {e["name"] for e in golden_exchanges()}
        assert {"tools_list", "call_ok", "call_not_found", "call_bad_args", "parse_error", "unknown_method"} <= names

    def test_parse_error_code(self, registry):
        response = RpcSession(registry).handle_bytes(b"\x00 not json")
        assert response["error"]["code"] == -32700
        assert response["id"] is None

    def test_unknown_method_code(self, registry):
        response = RpcSession(registry).handle_request({"jsonrpc": "2.0", "id": 9, "method": "tools/frob"})
        assert response["error"]["code"] == -32601

    def test_invalid_request_shape(self, registry):
        assert RpcSession(registry).handle_request([1, 2])["error"]["code"] == -32600
        assert RpcSession(registry).handle_request({"id": 1})["error"]["code"] == -32600

    def test_invalid_params(self, registry):
        response = RpcSession(registry).handle_request(
            {"jsonrpc": "2.0", "id": 1, "method": "tools/call", "params": {"arguments": {}}}
        )
        assert response["error"]["code"] == -32602


class TestStreamTransport:
    def test_newline_delimited_session(self, registry):
        requests_text = b"\n".join(
            [
                json.dumps({"jsonrpc": "2.0", "id": 1, "method": "tools/list"}).encode(),
                b"",
                json.dumps(
                    {
                        "jsonrpc": "2.0",
                        "id": 2,
                        "method": "tools/call",
                        "params": {"name": "GetMachineStatus", "arguments": {"machine_id": "12"}},
                    }
                ).encode(),
            ]
        )
        rin, rout = io.BytesIO(requests_text + b"\n"), io.BytesIO()
        serve_stream(registry, rin, rout)
        lines = rout.getvalue().decode().splitlines()
        assert len(lines) == 2
        listed = json.loads(lines[0])
        assert len(listed["result"]["tools"]) == 6
        called = json.loads(lines[1])
        assert called["result"]["fields"]["status"] == "Stopped"
        assert called["result"]["call_id"] == "call-1"

    def test_call_ids_increment_per_session(self, registry):
        session = RpcSession(registry)
        first = session.handle_request(
            {"jsonrpc": "2.0", "id": 1, "method": "tools/call", "params": {"name": "ListMachines"}}
        )
        second = session.handle_request(
            {"jsonrpc": "2.0", "id": 2, "method": "tools/call", "params": {"name": "ListMachines"}}
        )
        assert first["result"]["call_id"] == "call-1"
        assert second["result"]["call_id"] == "call-2"


@pytest.fixture()
def http_server(bundle, registry):
    runtime = AgentRuntime(bundle, registry)
    server = create_server(runtime, "127.0.0.1:0")
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()


class TestHttpTransportParity:
    def test_http_rpc_matches_in_process(self, registry, http_server):
        rng = random.Random(424242)
        tools = [d.name for d in registry.list_tools()]
        arg_pool = {
            "machine_id": ["7", "12", "21", "42", "3", "99"],
            "limit": [1, 3, 5],
            "since": ["2025-06-01", "2025-05-01"],
            "status": ["Running", "Stopped", "Maintenance", "Bogus"],
            "metric": ["failure_rate", "downtime_hours"],
        }
        for i in range(100):
            tool = rng.choice(tools + ["Frobnicate"])
            args = {}
            for name in rng.sample(list(arg_pool), k=rng.randrange(0, 3)):
                args[name] = rng.choice(arg_pool[name])
            wire = requests.post(
                f"{http_server}/rpc",
                json={"jsonrpc": "2.0", "id": i, "method": "tools/call", "params": {"name": tool, "arguments": args}},
                timeout=5,
            ).json()["result"]
            local = registry.invoke(ToolCall("x", tool, dict(args)))
            assert wire["status"] == local.status, (tool, args)
            assert wire["fields"] == json.loads(json.dumps(local.to_dict()))["fields"], (tool, args)
            assert wire["message"] == local.message

    def test_http_parse_error(self, http_server):
        reply = requests.post(f"{http_server}/rpc", data=b"{broken", timeout=5).json()
        assert reply["error"]["code"] == -32700


class TestRpcToolClient:
    def test_runtime_can_drive_tools_over_the_wire(self, bundle, http_server):
        from specagent.rpc import RpcToolClient

        client = RpcToolClient(http_server)
        names = [d.name for d in client.list_tools()]
        assert len(names) == 6

        runtime = AgentRuntime(bundle, client)
        session = runtime.create_session()
        answer, trace = runtime.run_turn(session, "check if machine 7 is down")
        assert "Running" in answer
        assert trace.calls[0][1].status == "ok"

    def test_client_surfaces_rpc_errors(self, http_server):
        from specagent.rpc import RpcToolClient

        client = RpcToolClient(http_server)
        with pytest.raises(RuntimeError, match="-?32601|Method not found"):
            client._post("tools/bogus")
