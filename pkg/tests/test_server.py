"""HTTP service endpoints: sessions, spec browsing, health, static files."""

import threading

import pytest
import requests

from specagent.runtime import AgentRuntime
from specagent.server import create_server


@pytest.fixture()
def server_url(bundle, registry, provider, tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<!doctype html><title>console</title>", encoding="utf-8")
    (ui / "app.js").write_text("export {};", encoding="utf-8")
    runtime = AgentRuntime(bundle, registry, provider)
    server = create_server(runtime, "127.0.0.1:0", str(ui))
    threading.Thread(target=server.serve_forever, daemon=True).start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()


def test_healthz(server_url):
    assert requests.get(f"{server_url}/healthz", timeout=5).json() == {"status": "ok"}


def test_session_lifecycle(server_url):
    session = requests.post(f"{server_url}/api/session", timeout=5).json()
    session_id = session["session_id"]
    reply = requests.post(
        f"{server_url}/api/session/{session_id}/message",
        json={"text": "check if machine 7 is down"},
        timeout=5,
    ).json()
    assert "Running" in reply["answer"]
    trace = reply["trace"]
    assert trace["routing"]["target"] == "TOOL_CALLING_AGENT"
    assert trace["calls"][0]["call"]["tool"] == "GetMachineStatus"
    assert trace["calls"][0]["call"]["args"] == {"machine_id": "7"}


def test_two_sessions_are_independent(server_url):
    a = requests.post(f"{server_url}/api/session", timeout=5).json()["session_id"]
    b = requests.post(f"{server_url}/api/session", timeout=5).json()["session_id"]
    assert a != b
    requests.post(f"{server_url}/api/session/{a}/message", json={"text": "check if machine 12 is down"}, timeout=5)
    reply = requests.post(
        f"{server_url}/api/session/{b}/message", json={"text": "why is it down?"}, timeout=5
    ).json()
    assert reply["trace"]["calls"] == []  # no carryover leaked from session a


def test_unknown_session_404(server_url):
    reply = requests.post(f"{server_url}/api/session/nope/message", json={"text": "hi"}, timeout=5)
    assert reply.status_code == 404


def test_malformed_body_400(server_url):
    session_id = requests.post(f"{server_url}/api/session", timeout=5).json()["session_id"]
    reply = requests.post(
        f"{server_url}/api/session/{session_id}/message", data=b"not json", timeout=5
    )
    assert reply.status_code == 400


def test_spec_tools_listing(server_url):
    payload = requests.get(f"{server_url}/api/spec/tools", timeout=5).json()
    names = [t["name"] for t in payload["tools"]]
    assert len(names) == 6 and names == sorted(names)


def test_spec_tool_detail(server_url):
    payload = requests.get(f"{server_url}/api/spec/tools/GetMachineStatus", timeout=5).json()
    assert payload["name"] == "GetMachineStatus"
    assert payload["inputs"][0]["aliases"] == ["machine", "machine number", "line", "equipment", "ID tag"]
    assert payload["context_rules"][0]["effect"] == "redirect"


def test_spec_tool_unknown_404(server_url):
    reply = requests.get(f"{server_url}/api/spec/tools/Nope", timeout=5)
    assert reply.status_code == 404


def test_static_ui_served(server_url):
    index = requests.get(f"{server_url}/ui", timeout=5)
    assert index.status_code == 200
    assert "console" in index.text
    js = requests.get(f"{server_url}/ui/app.js", timeout=5)
    assert js.headers["Content-Type"].startswith("text/javascript")


def test_static_traversal_blocked(server_url):
    reply = requests.get(f"{server_url}/ui/../pyproject.toml", timeout=5)
    assert reply.status_code == 404


def test_unscripted_message_degrades_gracefully(server_url):
    session_id = requests.post(f"{server_url}/api/session", timeout=5).json()["session_id"]
    reply = requests.post(
        f"{server_url}/api/session/{session_id}/message",
        json={"text": "entirely unscripted banter"},
        timeout=5,
    )
    assert reply.status_code == 200
    assert "answer" in reply.json()
