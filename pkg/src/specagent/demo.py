"""Bundled factory-floor demo domain: spec documents, fixture table, handlers.

The demo registry is backed by a static machine table so every run is
reproducible. Handlers return an empty record (rather than erroring) for
unknown machines, which lets the specs' empty-output defaults speak.
"""

from __future__ import annotations

import json
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from .model import Diagnostic, SpecBundle
from .parser import load_bundle

DEMO_DOMAIN = "factory-floor"

_data_root = resources.files("specagent") / "data"

SPEC_DIR = Path(str(_data_root / "specs"))
MACHINES_PATH = Path(str(_data_root / "machines.json"))
SCENARIOS_PATH = Path(str(_data_root / "scenarios.json"))
PROVIDER_SCRIPT_PATH = Path(str(_data_root / "provider_script.json"))


def read_spec_dir(spec_dir: Path | str) -> list[tuple[str, str]]:
    """(name, source) pairs for every .md document in a directory, sorted by name."""
    root = Path(spec_dir)
    return [(p.name, p.read_text(encoding="utf-8")) for p in sorted(root.glob("*.md"))]


def load_demo_bundle() -> tuple[SpecBundle | None, list[Diagnostic]]:
    return load_bundle(read_spec_dir(SPEC_DIR), DEMO_DOMAIN, version_label="demo")


def load_machines(path: Path | str = MACHINES_PATH) -> list[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def demo_handlers(machines: list[dict[str, Any]]) -> dict[str, Callable[[dict], dict]]:
    """Deterministic table-backed handlers for the six demo tools."""
    by_id = {m["machine_id"]: m for m in machines}

    def get_machine_status(args: dict) -> dict:
        m = by_id.get(args["machine_id"])
        if m is None:
            return {}
        return {"status": m["status"], "machine_id": m["machine_id"]}

    def get_downtime_reason(args: dict) -> dict:
        m = by_id.get(args["machine_id"])
        if m is None or not m["downtime_reason"]:
            return {}
        return {"reason": m["downtime_reason"], "machine_id": m["machine_id"]}

    def get_error_logs(args: dict) -> dict:
        m = by_id.get(args["machine_id"])
        if m is None:
            return {}
        limit = int(args.get("limit", 5))
        since = args.get("since")
        if isinstance(since, date):
            since = since.isoformat()
        entries = sorted(m["error_logs"], key=lambda e: e["date"], reverse=True)
        if since:
            entries = [e for e in entries if e["date"] >= since]
        entries = entries[: max(limit, 0)]
        return {
            "errors": "; ".join(f"{e['date']} {e['text']}" for e in entries),
            "count": len(entries),
            "machine_id": m["machine_id"],
        }

    def list_machines(args: dict) -> dict:
        wanted = args.get("status")
        rows = [m for m in machines if wanted is None or m["status"] == wanted]
        rows.sort(key=lambda m: (len(m["machine_id"]), m["machine_id"]))
        return {"machines": ", ".join(m["machine_id"] for m in rows), "count": len(rows)}

    def get_failure_rate(args: dict) -> dict:
        metric = args.get("metric", "failure_rate")
        machine_id = args.get("machine_id")
        if machine_id is not None:
            m = by_id.get(machine_id)
            if m is None:
                return {}
        else:
            m = max(machines, key=lambda row: (row[metric], row["machine_id"]))
        return {
            "machine_id": m["machine_id"],
            "failure_rate": m["failure_rate"],
            "downtime_hours": m["downtime_hours"],
            "window_days": 14,
        }

    def get_technician_on_duty(args: dict) -> dict:
        m = by_id.get(args["machine_id"])
        if m is None:
            return {}
        return {"technician": m["technician"], "machine_id": m["machine_id"]}

    return {
        "GetMachineStatus": get_machine_status,
        "GetDowntimeReason": get_downtime_reason,
        "GetErrorLogs": get_error_logs,
        "ListMachines": list_machines,
        "GetFailureRate": get_failure_rate,
        "GetTechnicianOnDuty": get_technician_on_duty,
    }
