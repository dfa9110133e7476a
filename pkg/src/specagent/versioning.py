"""Content-addressed snapshot store with section-level diff and rollback.

Layout: one directory per snapshot id holding the verbatim documents plus
a ``manifest.json`` ({id, created_at, label, files:[{name, sha256}]}), and
an append-only ``index.json`` recording creation order. No deltas: spec
documents are small and a transparent store is easier to audit.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .model import SECTIONS
from .parser import section_texts


class SnapshotNotFoundError(KeyError):
    pass


@dataclass
class Snapshot:
    id: str
    created_at: str  # RFC 3339
    label: str
    documents: dict[str, str]


@dataclass
class ChangeEntry:
    tool: str
    section: str
    change: str  # "added" | "removed" | "modified"
    before_excerpt: str = ""
    after_excerpt: str = ""


@dataclass
class SpecDiff:
    added_tools: list[str] = field(default_factory=list)
    removed_tools: list[str] = field(default_factory=list)
    changed: list[ChangeEntry] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.added_tools or self.removed_tools or self.changed)


def content_id(documents: dict[str, str]) -> str:
    """Hex id derived purely from document names and bytes."""
    h = hashlib.sha256()
    for name in sorted(documents):
        digest = hashlib.sha256(documents[name].encode("utf-8")).hexdigest()
        h.update(name.encode("utf-8") + b"\0" + digest.encode("ascii") + b"\n")
    return h.hexdigest()


class SnapshotStore:
    """Directory-backed store; single writer, any number of readers."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @property
    def _index_path(self) -> Path:
        return self.root / "index.json"

    def _read_index(self) -> list[str]:
        if not self._index_path.exists():
            return []
        return json.loads(self._index_path.read_text(encoding="utf-8"))

    def _write_index(self, ids: list[str]) -> None:
        self._index_path.write_text(json.dumps(ids, indent=2) + "\n", encoding="utf-8")

    def list_ids(self) -> list[str]:
        """Snapshot ids in creation order."""
        return self._read_index()

    def snapshot(self, documents: dict[str, str], label: str = "") -> Snapshot:
        """Persist *documents*; identical content returns the existing snapshot."""
        snap_id = content_id(documents)
        snap_dir = self.root / snap_id
        if snap_dir.exists():
            return self.load(snap_id)
        created_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
        try:
            snap_dir.mkdir(parents=True)
            for name, text in documents.items():
                (snap_dir / name).write_text(text, encoding="utf-8")
            manifest = {
                "id": snap_id,
                "created_at": created_at,
                "label": label,
                "files": [
                    {"name": name, "sha256": hashlib.sha256(documents[name].encode("utf-8")).hexdigest()}
                    for name in sorted(documents)
                ],
            }
            (snap_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"failed to write snapshot under {snap_dir}: {exc}") from exc
        self._write_index(self._read_index() + [snap_id])
        return Snapshot(snap_id, created_at, label, dict(documents))

    def load(self, snap_id: str) -> Snapshot:
        snap_dir = self.root / snap_id
        manifest_path = snap_dir / "manifest.json"
        if not manifest_path.exists():
            raise SnapshotNotFoundError(f"unknown snapshot id {snap_id!r}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        documents = {
            entry["name"]: (snap_dir / entry["name"]).read_text(encoding="utf-8")
            for entry in manifest["files"]
        }
        return Snapshot(manifest["id"], manifest["created_at"], manifest.get("label") or "", documents)

    def rollback(self, snap_id: str, target_dir: Path | str) -> dict[str, str]:
        """Restore a snapshot's documents byte-identically into *target_dir*."""
        snap = self.load(snap_id)
        target = Path(target_dir)
        target.mkdir(parents=True, exist_ok=True)
        for stale in target.glob("*.md"):
            if stale.name not in snap.documents:
                stale.unlink()
        for name, text in snap.documents.items():
            (target / name).write_text(text, encoding="utf-8")
        return dict(snap.documents)


def _normalize(text: str) -> str:
    return "\n".join(line.rstrip() for line in text.splitlines()).strip("\n")


def _excerpt(text: str, limit: int = 120) -> str:
    flat = re.sub(r"\s+", " ", text).strip()
    return flat if len(flat) <= limit else flat[: limit - 1] + "…"


def diff_snapshots(a: Snapshot, b: Snapshot) -> SpecDiff:
    """Tool- and section-level differences between two snapshots.

    Comparison runs on normalized section text (trailing whitespace
    stripped), so prose-only edits still surface. Documents that do not
    carry a tool header are compared whole-file with a warning.
    """
    result = SpecDiff()
    tools_a = _tools_by_name(a, result.warnings, "first")
    tools_b = _tools_by_name(b, result.warnings, "second")

    result.added_tools = sorted(set(tools_b) - set(tools_a))
    result.removed_tools = sorted(set(tools_a) - set(tools_b))

    for tool in sorted(set(tools_a) & set(tools_b)):
        sections_a = tools_a[tool]
        sections_b = tools_b[tool]
        keys = list(SECTIONS)
        if "__file__" in sections_a or "__file__" in sections_b:
            keys = ["__file__"]
        for section in keys:
            text_a = _normalize(sections_a.get(section, ""))
            text_b = _normalize(sections_b.get(section, ""))
            if text_a == text_b:
                continue
            if not text_a:
                change = "added"
            elif not text_b:
                change = "removed"
            else:
                change = "modified"
            result.changed.append(ChangeEntry(tool, section, change, _excerpt(text_a), _excerpt(text_b)))
    return result


def _tools_by_name(snap: Snapshot, warnings: list[str], which: str) -> dict[str, dict[str, str]]:
    tools: dict[str, dict[str, str]] = {}
    for name in sorted(snap.documents):
        source = snap.documents[name]
        tool_name, sections = section_texts(source)
        if tool_name is None:
            warnings.append(f"{which} snapshot: {name} has no tool header; compared at file granularity")
            tools[name] = {"__file__": source}
        else:
            tools[tool_name] = sections
    return tools
