"""In-process tool registry: registration, discovery, schema-checked invocation.

The registry is sealed after startup and immutable afterwards, so
invocations may run concurrently; handlers must be reentrant. Handler
failures never escape invoke: every outcome is encoded in ToolResult.status.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Callable, Mapping

from .model import SpecBundle, ToolSpec
from .prompts import compile_docstring

Handler = Callable[[dict[str, Any]], dict[str, Any]]


class RegistrationError(ValueError):
    pass


@dataclass
class ToolDescriptor:
    name: str
    docstring: str
    params_schema: list[tuple[str, str, bool]]  # (name, kind, required)
    version: str = "0"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "docstring": self.docstring,
            "params_schema": [
                {"name": n, "kind": k, "required": r} for n, k, r in self.params_schema
            ],
            "version": self.version,
        }


@dataclass
class ToolCall:
    call_id: str
    tool: str
    args: dict[str, Any] = field(default_factory=dict)


@dataclass
class ToolResult:
    call_id: str
    status: str  # "ok" | "tool_error" | "not_found" | "bad_args"
    fields: dict[str, Any] = field(default_factory=dict)
    message: str = ""
    latency: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict[str, Any]:
        fields = {
            k: (v.isoformat() if isinstance(v, date) else v) for k, v in self.fields.items()
        }
        return {"call_id": self.call_id, "status": self.status, "fields": fields, "message": self.message}


def descriptor_from_spec(spec: ToolSpec, version: str = "0") -> ToolDescriptor:
    return ToolDescriptor(
        name=spec.name,
        docstring=compile_docstring(spec),
        params_schema=[(p.name, p.kind, p.required) for p in spec.inputs],
        version=version,
    )


def _kind_ok(value: Any, kind: str) -> bool:
    if kind == "string":
        return isinstance(value, str)
    if kind == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "boolean":
        return isinstance(value, bool)
    if kind == "enum":
        return isinstance(value, str)
    if kind == "date":
        if isinstance(value, date):
            return True
        if isinstance(value, str):
            try:
                date.fromisoformat(value)
                return True
            except ValueError:
                return False
        return False
    return False


class ToolRegistry:
    """Name-keyed registry of descriptors and their invocation handlers."""

    def __init__(self) -> None:
        self._tools: dict[str, tuple[ToolDescriptor, Handler]] = {}
        self._sealed = False

    def register(self, descriptor: ToolDescriptor, handler: Handler) -> None:
        if self._sealed:
            raise RegistrationError("registry is sealed")
        key = descriptor.name.lower()
        if key in self._tools:
            raise RegistrationError(f"tool '{descriptor.name}' already registered")
        self._tools[key] = (descriptor, handler)

    def seal(self) -> "ToolRegistry":
        self._sealed = True
        return self

    def list_tools(self) -> list[ToolDescriptor]:
        """Descriptors in stable, name-sorted order."""
        return [d for d, _ in sorted(self._tools.values(), key=lambda pair: pair[0].name)]

    def invoke(self, call: ToolCall) -> ToolResult:
        """Execute a call; failures come back as statuses, never exceptions."""
        start = time.perf_counter()
        entry = self._tools.get(call.tool.lower())
        if entry is None:
            return ToolResult(call.call_id, "not_found", message=f"unknown tool '{call.tool}'")
        descriptor, handler = entry
        problem = self._check_args(descriptor, call.args)
        if problem:
            return ToolResult(call.call_id, "bad_args", message=problem)
        try:
            fields = handler(dict(call.args))
        except Exception as exc:  # noqa: BLE001 - handler faults become results
            return ToolResult(
                call.call_id, "tool_error", message=str(exc), latency=time.perf_counter() - start
            )
        return ToolResult(call.call_id, "ok", dict(fields or {}), latency=time.perf_counter() - start)

    @staticmethod
    def _check_args(descriptor: ToolDescriptor, args: Mapping[str, Any]) -> str:
        schema = {name: (kind, required) for name, kind, required in descriptor.params_schema}
        for name, (kind, required) in schema.items():
            if required and name not in args:
                return f"missing required parameter '{name}'"
        for name, value in args.items():
            if name not in schema:
                return f"unknown parameter '{name}'"
            kind = schema[name][0]
            if not _kind_ok(value, kind):
                return f"parameter '{name}' is not a valid {kind}: {value!r}"
        return ""


def registry_from_bundle(
    bundle: SpecBundle, handlers: Mapping[str, Handler], version: str = ""
) -> ToolRegistry:
    """Build and seal a registry for a bundle; tools without a handler get a stub."""
    registry = ToolRegistry()
    version = version or bundle.version_label or "0"
    for tool in bundle.tools:
        handler = handlers.get(tool.name)
        if handler is None:
            handler = _unbound_handler(tool.name)
        registry.register(descriptor_from_spec(tool, version), handler)
    return registry.seal()


def _unbound_handler(name: str) -> Handler:
    def handler(args: dict[str, Any]) -> dict[str, Any]:
        raise RuntimeError(f"no handler bound for tool '{name}'")

    return handler
