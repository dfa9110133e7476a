"""Registry semantics: registration, listing, schema-checked invocation."""

import random

import pytest

from specagent.demo import demo_handlers
from specagent.model import ParamSpec, ToolSpec
from specagent.registry import (
    RegistrationError,
    ToolCall,
    ToolRegistry,
    descriptor_from_spec,
    registry_from_bundle,
)


def probe_descriptor(name="Probe", params=(("x", "string", True),)):
    spec = ToolSpec(
        name=name,
        purpose="Probe.",
        inputs=[ParamSpec(n, k, r) for n, k, r in params],
    )
    return descriptor_from_spec(spec)


class TestRegister:
    def test_six_demo_tools_listed(self, registry):
        assert len(registry.list_tools()) == 6

    def test_duplicate_name_rejected(self):
        registry = ToolRegistry()
        registry.register(probe_descriptor(), lambda args: {})
        with pytest.raises(RegistrationError):
            registry.register(probe_descriptor(), lambda args: {})

    def test_case_insensitive_duplicate_rejected(self):
        registry = ToolRegistry()
        registry.register(probe_descriptor("GetStatus"), lambda args: {})
        with pytest.raises(RegistrationError):
            registry.register(probe_descriptor("getstatus"), lambda args: {})

    def test_sealed_registry_rejects_registration(self):
        registry = ToolRegistry().seal()
        with pytest.raises(RegistrationError):
            registry.register(probe_descriptor(), lambda args: {})

    def test_handler_called_once_per_invoke(self):
        calls = []
        registry = ToolRegistry()
        registry.register(probe_descriptor(), lambda args: calls.append(args) or {"ok": "y"})
        registry.seal()
        registry.invoke(ToolCall("c1", "Probe", {"x": "1"}))
        registry.invoke(ToolCall("c2", "Probe", {"x": "2"}))
        assert calls == [{"x": "1"}, {"x": "2"}]


class TestListTools:
    def test_empty_registry(self):
        assert ToolRegistry().list_tools() == []

    def test_name_sorted(self, registry):
        names = [d.name for d in registry.list_tools()]
        assert names == sorted(names)

    def test_invariant_under_registration_order(self, bundle, machines):
        handlers = demo_handlers(machines)
        rng = random.Random(3)
        baseline = None
        for _ in range(4):
            registry = ToolRegistry()
            tools = bundle.tools[:]
            rng.shuffle(tools)
            for tool in tools:
                registry.register(descriptor_from_spec(tool), handlers[tool.name])
            names = [d.name for d in registry.seal().list_tools()]
            baseline = baseline or names
            assert names == baseline


class TestInvoke:
    def test_demo_status_call(self, registry):
        result = registry.invoke(ToolCall("c1", "GetMachineStatus", {"machine_id": "7"}))
        assert result.status == "ok"
        assert result.fields["status"] in ("Running", "Stopped", "Maintenance")
        assert result.call_id == "c1"

    def test_unknown_tool_not_found(self, registry):
        result = registry.invoke(ToolCall("c1", "Frobnicate", {}))
        assert result.status == "not_found"

    def test_missing_required_is_bad_args_naming_param(self, registry):
        result = registry.invoke(ToolCall("c1", "GetMachineStatus", {}))
        assert result.status == "bad_args"
        assert "machine_id" in result.message

    def test_wrong_kind_is_bad_args(self, registry):
        result = registry.invoke(ToolCall("c1", "GetErrorLogs", {"machine_id": "7", "limit": "five"}))
        assert result.status == "bad_args"
        assert "limit" in result.message

    def test_unknown_arg_is_bad_args(self, registry):
        result = registry.invoke(ToolCall("c1", "GetMachineStatus", {"machine_id": "7", "bogus": 1}))
        assert result.status == "bad_args"
        assert "bogus" in result.message

    def test_handler_exception_becomes_tool_error(self):
        registry = ToolRegistry()

        def explode(args):
            raise RuntimeError("kaboom")

        registry.register(probe_descriptor(), explode)
        registry.seal()
        result = registry.invoke(ToolCall("c1", "Probe", {"x": "1"}))
        assert result.status == "tool_error"
        assert "kaboom" in result.message

    def test_ok_implies_schema_satisfied(self, registry):
        # fuzz: every ok result must have come from schema-valid args
        rng = random.Random(11)
        descriptors = {d.name: d for d in registry.list_tools()}
        pool = [None, "7", "12", 5, 2.5, True, "2025-06-01"]
        for i in range(200):
            name = rng.choice(list(descriptors) + ["Nope"])
            args = {}
            for pname, kind, _req in descriptors.get(name, probe_descriptor()).params_schema:
                value = rng.choice(pool)
                if value is not None:
                    args[pname] = value
            result = registry.invoke(ToolCall(f"c{i}", name, args))
            if result.status == "ok":
                schema = {n: (k, r) for n, k, r in descriptors[name].params_schema}
                for pname, (kind, required) in schema.items():
                    if required:
                        assert pname in args
                assert set(args) <= set(schema)

    def test_date_arg_accepts_iso_string(self, registry):
        result = registry.invoke(
            ToolCall("c1", "GetErrorLogs", {"machine_id": "12", "limit": 5, "since": "2025-06-01"})
        )
        assert result.status == "ok"
        assert result.fields["count"] == 4
