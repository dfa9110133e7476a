"""Slot engine: pattern compilation, extraction, coercion, defaults, post-processing."""

from datetime import date

import pytest

from specagent.model import (
    DefaultBehavior,
    OutputFieldSpec,
    ParamSpec,
    PostProcessRule,
    RelatedToolLink,
    SlotPattern,
    SpecBundle,
    ToolSpec,
)
from specagent.slots import (
    CoercionError,
    ExtractionResult,
    SlotValue,
    apply_defaults,
    coerce,
    compile_patterns,
    extract_slots,
    param_phrase_tables,
    post_process,
    reserved_value_tokens,
)

FIXED_TODAY = date(2025, 6, 9)


def tool_of(patterns, params, name="Probe"):
    return ToolSpec(
        name=name,
        purpose="Probe tool.",
        inputs=params,
        slot_patterns=[SlotPattern(p) for p in patterns],
    )


def extract(utterance, spec, session=None, phrases=None, today=None):
    return extract_slots(
        utterance,
        session or {},
        compile_patterns(spec),
        spec.inputs,
        phrases,
        today=today,
        reserved=reserved_value_tokens(spec),
    )


class TestCompilePatterns:
    def test_literals_and_single_capture(self):
        spec = tool_of(["check if {machine_id} is down"], [ParamSpec("machine_id")])
        (compiled,) = compile_patterns(spec)
        assert compiled.literals == ["check", "if", "is", "down"]
        assert compiled.captures == [("machine_id", False)]
        assert compiled.specificity == 4

    def test_bare_multi_capture(self):
        spec = tool_of(["{query...}"], [ParamSpec("query")])
        (compiled,) = compile_patterns(spec)
        assert compiled.literals == []
        assert compiled.captures == [("query", True)]
        assert compiled.specificity == 0

    def test_demo_pattern_counts_match_spec_files(self, bundle):
        for tool in bundle.tools:
            assert len(compile_patterns(tool)) == len(tool.slot_patterns)


class TestExtraction:
    def test_paper_style_utterance(self):
        spec = tool_of(
            ["is {machine_id} up right now"],
            [ParamSpec("machine_id", required=True, aliases=["machine", "line"])],
        )
        result = extract("Is machine 7 up right now?", spec)
        assert result.filled["machine_id"].value == "7"
        assert result.filled["machine_id"].origin == "utterance"
        assert result.unmatched_required == []

    def test_alias_fill_line(self):
        spec = tool_of(
            ["is {machine_id} down"],
            [ParamSpec("machine_id", required=True, aliases=["machine", "line"])],
        )
        result = extract("is line 7 down", spec)
        assert result.filled["machine_id"].value == "7"

    def test_pure_carryover(self):
        spec = tool_of(
            ["status of {machine_id}"],
            [ParamSpec("machine_id", required=True, aliases=["machine"])],
        )
        session = {"machine_id": SlotValue("7", "7", "utterance")}
        result = extract("and now?", spec, session=session)
        assert result.filled["machine_id"].origin == "session_carryover"
        assert result.filled["machine_id"].value == "7"

    def test_carryover_skips_optional_without_anaphor(self):
        spec = tool_of(["rate of {m}"], [ParamSpec("m", aliases=["machine"])])
        session = {"m": SlotValue("7", "7", "utterance")}
        assert "m" not in extract("highest rate overall", spec, session=session).filled
        got = extract("rate for that machine again", spec, session=session)
        assert got.filled["m"].origin == "session_carryover"

    def test_utterance_beats_carryover(self):
        spec = tool_of(
            ["status of {machine_id}"],
            [ParamSpec("machine_id", required=True, aliases=["machine"])],
        )
        session = {"machine_id": SlotValue("7", "7", "utterance")}
        result = extract("status of 12", spec, session=session)
        assert result.filled["machine_id"].value == "12"
        assert result.filled["machine_id"].origin == "utterance"

    def test_specificity_dominance(self):
        spec = tool_of(
            ["see {x}", "see alpha {x}"],  # less specific authored first
            [ParamSpec("x", required=True)],
        )
        result = extract("see alpha beta", spec)
        assert result.filled["x"].value == "beta"
        assert result.matched_patterns[0] == "see alpha {x}"

    def test_equal_specificity_resolved_by_authoring_order(self):
        spec = tool_of(["{x} alpha", "alpha {x}"], [ParamSpec("x", required=True)])
        result = extract("beta alpha gamma", spec)
        assert result.filled["x"].value == "beta"
        assert result.matched_patterns == ["{x} alpha", "alpha {x}"]

    def test_pronoun_never_captured(self):
        spec = tool_of(
            ["why is {machine_id} down"],
            [ParamSpec("machine_id", required=True, aliases=["machine"])],
        )
        result = extract("why is it down?", spec)
        assert result.filled == {}
        assert result.unmatched_required == ["machine_id"]

    def test_reserved_vocabulary_not_captured_by_alias(self):
        spec = ToolSpec(
            name="Status",
            purpose="p",
            inputs=[ParamSpec("machine_id", required=True, aliases=["machine"])],
            slot_patterns=[SlotPattern("is {machine_id} down")],
        )
        result = extract("is the machine down", spec)
        assert result.filled == {}

    def test_multi_token_capture_bounded_by_literal(self):
        spec = tool_of(["find {q...} in logs"], [ParamSpec("q")])
        result = extract("find pressure drop events in logs", spec)
        assert result.filled["q"].value == "pressure drop events"

    def test_trailing_multi_capture_takes_remainder(self):
        spec = tool_of(["search {q...}"], [ParamSpec("q")])
        result = extract("search conveyor belt jam", spec)
        assert result.filled["q"].value == "conveyor belt jam"

    def test_mixed_tools_rejected(self):
        a = compile_patterns(tool_of(["x {p}"], [ParamSpec("p")], name="A"))
        b = compile_patterns(tool_of(["y {p}"], [ParamSpec("p")], name="B"))
        with pytest.raises(ValueError):
            extract_slots("x 1", {}, a + b, [ParamSpec("p")])

    def test_instantiation_round_trip_small(self):
        spec = tool_of(
            ["errors on {machine_id} since {since}"],
            [ParamSpec("machine_id", required=True), ParamSpec("since", kind="date")],
        )
        result = extract("errors on 12 since 2025-06-01", spec)
        assert result.filled["machine_id"].value == "12"
        assert result.filled["since"].value == date(2025, 6, 1)


class TestCoerce:
    def test_string_identity(self):
        assert coerce("7", ParamSpec("machine_id", "string")) == "7"

    def test_enum_via_value_phrases(self):
        param = ParamSpec("status", "enum", enum_values=["Running", "Stopped", "Maintenance"])
        phrases = {"Stopped": ["down", "offline"], "Running": ["up"]}
        assert coerce("down", param, phrases) == "Stopped"
        assert coerce("STOPPED", param, phrases) == "Stopped"

    def test_word_number_rejected(self):
        with pytest.raises(CoercionError, match="integer"):
            coerce("seven", ParamSpec("n", "integer"))

    @pytest.mark.parametrize(
        "raw,kind,expected",
        [
            ("42", "integer", 42),
            ("-3", "integer", -3),
            ("2.5", "number", 2.5),
            ("yes", "boolean", True),
            ("off", "boolean", False),
            ("2025-01-31", "date", date(2025, 1, 31)),
        ],
    )
    def test_happy_coercions(self, raw, kind, expected):
        assert coerce(raw, ParamSpec("p", kind)) == expected

    def test_relative_dates_use_injected_clock(self):
        param = ParamSpec("since", "date")
        assert coerce("today", param, today=FIXED_TODAY) == FIXED_TODAY
        assert coerce("yesterday", param, today=FIXED_TODAY) == date(2025, 6, 8)

    @pytest.mark.parametrize(
        "raw,kind",
        [
            ("1.5", "integer"),
            ("abc", "number"),
            ("maybe", "boolean"),
            ("Paused", "enum"),
            ("13th of May", "date"),
            ("2025-13-45", "date"),
        ],
    )
    def test_kind_mismatches_rejected(self, raw, kind):
        param = ParamSpec("p", kind, enum_values=["A", "B"] if kind == "enum" else [])
        with pytest.raises(CoercionError):
            coerce(raw, param)

    def test_error_names_param_and_kind(self):
        with pytest.raises(CoercionError, match="'limit'"):
            coerce("lots", ParamSpec("limit", "integer"))


class TestPhraseTables:
    def test_cross_tool_lookup_for_enum_param(self, bundle):
        tables = param_phrase_tables(bundle, bundle.tool("ListMachines"))
        assert "down" in [s for syns in tables["status"].values() for s in syns]

    def test_own_tool_outputs_win(self):
        a = ToolSpec(
            name="A",
            purpose="p",
            inputs=[ParamSpec("mode", "enum", enum_values=["X"])],
            outputs=[OutputFieldSpec("mode", "enum", enum_values=["X"], value_phrases={"X": ["own"]})],
        )
        b = ToolSpec(
            name="B",
            purpose="p",
            outputs=[OutputFieldSpec("mode", "enum", enum_values=["X"], value_phrases={"X": ["other"]})],
        )
        tables = param_phrase_tables(SpecBundle("d", [a, b]), a)
        assert tables["mode"] == {"X": ["own"]}


class TestApplyDefaults:
    def spec(self, behaviors):
        return ToolSpec(
            name="T",
            purpose="p",
            inputs=[
                ParamSpec("machine_id", required=True),
                ParamSpec("limit", "integer", required=True),
            ],
            defaults=behaviors,
        )

    def test_ask_user_short_circuits(self):
        spec = self.spec([DefaultBehavior("missing_input", "machine_id", "ask_user", "Which machine do you mean?")])
        call = apply_defaults(ExtractionResult("T", {}, [], ["machine_id", "limit"]), spec)
        assert call.clarification == "Which machine do you mean?"
        assert not call.ready

    def test_no_missing_params_is_ready(self):
        spec = self.spec([])
        filled = {
            "machine_id": SlotValue("7", "7", "utterance"),
            "limit": SlotValue("5", 5, "utterance"),
        }
        call = apply_defaults(ExtractionResult("T", filled, [], []), spec)
        assert call.ready and call.clarification is None
        assert call.args == {"machine_id": "7", "limit": 5}

    def test_use_default_fills_with_default_origin(self):
        spec = self.spec(
            [
                DefaultBehavior("missing_input", "machine_id", "use_default", "LINE-1"),
                DefaultBehavior("missing_input", "limit", "use_default", "5"),
            ]
        )
        call = apply_defaults(ExtractionResult("T", {}, [], ["machine_id", "limit"]), spec)
        assert call.ready
        assert call.args == {"machine_id": "LINE-1", "limit": 5}
        assert call.slots["machine_id"].origin == "default"

    def test_refuse_yields_refusal(self):
        spec = self.spec([DefaultBehavior("missing_input", "machine_id", "refuse", "Cannot proceed.")])
        call = apply_defaults(ExtractionResult("T", {}, [], ["machine_id", "limit"]), spec)
        assert call.refusal == "Cannot proceed."

    def test_undeclared_behavior_generates_question_naming_param(self):
        spec = self.spec([])
        call = apply_defaults(ExtractionResult("T", {}, [], ["machine_id", "limit"]), spec)
        assert call.clarification is not None
        assert "machine_id" in call.clarification

    def test_wrong_tool_rejected(self):
        with pytest.raises(ValueError):
            apply_defaults(ExtractionResult("Other", {}, [], []), self.spec([]))


class TestPostProcess:
    def test_suggest_on_match(self):
        rules = [PostProcessRule("status", "equals", "Stopped", "suggest_tool", "GetErrorLogs")]
        rendered = post_process({"status": "Stopped"}, rules, [])
        assert rendered.suggested_followups == ["GetErrorLogs"]

    def test_no_rules_renders_raw_fields(self):
        rendered = post_process({"status": "Running", "machine_id": "7"}, [], [])
        assert rendered.text == "status: Running; machine_id: 7"
        assert rendered.suggested_followups == []

    def test_format_template_substitutes_fields(self):
        rules = [PostProcessRule("status", "non_empty", "", "format_template", "Machine {machine_id} is {status}.")]
        rendered = post_process({"status": "Running", "machine_id": "7"}, rules, [])
        assert rendered.text == "Machine 7 is Running."

    def test_notes_append_after_text(self):
        rules = [
            PostProcessRule("count", "greater_than", "4", "append_note", "High volume."),
            PostProcessRule("count", "non_empty", "", "format_template", "{count} entries."),
        ]
        rendered = post_process({"count": 9}, rules, [])
        assert rendered.text == "9 entries.\nHigh volume."

    def test_rule_on_absent_field_skipped_with_warning(self):
        rules = [PostProcessRule("ghost", "equals", "x", "append_note", "nope")]
        rendered = post_process({"status": "Running"}, rules, [])
        assert rendered.warnings and "ghost" in rendered.warnings[0]

    def test_auto_link_emits_call_with_shared_params(self, bundle):
        link = RelatedToolLink(
            "after", "GetDowntimeReason", ["why"], ("status", "equals", "Stopped"), auto_invoke=True
        )
        rendered = post_process(
            {"status": "Stopped", "machine_id": "12"},
            [],
            [link],
            call_args={"machine_id": "12"},
            bundle=bundle,
        )
        assert len(rendered.auto_calls) == 1
        assert rendered.auto_calls[0].tool == "GetDowntimeReason"
        assert rendered.auto_calls[0].args == {"machine_id": "12"}

    def test_auto_link_condition_unmet_no_call(self, bundle):
        link = RelatedToolLink(
            "after", "GetDowntimeReason", [], ("status", "equals", "Stopped"), auto_invoke=True
        )
        rendered = post_process({"status": "Running", "machine_id": "7"}, [], [link], bundle=bundle)
        assert rendered.auto_calls == []

    def test_numeric_comparison_on_strings(self):
        rules = [PostProcessRule("count", "greater_than", "4", "append_note", "hot")]
        assert post_process({"count": "9"}, rules, []).text.endswith("hot")
        assert "hot" not in post_process({"count": "2"}, rules, []).text
