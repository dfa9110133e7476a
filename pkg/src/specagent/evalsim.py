"""Scenario-driven evaluation and synthetic dialogue generation.

Metrics are exact ratios of integer counts, reproducible bit-for-bit
under the scripted provider. Sessions reset per scenario, so carryover is
exercised within a scenario and never across scenarios. A wrong endpoint
makes the turn wrong for slot metrics too and contributes no micro pairs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timezone
from typing import Any, IO, Optional

from jsonschema import validate as _validate_schema

from .model import SpecBundle
from .prompts import CHAT_LABEL, TOOL_LABEL
from .providers import ProviderBinding, ScriptMissError
from .runtime import AgentRuntime, RuntimeConfig, TurnTrace


class EvalAbort(RuntimeError):
    """The scripted provider is incomplete for this suite: a fixture bug."""

    def __init__(self, utterance: str, role: str):
        super().__init__(f"scripted provider has no {role!r} reply for {utterance!r}; fix the scenario fixtures")
        self.utterance = utterance
        self.role = role


class SuiteMismatchError(ValueError):
    pass


@dataclass
class GoldTurn:
    utterance: str
    gold_target: Optional[str] = None  # TOOL_CALLING_AGENT | GENERAL_CHAT_AGENT
    gold_tool: Optional[str] = None
    gold_args: Optional[dict[str, Any]] = None
    answer_must_contain: Optional[list[str]] = None


@dataclass
class Scenario:
    id: str
    turns: list[GoldTurn]
    description: str = ""


@dataclass
class Metric:
    numerator: int = 0
    denominator: int = 0

    @property
    def ratio(self) -> float:
        return self.numerator / self.denominator if self.denominator else 1.0

    def to_dict(self) -> dict[str, Any]:
        return {"numerator": self.numerator, "denominator": self.denominator, "ratio": self.ratio}


@dataclass
class Failure:
    scenario: str
    turn: int
    kind: str  # "routing" | "endpoint" | "slots" | "answer"
    expected: str
    observed: str

    def key(self) -> tuple:
        return (self.scenario, self.turn, self.kind, self.expected, self.observed)


@dataclass
class MetricsReport:
    suite: str
    routing_accuracy: Metric = field(default_factory=Metric)
    endpoint_accuracy: Metric = field(default_factory=Metric)
    slot_accuracy_strict: Metric = field(default_factory=Metric)
    slot_accuracy_micro: Metric = field(default_factory=Metric)
    per_scenario: dict[str, dict[str, Any]] = field(default_factory=dict)
    failures: list[Failure] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def metrics(self) -> dict[str, Metric]:
        return {
            "routing_accuracy": self.routing_accuracy,
            "endpoint_accuracy": self.endpoint_accuracy,
            "slot_accuracy_strict": self.slot_accuracy_strict,
            "slot_accuracy_micro": self.slot_accuracy_micro,
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "notes": list(self.notes),
            "metrics": {name: metric.to_dict() for name, metric in self.metrics().items()},
            "per_scenario": self.per_scenario,
            "failures": [asdict(f) for f in self.failures],
        }


def load_scenarios(source: str | dict) -> tuple[str, list[Scenario]]:
    """Read a scenario suite from a JSON file path or an already-parsed dict."""
    if isinstance(source, str):
        with open(source, encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        payload = source
    scenarios = []
    for entry in payload["scenarios"]:
        turns = []
        for turn in entry["turns"]:
            gold = GoldTurn(
                utterance=turn["utterance"],
                gold_target=turn.get("gold_target"),
                gold_tool=turn.get("gold_tool"),
                gold_args=turn.get("gold_args"),
                answer_must_contain=turn.get("answer_must_contain"),
            )
            if gold.gold_tool is not None and gold.gold_target != TOOL_LABEL:
                raise ValueError(
                    f"scenario {entry['id']}: a turn with gold_tool must set gold_target={TOOL_LABEL}"
                )
            if gold.gold_target not in (None, TOOL_LABEL, CHAT_LABEL):
                raise ValueError(f"scenario {entry['id']}: unknown gold_target {gold.gold_target!r}")
            turns.append(gold)
        scenarios.append(Scenario(id=entry["id"], turns=turns, description=entry.get("description", "")))
    return payload.get("suite", "unnamed"), scenarios


def _json_value(value: Any) -> Any:
    if isinstance(value, date):
        return value.isoformat()
    return value


def _args_jsonable(args: dict[str, Any]) -> dict[str, Any]:
    return {k: _json_value(v) for k, v in args.items()}


def _args_equal(observed: dict[str, Any], gold: dict[str, Any]) -> bool:
    if set(observed) != set(gold):
        return False
    for key, gold_value in gold.items():
        value = _json_value(observed[key])
        if isinstance(gold_value, (int, float)) and not isinstance(gold_value, bool):
            if not isinstance(value, (int, float)) or isinstance(value, bool) or float(value) != float(gold_value):
                return False
        elif value != gold_value:
            return False
    return True


def _run_suite(
    bundle: SpecBundle,
    scenarios: list[Scenario],
    provider: Optional[ProviderBinding],
    registry,
    config: Optional[RuntimeConfig] = None,
    today: Optional[date] = None,
) -> tuple[AgentRuntime, list[tuple[Scenario, list[TurnTrace]]]]:
    runtime = AgentRuntime(bundle, registry, provider, config, today)
    results = []
    for scenario in scenarios:
        session = runtime.create_session(f"eval-{scenario.id}")
        traces = []
        for turn in scenario.turns:
            try:
                _, trace = runtime.run_turn(session, turn.utterance)
            except ScriptMissError as exc:
                raise EvalAbort(exc.utterance, exc.role) from exc
            traces.append(trace)
        results.append((scenario, traces))
    return runtime, results


def run_eval(
    bundle: SpecBundle,
    scenarios: list[Scenario],
    provider: Optional[ProviderBinding],
    registry,
    suite: str = "unnamed",
    config: Optional[RuntimeConfig] = None,
    today: Optional[date] = None,
) -> MetricsReport:
    """Score the runtime against gold scenarios.

    routing: predicted target vs gold_target; endpoint: first invoked tool
    vs gold_tool; slots strict: full coerced arg map equality (endpoint
    must match); slots micro: per (param, value) pair. Denominators count
    the turns (or pairs) that carry the corresponding gold field.
    """
    report = MetricsReport(suite=suite)
    report.notes.append("sessions reset per scenario; slot carryover never crosses scenarios")
    provider_kind = provider.kind if provider is not None else "none"
    report.notes.append(f"provider: {provider_kind}")
    if provider is not None and provider.kind == "http":
        report.notes.append("http provider replies are not reproducible; treat this report as indicative")

    _, results = _run_suite(bundle, scenarios, provider, registry, config, today)
    for scenario, traces in results:
        scen = {name: Metric() for name in ("routing_accuracy", "endpoint_accuracy", "slot_accuracy_strict", "slot_accuracy_micro")}
        for turn_index, (turn, trace) in enumerate(zip(scenario.turns, traces)):
            first_call = trace.calls[0] if trace.calls else None
            observed_tool = first_call[0].tool if first_call else None
            observed_args = dict(first_call[0].args) if first_call else {}

            if turn.gold_target is not None:
                _score(report.routing_accuracy, scen["routing_accuracy"], trace.routing.target == turn.gold_target)
                if trace.routing.target != turn.gold_target:
                    report.failures.append(
                        Failure(scenario.id, turn_index, "routing", turn.gold_target, trace.routing.target)
                    )
            if turn.gold_tool is not None:
                endpoint_ok = observed_tool == turn.gold_tool
                _score(report.endpoint_accuracy, scen["endpoint_accuracy"], endpoint_ok)
                if not endpoint_ok:
                    report.failures.append(
                        Failure(scenario.id, turn_index, "endpoint", turn.gold_tool, str(observed_tool))
                    )
            if turn.gold_args is not None:
                endpoint_ok = turn.gold_tool is None or observed_tool == turn.gold_tool
                strict_ok = endpoint_ok and _args_equal(observed_args, turn.gold_args)
                _score(report.slot_accuracy_strict, scen["slot_accuracy_strict"], strict_ok)
                if not strict_ok:
                    report.failures.append(
                        Failure(
                            scenario.id,
                            turn_index,
                            "slots",
                            json.dumps(turn.gold_args, sort_keys=True),
                            json.dumps(_args_jsonable(observed_args), sort_keys=True),
                        )
                    )
                for key, gold_value in turn.gold_args.items():
                    pair_ok = endpoint_ok and key in observed_args and _args_equal(
                        {key: observed_args[key]}, {key: gold_value}
                    )
                    _score(report.slot_accuracy_micro, scen["slot_accuracy_micro"], pair_ok)
            if turn.answer_must_contain:
                missing = [s for s in turn.answer_must_contain if s not in trace.final_answer]
                if missing:
                    report.failures.append(
                        Failure(scenario.id, turn_index, "answer", json.dumps(missing), trace.final_answer)
                    )
        report.per_scenario[scenario.id] = {name: metric.to_dict() for name, metric in scen.items()}
    return report


def _score(total: Metric, scenario_metric: Metric, ok: bool) -> None:
    total.denominator += 1
    scenario_metric.denominator += 1
    if ok:
        total.numerator += 1
        scenario_metric.numerator += 1


# -- dialogue generation ----------------------------------------------------

DIALOGUE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["scenario", "bundle_version", "provider_kind", "generated_at", "turns"],
    "properties": {
        "scenario": {"type": "string"},
        "bundle_version": {"type": "string"},
        "provider_kind": {"type": "string"},
        "generated_at": {"type": "string"},
        "turns": {"type": "array", "items": {"$ref": "#/$defs/turn"}},
    },
    "$defs": {
        "turn": {
            "type": "object",
            "required": ["session_id", "utterance", "routing", "calls", "final_answer"],
            "properties": {
                "session_id": {"type": "string"},
                "utterance": {"type": "string"},
                "routing": {
                    "type": "object",
                    "required": ["target", "mechanism", "fired_cues"],
                    "properties": {
                        "target": {"enum": [TOOL_LABEL, CHAT_LABEL]},
                        "mechanism": {"enum": ["cue_match", "provider", "fallback"]},
                        "fired_cues": {"type": "array", "items": {"type": "string"}},
                    },
                },
                "retrieval_hits": {"type": ["array", "null"]},
                "candidate_tool": {"type": ["string", "null"]},
                "extraction": {"type": ["object", "null"]},
                "calls": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["call", "result"],
                        "properties": {
                            "call": {
                                "type": "object",
                                "required": ["call_id", "tool", "args"],
                            },
                            "result": {
                                "type": "object",
                                "required": ["call_id", "status", "fields"],
                                "properties": {
                                    "status": {"enum": ["ok", "tool_error", "not_found", "bad_args"]},
                                },
                            },
                        },
                    },
                },
                "final_answer": {"type": "string"},
                "timings": {"type": "object"},
                "notes": {"type": "array"},
            },
        }
    },
}


def validate_dialogue(payload: dict[str, Any]) -> None:
    _validate_schema(payload, DIALOGUE_SCHEMA)


def canonical_dialogue(payload: dict[str, Any]) -> dict[str, Any]:
    """Copy with volatile fields (generated_at, timings) removed, for comparison."""
    clean = json.loads(json.dumps(payload))
    clean.pop("generated_at", None)
    for turn in clean.get("turns", []):
        turn.pop("timings", None)
    return clean


def generate_dialogues(
    bundle: SpecBundle,
    scenarios: list[Scenario],
    provider: Optional[ProviderBinding],
    registry,
    sink: IO[str],
    config: Optional[RuntimeConfig] = None,
    today: Optional[date] = None,
) -> int:
    """Replay every scenario and append one dialogue trace per line to *sink*."""
    written = 0
    _, results = _run_suite(bundle, scenarios, provider, registry, config, today)
    provider_kind = provider.kind if provider is not None else "none"
    for scenario, traces in results:
        payload = {
            "scenario": scenario.id,
            "bundle_version": bundle.version_label,
            "provider_kind": provider_kind,
            "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "turns": [trace.to_dict() for trace in traces],
        }
        validate_dialogue(payload)
        sink.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
        written += 1
    return written


# -- report comparison --------------------------------------------------------

@dataclass
class ComparisonResult:
    deltas: dict[str, float]
    regressions: list[str]
    new_failures: list[Failure]

    def has_regressions(self) -> bool:
        return bool(self.regressions or self.new_failures)

    def to_dict(self) -> dict[str, Any]:
        return {
            "deltas": self.deltas,
            "regressions": self.regressions,
            "new_failures": [asdict(f) for f in self.new_failures],
        }


def compare_reports(a: MetricsReport, b: MetricsReport) -> ComparisonResult:
    """Per-metric deltas b-a; decreases and new failures are regressions."""
    if a.suite != b.suite:
        raise SuiteMismatchError(f"cannot compare different suites: {a.suite!r} vs {b.suite!r}")
    deltas: dict[str, float] = {}
    regressions: list[str] = []
    for name, metric_a in a.metrics().items():
        metric_b = b.metrics()[name]
        delta = metric_b.ratio - metric_a.ratio
        deltas[name] = delta
        if delta < 0:
            regressions.append(f"{name} fell from {metric_a.ratio:.4f} to {metric_b.ratio:.4f}")
    known = {f.key() for f in a.failures}
    new_failures = [f for f in b.failures if f.key() not in known]
    return ComparisonResult(deltas, regressions, new_failures)
