"""Multi-agent session engine: routing, tool-calling loop, chat fallback, tracing.

Routing is deterministic-first: a domain cue in the utterance short-circuits
to the tool path before any provider is consulted, so the offline test
suite never depends on a model. The tool path is
select → context rules → extract → defaults → invoke → post-process, with
spec-declared auto-calls chained up to a depth limit. Every invocation a
turn performs lands in its TurnTrace.

Shared state (bundle, prompts, cues, index, registry) is immutable after
construction; each session is single-writer via its own lock.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timezone
from typing import Any, Optional

from .config import RuntimeConfig
from .model import SpecBundle, ToolSpec
from .prompts import (
    CHAT_LABEL,
    TOOL_LABEL,
    CompiledPrompt,
    compile_gca_prompt,
    compile_orchestrator_prompt,
    compile_tca_prompt,
    extract_routing_cues,
)
from .providers import ProviderBinding, ProviderError, ScriptMissError, provider_complete
from .registry import ToolCall, ToolResult
from .retrieval import SnippetHit, build_index, query, tool_scores, tools_for_hits
from .slots import (
    FilledCall,
    SlotValue,
    apply_defaults,
    best_pattern_match,
    coerce,
    compile_patterns,
    extract_slots,
    is_empty_output,
    param_phrase_tables,
    post_process,
    reserved_value_tokens,
)
from .textutil import contains_phrase, tokenize

NO_TOOL_ANSWER = (
    "I could not match that request to any registered tool. "
    "Try naming the machine or the information you need."
)
NO_PROVIDER_ANSWER = (
    "I can help with questions about the registered tools; "
    "no general chat model is configured for anything else."
)


@dataclass
class RoutingDecision:
    target: str  # TOOL_CALLING_AGENT | GENERAL_CHAT_AGENT
    mechanism: str  # "cue_match" | "provider" | "fallback"
    fired_cues: list[str] = field(default_factory=list)


@dataclass
class Session:
    session_id: str
    history: list[tuple[str, str]] = field(default_factory=list)  # append-only (speaker, text)
    slots: dict[str, SlotValue] = field(default_factory=dict)
    active_bundle_version: str = ""
    created_at: str = ""
    last_tool: Optional[str] = None
    pending_tool: Optional[str] = None
    calls_made: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)


@dataclass
class TurnTrace:
    session_id: str
    utterance: str
    routing: RoutingDecision
    retrieval_hits: Optional[list[dict]] = None
    candidate_tool: Optional[str] = None
    extraction: Optional[dict] = None
    calls: list[tuple[ToolCall, ToolResult]] = field(default_factory=list)
    final_answer: str = ""
    timings: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "utterance": self.utterance,
            "routing": asdict(self.routing),
            "retrieval_hits": self.retrieval_hits,
            "candidate_tool": self.candidate_tool,
            "extraction": self.extraction,
            "calls": [
                {
                    "call": {"call_id": c.call_id, "tool": c.tool, "args": _jsonable(c.args)},
                    "result": r.to_dict(),
                }
                for c, r in self.calls
            ],
            "final_answer": self.final_answer,
            "timings": dict(self.timings),
            "notes": list(self.notes),
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, date):
        return value.isoformat()
    return value


def _extraction_dict(extraction) -> dict[str, Any]:
    return {
        "filled": {
            name: {"raw": sv.raw, "value": _jsonable(sv.value), "origin": sv.origin}
            for name, sv in extraction.filled.items()
        },
        "matched_patterns": list(extraction.matched_patterns),
        "unmatched_required": list(extraction.unmatched_required),
    }


class AgentRuntime:
    """One configured assistant: a bundle, its compiled artifacts, and a registry."""

    def __init__(
        self,
        bundle: SpecBundle,
        registry,
        provider: Optional[ProviderBinding] = None,
        config: Optional[RuntimeConfig] = None,
        today: Optional[date] = None,
    ):
        self.bundle = bundle
        self.registry = registry
        self.provider = provider
        self.config = config or RuntimeConfig()
        self.today = today

        self.cues = extract_routing_cues(bundle, self.config.stop_words)
        self.orchestrator_prompt = compile_orchestrator_prompt(self.cues)
        self.gca_prompt = compile_gca_prompt(self.config.gca_policy)
        self.index = build_index(bundle, self.config.stop_words)
        self._patterns = {tool.name: compile_patterns(tool) for tool in bundle.tools}
        self._phrases = {tool.name: param_phrase_tables(bundle, tool) for tool in bundle.tools}
        self._reserved = {tool.name: reserved_value_tokens(tool) for tool in bundle.tools}
        self._cue_tokens = {kw: tokenize(kw) for kw in self.cues.keywords}
        self.full_tca_prompt: Optional[CompiledPrompt] = None
        self._tca_prompt_size = 0
        try:
            self.full_tca_prompt = compile_tca_prompt(bundle, [], 0)
            self._tca_prompt_size = len(self.full_tca_prompt.text)
        except ValueError:
            self._tca_prompt_size = self.config.prompt_budget + 1
        self._sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()

    # -- sessions ----------------------------------------------------------

    def create_session(self, session_id: Optional[str] = None) -> Session:
        session = Session(
            session_id=session_id or uuid.uuid4().hex,
            active_bundle_version=self.bundle.version_label,
            created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        with self._sessions_lock:
            self._sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> Optional[Session]:
        with self._sessions_lock:
            return self._sessions.get(session_id)

    # -- routing -----------------------------------------------------------

    def route(self, utterance: str, session: Session) -> tuple[RoutingDecision, list[str]]:
        """Three tiers: cue match, provider label, chat fallback."""
        notes: list[str] = []
        tokens = tokenize(utterance)
        fired = [
            kw
            for kw, kw_tokens in self._cue_tokens.items()
            if contains_phrase(tokens, kw_tokens)
        ]
        if fired:
            return RoutingDecision(TOOL_LABEL, "cue_match", fired), notes
        if self.provider is not None:
            try:
                reply = provider_complete(
                    self.provider,
                    self.orchestrator_prompt.text,
                    session.history + [("user", utterance)],
                    role="orchestrator",
                )
            except ProviderError as exc:
                notes.append(f"orchestrator provider failed: {exc}")
            else:
                has_tool = TOOL_LABEL in reply
                has_chat = CHAT_LABEL in reply
                if has_tool != has_chat:
                    label = TOOL_LABEL if has_tool else CHAT_LABEL
                    return RoutingDecision(label, "provider"), notes
                notes.append(f"unparseable orchestrator reply: {reply!r}")
        return RoutingDecision(CHAT_LABEL, "fallback"), notes

    # -- tool selection ----------------------------------------------------

    def select_tool(
        self,
        utterance: str,
        hits: Optional[list[SnippetHit]] = None,
        history: Optional[list[tuple[str, str]]] = None,
    ) -> tuple[Optional[str], list[str]]:
        """Best tool by cue-term weight plus a bonus when its slot pattern aligns.

        A full pattern alignment is the strongest deterministic evidence a
        tool owns the utterance, so it outweighs incidental vocabulary
        overlap. Ties break by name; a zero score asks the provider.
        """
        notes: list[str] = []
        restrict = set(tools_for_hits(hits)) if hits else None
        scores = tool_scores(self.index, utterance, restrict)
        for tool in self.bundle.tools:
            if restrict is not None and tool.name not in restrict:
                continue
            matched = best_pattern_match(
                utterance,
                self._patterns[tool.name],
                tool.inputs,
                self._phrases[tool.name],
                self.config.stop_words,
                self.today,
                self._reserved[tool.name],
            )
            if matched is not None:
                scores[tool.name] = scores.get(tool.name, 0.0) + 3.0 + matched.specificity
        if scores:
            best = sorted(scores.items(), key=lambda item: (-item[1], item[0]))[0]
            if best[1] > 0:
                return best[0], notes
        if self.provider is not None and self.full_tca_prompt is not None:
            try:
                reply = provider_complete(
                    self.provider,
                    self.full_tca_prompt.text,
                    (history or []) + [("user", utterance)],
                    role="tca",
                ).strip()
            except ProviderError as exc:
                notes.append(f"tool-selection provider failed: {exc}")
            else:
                tool = self.bundle.tool(reply)
                if tool is not None:
                    return tool.name, notes
                notes.append(f"provider proposed unknown tool {reply!r}")
        return None, notes

    def _related_override(self, utterance: str, session: Session) -> Optional[str]:
        """Follow-up cue from the last tool's after-links, e.g. "why is it down?"."""
        if session.last_tool is None:
            return None
        last = self.bundle.tool(session.last_tool)
        if last is None:
            return None
        tokens = set(tokenize(utterance))
        for link in last.related:
            if link.direction != "after":
                continue
            for cue in link.cues:
                if set(tokenize(cue)) <= tokens and tokenize(cue):
                    if self.bundle.tool(link.target) is not None:
                        return self.bundle.tool(link.target).name
        return None

    def _pending_override(self, utterance: str, session: Session) -> Optional[str]:
        """A clarification answer is absorbed by the tool that asked.

        Only slot-like replies count: every content token must belong to the
        supplied value or to an alias of the parameter it fills, so a topic
        pivot ("last 3 errors for machine 12") re-enters normal selection.
        """
        if session.pending_tool is None:
            return None
        tool = self.bundle.tool(session.pending_tool)
        if tool is None:
            return None
        extraction = self._extract(utterance, session, tool)
        self._bare_value_fill(utterance, extraction, tool)
        missing_before = {
            p.name for p in tool.inputs if p.required and p.name not in session.slots
        }
        newly = [
            name
            for name, sv in extraction.filled.items()
            if sv.origin == "utterance" and name in missing_before
        ]
        if not newly:
            return None
        allowed: set[str] = set()
        for name in newly:
            allowed.update(tokenize(extraction.filled[name].raw))
            param = tool.param(name)
            for alias in param.aliases if param else []:
                allowed.update(tokenize(alias))
        content = [
            t
            for t in tokenize(utterance)
            if t not in self.config.stop_words and t not in allowed
        ]
        if content:
            return None
        return tool.name

    # -- extraction helpers --------------------------------------------------

    def _extract(self, utterance: str, session: Session, tool: ToolSpec):
        return extract_slots(
            utterance,
            session.slots,
            self._patterns[tool.name],
            tool.inputs,
            self._phrases[tool.name],
            self.config.stop_words,
            self.today,
            self._reserved[tool.name],
        )

    def _bare_value_fill(self, utterance: str, extraction, tool: ToolSpec) -> None:
        """A reply that is just a value ("12") answers the first missing slot."""
        tokens = [t for t in tokenize(utterance) if t not in self.config.stop_words]
        if len(tokens) != 1 or not extraction.unmatched_required:
            return
        name = extraction.unmatched_required[0]
        param = tool.param(name)
        try:
            value = coerce(tokens[0], param, self._phrases[tool.name].get(name), self.today)
        except Exception:
            return
        extraction.filled[name] = SlotValue(raw=tokens[0], value=value, origin="utterance")
        extraction.unmatched_required = [n for n in extraction.unmatched_required if n != name]

    # -- the turn pipeline ---------------------------------------------------

    def run_turn(self, session: Session, utterance: str) -> tuple[str, TurnTrace]:
        with session.lock:
            return self._run_turn_locked(session, utterance)

    def _run_turn_locked(self, session: Session, utterance: str) -> tuple[str, TurnTrace]:
        started = time.perf_counter()
        routing, notes = self.route(utterance, session)
        trace = TurnTrace(session.session_id, utterance, routing, notes=notes)
        trace.timings["route"] = time.perf_counter() - started

        pending_candidate = self._pending_override(utterance, session)
        if pending_candidate is not None and routing.target != TOOL_LABEL:
            routing.target = TOOL_LABEL
            routing.mechanism = "cue_match"
            routing.fired_cues = routing.fired_cues or [f"pending:{pending_candidate}"]

        if routing.target == TOOL_LABEL:
            answer = self._tool_turn(session, utterance, trace, pending_candidate)
        else:
            answer = self._chat_turn(session, utterance, trace)

        trace.final_answer = answer
        session.history.append(("user", utterance))
        session.history.append(("assistant", answer))
        trace.timings["total"] = time.perf_counter() - started
        return answer, trace

    def _chat_turn(self, session: Session, utterance: str, trace: TurnTrace) -> str:
        if self.provider is None:
            return NO_PROVIDER_ANSWER
        try:
            return provider_complete(
                self.provider,
                self.gca_prompt.text,
                session.history + [("user", utterance)],
                role="gca",
            )
        except ScriptMissError:
            raise  # an incomplete script is a fixture bug, not a chat condition
        except ProviderError as exc:
            trace.notes.append(f"chat provider failed: {exc}")
            return NO_PROVIDER_ANSWER

    def _tool_turn(
        self, session: Session, utterance: str, trace: TurnTrace, pending_candidate: Optional[str]
    ) -> str:
        step = time.perf_counter()
        hits: Optional[list[SnippetHit]] = None
        if self._tca_prompt_size > self.config.prompt_budget:
            hits = query(self.index, utterance, self.config.retrieval_k)
            trace.retrieval_hits = [h.to_dict() for h in hits]
        trace.timings["retrieve"] = time.perf_counter() - step

        step = time.perf_counter()
        candidate = pending_candidate or self._related_override(utterance, session)
        if candidate is None:
            candidate, select_notes = self.select_tool(utterance, hits, session.history)
            trace.notes.extend(select_notes)
        else:
            trace.notes.append(f"candidate from session context: {candidate}")
        trace.timings["select"] = time.perf_counter() - step
        if candidate is None:
            return NO_TOOL_ANSWER

        candidate, context_answer = self._apply_context_rules(candidate, utterance, session, trace)
        if context_answer is not None:
            trace.candidate_tool = candidate
            return context_answer
        trace.candidate_tool = candidate
        tool = self.bundle.tool(candidate)

        step = time.perf_counter()
        extraction = self._extract(utterance, session, tool)
        if session.pending_tool == tool.name:
            self._bare_value_fill(utterance, extraction, tool)
        session.pending_tool = None
        trace.extraction = _extraction_dict(extraction)
        filled = apply_defaults(extraction, tool, self._phrases[tool.name], self.today)
        trace.timings["extract"] = time.perf_counter() - step

        self._remember_slots(session, extraction)
        if filled.clarification is not None:
            session.pending_tool = tool.name
            trace.notes.append("clarification requested; no tool invoked")
            return filled.clarification
        if filled.refusal is not None:
            trace.notes.append("spec default refused the call")
            return filled.refusal

        step = time.perf_counter()
        answer = self._invoke_and_render(session, tool, filled, trace)
        trace.timings["invoke"] = time.perf_counter() - step
        session.last_tool = tool.name
        return answer

    def _apply_context_rules(
        self, candidate: str, utterance: str, session: Session, trace: TurnTrace
    ) -> tuple[str, Optional[str]]:
        """First matching rule wins; a redirect is followed one hop and clears slots."""
        tokens = tokenize(utterance)
        for hop in range(2):
            tool = self.bundle.tool(candidate)
            if tool is None:
                return candidate, None
            effect_applied = False
            for rule in tool.context_rules:
                if rule.guard == "query_matches" and not contains_phrase(tokens, tokenize(rule.pattern)):
                    continue
                if rule.effect == "deny":
                    trace.notes.append(f"context rule denied {tool.name}")
                    return candidate, rule.arg
                if rule.effect == "redirect" and hop == 0 and self.bundle.tool(rule.arg) is not None:
                    trace.notes.append(f"context rule redirected {tool.name} → {rule.arg}")
                    session.slots.clear()
                    candidate = self.bundle.tool(rule.arg).name
                    effect_applied = True
                    break
                break  # explicit allow, or a redirect we will not chain
            if not effect_applied:
                break
        return candidate, None

    def _remember_slots(self, session: Session, extraction) -> None:
        for name, sv in extraction.filled.items():
            if sv.origin == "utterance":
                session.slots[name] = sv

    def _invoke_and_render(self, session: Session, tool: ToolSpec, filled: FilledCall, trace: TurnTrace) -> str:
        pieces: list[str] = []
        followups: list[str] = []
        chain = [tool.name]
        queue: list[FilledCall] = [filled]
        autos_done = 0
        while queue:
            current = queue.pop(0)
            current_tool = self.bundle.tool(current.tool)
            session.calls_made += 1
            call = ToolCall(
                call_id=f"{session.session_id}-{session.calls_made}",
                tool=current.tool,
                args=dict(current.args),
            )
            result = self.registry.invoke(call)
            trace.calls.append((call, result))
            if result.status != "ok":
                pieces.append(f"Sorry - {current.tool} reported a problem: {result.message}")
                continue
            if is_empty_output(result.fields):
                pieces.append(self._empty_output_text(current_tool))
                continue
            rendered = post_process(
                result.fields,
                current_tool.post_processing if current_tool else [],
                current_tool.related if current_tool else [],
                call_args=current.args,
                bundle=self.bundle,
                today=self.today,
            )
            trace.notes.extend(rendered.warnings)
            pieces.append(rendered.text)
            for name in rendered.suggested_followups:
                if name not in followups:
                    followups.append(name)
            for auto in rendered.auto_calls:
                if autos_done >= self.config.auto_call_depth:
                    trace.notes.append(f"auto-call depth limit reached; skipped {auto.tool}")
                    continue
                if auto.tool in chain:
                    trace.notes.append(f"auto-call loop avoided for {auto.tool}")
                    continue
                chain.append(auto.tool)
                autos_done += 1
                queue.append(auto)
        if followups:
            pieces.append("You might also want: " + ", ".join(followups) + ".")
        return "\n".join(pieces)

    @staticmethod
    def _empty_output_text(tool: Optional[ToolSpec]) -> str:
        if tool is not None:
            for behavior in tool.defaults:
                if behavior.trigger == "empty_output":
                    return behavior.text
        name = tool.name if tool else "the tool"
        return f"{name} returned no data for that request."
