"""Compiles a spec bundle into agent system prompts, routing cues, and docstrings.

All compilation is pure string assembly: identical inputs yield byte-identical
prompts, so prompt diffs across bundle versions stay reviewable. Block order
is fixed (role, responsibilities, guidelines, tool specs, examples).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .model import SpecBundle, ToolSpec
from .textutil import DEFAULT_STOP_WORDS, split_camel, tokenize

ORCHESTRATOR = "orchestrator"
TCA = "tca"
GCA = "gca"

TOOL_LABEL = "TOOL_CALLING_AGENT"
CHAT_LABEL = "GENERAL_CHAT_AGENT"

_DEFAULT_AGENT_DESCRIPTIONS = {
    TOOL_LABEL: "answers domain questions by calling the registered tools with extracted parameters",
    CHAT_LABEL: "handles greetings, small talk, and anything outside the domain's tools",
}


class PromptBudgetError(ValueError):
    """Compiled prompt exceeds the configured character budget."""

    def __init__(self, size: int, budget: int):
        super().__init__(
            f"compiled tool-agent prompt is {size} characters, over the {budget}-character budget; "
            "enable retrieval mode so only relevant tools are included"
        )
        self.size = size
        self.budget = budget


@dataclass
class CompiledPrompt:
    agent: str  # "orchestrator" | "tca" | "gca"
    text: str
    source_version: str = ""
    included_tools: list[str] = field(default_factory=list)


@dataclass
class RoutingCueSet:
    keywords: list[str] = field(default_factory=list)  # sorted, lowercased, deduplicated
    tool_names: list[str] = field(default_factory=list)
    patterns: list[str] = field(default_factory=list)  # literal skeletons, holes wildcarded


@dataclass
class FewShotExample:
    user_utterance: str
    expected_tool: str
    expected_args: dict[str, object] = field(default_factory=dict)
    rendered_answer: Optional[str] = None


def _keep_cue(phrase: str, stop_words: frozenset[str]) -> bool:
    tokens = tokenize(phrase)
    return bool(tokens) and not all(t in stop_words for t in tokens)


def extract_routing_cues(
    bundle: SpecBundle, stop_words: frozenset[str] = DEFAULT_STOP_WORDS
) -> RoutingCueSet:
    """Domain vocabulary that signals a tool-relevant query.

    The cue set is the union of tool-name words, parameter aliases, enum
    value phrases, and slot-pattern literal tokens, lowercased with
    stop words removed.
    """
    cues: set[str] = set()
    patterns: list[str] = []
    for tool in bundle.tools:
        cues.add(tool.name.lower())
        cues.update(split_camel(tool.name))
        for param in tool.inputs:
            cues.update(alias.lower() for alias in param.aliases)
        for out in tool.outputs:
            for synonyms in out.value_phrases.values():
                cues.update(s.lower() for s in synonyms)
        for pattern in tool.slot_patterns:
            skeleton = re.sub(r"\{\w+(\.\.\.)?\}", "*", pattern.pattern)
            if skeleton not in patterns:
                patterns.append(skeleton)
            cues.update(tok for tok in tokenize(skeleton))
    keywords = sorted(c for c in cues if _keep_cue(c, stop_words))
    return RoutingCueSet(keywords=keywords, tool_names=bundle.tool_names(), patterns=patterns)


def _spec_block(tool: ToolSpec) -> str:
    lines = [f"### {tool.name}", f"Purpose: {tool.purpose.strip()}"]
    if tool.inputs:
        lines.append("Inputs:")
        for p in tool.inputs:
            kind = p.kind + (", required" if p.required else "")
            entry = f"- {p.name} ({kind}): {p.description}"
            if p.enum_values:
                entry += f" [one of: {', '.join(p.enum_values)}]"
            if p.aliases:
                entry += f" (users may say: {', '.join(p.aliases)})"
            lines.append(entry)
    if tool.outputs:
        lines.append("Outputs:")
        for out in tool.outputs:
            kind = out.kind if not out.enum_values else f"{out.kind}: {', '.join(out.enum_values)}"
            entry = f"- {out.name} ({kind}): {out.description}"
            if out.value_phrases:
                phrased = "; ".join(
                    f"{canonical} = {', '.join(synonyms)}" for canonical, synonyms in out.value_phrases.items()
                )
                entry += f" (phrases: {phrased})"
            lines.append(entry)
    if tool.defaults:
        lines.append("Defaults:")
        verb = {"ask_user": "ask", "use_default": "use", "refuse": "refuse"}
        for b in tool.defaults:
            trigger = f"if {b.param} is missing" if b.trigger == "missing_input" else "if the output is empty"
            lines.append(f'- {trigger}: {verb[b.action]} "{b.text}"')
    if tool.related:
        lines.append("Related:")
        for link in tool.related:
            entry = f"- {link.direction} this tool: {link.target}"
            if link.condition:
                entry += f" when {link.condition[0]} {link.condition[1]} {link.condition[2]}"
            if link.cues:
                entry += f" (cues: {', '.join(link.cues)})"
            lines.append(entry)
    if tool.context_rules:
        lines.append("Context:")
        for rule in tool.context_rules:
            guard = f'when the query matches "{rule.pattern}"' if rule.guard == "query_matches" else "always"
            if rule.effect == "redirect":
                effect = f"use {rule.arg} instead"
            elif rule.effect == "deny":
                effect = f'refuse: "{rule.arg}"'
            else:
                effect = "allowed"
            lines.append(f"- {guard}: {effect}")
    return "\n".join(lines)


def compile_tca_prompt(
    bundle: SpecBundle,
    examples: list[FewShotExample],
    max_examples: int = 2,
    budget: Optional[int] = None,
) -> CompiledPrompt:
    """System prompt for the tool-calling agent: role, rules, one block per tool.

    When more demonstrations exist than max_examples, the first ones in
    authoring order are kept. A budget overflow raises rather than
    truncating, pointing at retrieval mode.
    """
    if max_examples < 0:
        raise ValueError("max_examples must be >= 0")
    known = {name.lower() for name in bundle.tool_names()}
    for example in examples:
        if example.expected_tool.lower() not in known:
            raise ValueError(f"example references unknown tool '{example.expected_tool}'")

    names = ", ".join(bundle.tool_names())
    parts = [
        f"You are the tool-calling agent for domain {bundle.domain_name}. "
        f"You have access to the following tools: {names}.",
        "",
        "Your responsibilities:",
        "- Understand the user's request in context.",
        "- Identify which tool (or tools) can address it.",
        "- Convert the user request into the appropriate API call(s) with correct parameters.",
        "- Execute the call(s) and gather results.",
        "- Formulate a helpful answer using the results (or an error message if the tool fails).",
        "",
        "Guidelines:",
        "- Use the tool specifications below to match user language to tool inputs.",
        "- If the user uses domain-specific jargon or nicknames, normalize them according to the documentation.",
        "- If multiple tools are needed, you may call them in sequence.",
        "- Only call tools relevant to the query; do not call tools for chit-chat or general questions.",
        "",
        "Tool Specifications:",
        "",
    ]
    parts.extend(_spec_block(tool) + "\n" for tool in bundle.tools)

    shown = examples[:max_examples]
    if shown:
        parts.append("Examples:")
        for i, example in enumerate(shown, start=1):
            args = ", ".join(f"{k}={v!r}" for k, v in example.expected_args.items())
            parts.append(f"{i}. User: {example.user_utterance}")
            parts.append(f"   Call: {example.expected_tool}({args})")
            if example.rendered_answer:
                parts.append(f"   Answer: {example.rendered_answer}")
        parts.append("")
    parts.append("Use the specifications above to decide your actions.")

    text = "\n".join(parts)
    if budget is not None and len(text) > budget:
        raise PromptBudgetError(len(text), budget)
    return CompiledPrompt(TCA, text, bundle.version_label, bundle.tool_names())


def compile_orchestrator_prompt(
    cues: RoutingCueSet,
    agent_descriptions: Optional[Mapping[str, str]] = None,
) -> CompiledPrompt:
    """Routing prompt: embeds the cue vocabulary and demands exactly one label."""
    descriptions = dict(_DEFAULT_AGENT_DESCRIPTIONS)
    descriptions.update(agent_descriptions or {})
    keyword_list = ", ".join(cues.keywords) if cues.keywords else "(none)"
    pattern_list = "; ".join(cues.patterns) if cues.patterns else "(none)"
    text = "\n".join(
        [
            "You are the orchestrator of a multi-agent assistant. Analyze the user's request and "
            "decide whether it should be handled by the tool-calling agent or the general chat agent. "
            "Do not answer the user directly.",
            "",
            "Agents:",
            f"- {TOOL_LABEL}: {descriptions[TOOL_LABEL]}",
            f"- {CHAT_LABEL}: {descriptions[CHAT_LABEL]}",
            "",
            "Route to the tool-calling agent when the query mentions any of these domain terms:",
            keyword_list,
            "",
            "Typical tool-query shapes:",
            pattern_list,
            "",
            f"Your output must be exactly one label: {TOOL_LABEL} or {CHAT_LABEL}.",
        ]
    )
    return CompiledPrompt(ORCHESTRATOR, text, included_tools=list(cues.tool_names))


def compile_gca_prompt(policy: str = "") -> CompiledPrompt:
    """Fallback-agent prompt: small talk plus refusal for domain tool questions."""
    parts = [
        "You are the general chat agent. You can handle general questions or small talk. "
        "If the user asks about domain-specific tools or data, do not answer it yourself; "
        "tell them the assistant's tool side will handle it.",
    ]
    if policy.strip():
        parts += ["", "Safety policy:", policy.strip()]
    return CompiledPrompt(GCA, "\n".join(parts))


def compile_docstring(spec: ToolSpec) -> str:
    """Registry-facing summary of one tool: purpose, parameters, outputs."""
    first_line = spec.purpose.strip().splitlines()[0] if spec.purpose.strip() else ""
    lines = [f"{spec.name}: {first_line}"]
    if spec.inputs:
        lines.append("Parameters:")
        for p in spec.inputs:
            kind = p.kind + (", required" if p.required else "")
            entry = f"- {p.name} ({kind}): {p.description}"
            if p.enum_values:
                entry += f" [one of: {', '.join(p.enum_values)}]"
            lines.append(entry)
    else:
        lines.append("Parameters: (none)")
    if spec.outputs:
        lines.append("Returns:")
        for out in spec.outputs:
            kind = out.kind if not out.enum_values else f"{out.kind}: {', '.join(out.enum_values)}"
            lines.append(f"- {out.name} ({kind}): {out.description}")
    else:
        lines.append("Returns: (no declared outputs)")
    return "\n".join(lines)
