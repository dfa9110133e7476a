"""Data model for tool spec documents and bundles.

A ToolSpec captures everything the runtime needs to know about one tool:
what it does, its inputs and outputs, how users phrase arguments, what to
do on missing inputs, and how the result feeds follow-up behavior. A
SpecBundle is the full set of ToolSpecs for one domain plus domain
metadata; loaded bundles are immutable and safe to share across threads.

Location fields (``line``, ``source_name``) are carried for diagnostics
only and are excluded from structural equality so that a serialize/parse
round trip compares equal.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Optional

KINDS = ("string", "integer", "number", "boolean", "enum", "date")

COMPARATORS = ("equals", "not_equals", "greater_than", "less_than", "empty", "non_empty")
VALUELESS_COMPARATORS = ("empty", "non_empty")

POST_ACTIONS = ("suggest_tool", "format_template", "append_note")
DEFAULT_TRIGGERS = ("missing_input", "empty_output")
DEFAULT_ACTIONS = ("ask_user", "use_default", "refuse")
LINK_DIRECTIONS = ("before", "after")
CONTEXT_GUARDS = ("query_matches", "always")
CONTEXT_EFFECTS = ("allow", "deny", "redirect")

# Canonical section identifiers, in authoring order.
SECTIONS = (
    "purpose",
    "provider",
    "inputs",
    "outputs",
    "slot_phrases",
    "post_processing",
    "visualization",
    "defaults",
    "related",
    "context",
)

SECTION_HEADINGS = {
    "purpose": "Purpose",
    "provider": "Provider",
    "inputs": "Inputs",
    "outputs": "Outputs",
    "slot_phrases": "Slot-Filling Phrases",
    "post_processing": "Output Post-processing",
    "visualization": "Visualization",
    "defaults": "Default Behaviors",
    "related": "Related Tools",
    "context": "Contextual Usage",
}


@dataclass
class Diagnostic:
    """One parser or validator finding, pinned to a source location."""

    severity: str  # "error" | "warning"
    file: str
    line: int
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.file}:{self.line}: {self.severity} {self.code}: {self.message}"


def errors(diagnostics: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diagnostics if d.severity == "error"]


@dataclass(eq=True)
class ParamSpec:
    """One input parameter of a tool."""

    name: str
    kind: str = "string"
    required: bool = False
    description: str = ""
    aliases: list[str] = field(default_factory=list)
    enum_values: list[str] = field(default_factory=list)
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class OutputFieldSpec:
    """One output field, with the natural-language phrases users map to values."""

    name: str
    kind: str = "string"
    description: str = ""
    enum_values: list[str] = field(default_factory=list)
    value_phrases: dict[str, list[str]] = field(default_factory=dict)
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class SlotPattern:
    """An utterance template: literal tokens plus ``{param}`` / ``{param...}`` holes."""

    pattern: str
    note: str = ""
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class PostProcessRule:
    """Condition over output fields plus the action it triggers."""

    field: str
    comparator: str
    value: str = ""  # empty for empty/non_empty comparators
    action: str = "append_note"
    action_arg: str = ""
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class DefaultBehavior:
    """What to do when a required input is missing or the tool output is empty."""

    trigger: str  # "missing_input" | "empty_output"
    param: str = ""  # set for missing_input
    action: str = "ask_user"
    text: str = ""
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class RelatedToolLink:
    """A before/after association with another tool, with transition cues."""

    direction: str
    target: str
    cues: list[str] = field(default_factory=list)
    condition: Optional[tuple[str, str, str]] = None  # (field, comparator, value)
    auto_invoke: bool = False
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class ContextRule:
    """Usage guard: allow, deny, or redirect when the query matches a phrase."""

    guard: str  # "query_matches" | "always"
    pattern: str = ""
    effect: str = "allow"
    arg: str = ""  # deny message or redirect target
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class ToolSpec:
    """Full behavior model for one tool."""

    name: str
    purpose: str = ""
    provider: str = ""
    inputs: list[ParamSpec] = field(default_factory=list)
    outputs: list[OutputFieldSpec] = field(default_factory=list)
    slot_patterns: list[SlotPattern] = field(default_factory=list)
    post_processing: list[PostProcessRule] = field(default_factory=list)
    render_hint: Optional[str] = None
    defaults: list[DefaultBehavior] = field(default_factory=list)
    related: list[RelatedToolLink] = field(default_factory=list)
    context_rules: list[ContextRule] = field(default_factory=list)
    source_name: str = field(default="", compare=False)

    def param(self, name: str) -> Optional[ParamSpec]:
        for p in self.inputs:
            if p.name == name:
                return p
        return None

    def output(self, name: str) -> Optional[OutputFieldSpec]:
        for f in self.outputs:
            if f.name == name:
                return f
        return None

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for link in d["related"]:
            if link["condition"] is not None:
                link["condition"] = list(link["condition"])
        return d


@dataclass(eq=True)
class SpecBundle:
    """All tool specs for one domain; the unit the runtime is configured with."""

    domain_name: str
    tools: list[ToolSpec] = field(default_factory=list)
    glossary: list[tuple[str, str]] = field(default_factory=list)
    version_label: str = ""

    def tool(self, name: str) -> Optional[ToolSpec]:
        lowered = name.lower()
        for t in self.tools:
            if t.name.lower() == lowered:
                return t
        return None

    def tool_names(self) -> list[str]:
        return [t.name for t in self.tools]
