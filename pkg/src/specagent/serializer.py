"""Canonical text emission for tool specs.

Output re-parses to a structurally equal ToolSpec. Byte layout is
canonical, not preserved: sections come out in template order and empty
optional sections are omitted.
"""

from __future__ import annotations

import re

from .model import SpecBundle, ToolSpec

_BARE_VALUE_RE = re.compile(r"^[^\s\"|]+$")


def _value_token(value: str) -> str:
    """Bare token when safe, quoted otherwise."""
    if _BARE_VALUE_RE.match(value):
        return value
    return f'"{value}"'


def serialize_tool_spec(spec: ToolSpec) -> str:
    lines: list[str] = [f"# Tool: {spec.name}", ""]

    lines += ["## Purpose", spec.purpose.strip(), ""]

    if spec.provider.strip():
        lines += ["## Provider", spec.provider.strip(), ""]

    if spec.inputs:
        lines.append("## Inputs")
        for p in spec.inputs:
            kind = p.kind + (", required" if p.required else "")
            bullet = f"- {p.name} ({kind}): {p.description}"
            if p.aliases:
                bullet += " | aliases: " + "; ".join(p.aliases)
            if p.enum_values:
                bullet += " | values: " + "; ".join(p.enum_values)
            lines.append(bullet)
        lines.append("")

    if spec.outputs:
        lines.append("## Outputs")
        for f in spec.outputs:
            bullet = f"- {f.name} ({f.kind}): {f.description}"
            if f.enum_values:
                bullet += " | values: " + "; ".join(f.enum_values)
            if f.value_phrases:
                entries = "; ".join(
                    f"{canonical} = {', '.join(synonyms)}" for canonical, synonyms in f.value_phrases.items()
                )
                bullet += " | phrases: " + entries
            lines.append(bullet)
        lines.append("")

    if spec.slot_patterns:
        lines.append("## Slot-Filling Phrases")
        for pat in spec.slot_patterns:
            bullet = f"* pattern: {pat.pattern}"
            if pat.note:
                bullet += f" | note: {pat.note}"
            lines.append(bullet)
        lines.append("")

    if spec.post_processing:
        lines.append("## Output Post-processing")
        for rule in spec.post_processing:
            parts = [f"- when {rule.field} {rule.comparator}"]
            if rule.comparator not in ("empty", "non_empty"):
                parts.append(_value_token(rule.value))
            if rule.action == "suggest_tool":
                parts.append(f"suggest {rule.action_arg}")
            elif rule.action == "format_template":
                parts.append(f'format "{rule.action_arg}"')
            else:
                parts.append(f'note "{rule.action_arg}"')
            lines.append(" ".join(parts))
        lines.append("")

    if spec.render_hint:
        lines += ["## Visualization", spec.render_hint.strip(), ""]

    if spec.defaults:
        lines.append("## Default Behaviors")
        verb = {"ask_user": "ask", "use_default": "use", "refuse": "refuse"}
        for b in spec.defaults:
            trigger = f"missing {b.param}" if b.trigger == "missing_input" else "empty output"
            lines.append(f'- {trigger}: {verb[b.action]} "{b.text}"')
        lines.append("")

    if spec.related:
        lines.append("## Related Tools")
        for link in spec.related:
            parts = [f"- {link.direction} {link.target}"]
            if link.condition is not None:
                fieldname, comparator, value = link.condition
                parts.append(f"when {fieldname} {comparator} {_value_token(value)}")
            if link.auto_invoke:
                parts.append("[auto]")
            if link.cues:
                parts.append("cues: " + "; ".join(link.cues))
            lines.append(" ".join(parts))
        lines.append("")

    if spec.context_rules:
        lines.append("## Contextual Usage")
        for rule in spec.context_rules:
            guard = f'- when query matches "{rule.pattern}"' if rule.guard == "query_matches" else "- always"
            if rule.effect == "allow":
                effect = "allow"
            elif rule.effect == "deny":
                effect = f'deny "{rule.arg}"'
            else:
                effect = f"redirect {rule.arg}"
            lines.append(f"{guard} {effect}")
        lines.append("")

    return "\n".join(lines).rstrip("\n") + "\n"


def serialize_bundle(bundle: SpecBundle) -> dict[str, str]:
    """Canonical document map for a bundle, keyed ``<ToolName>.md``."""
    return {f"{tool.name}.md": serialize_tool_spec(tool) for tool in bundle.tools}
