"""Parser for the on-disk tool spec grammar.

One tool per file. The file starts with ``# Tool: <Name>``, followed by
``## <Section>`` headings in any order. Machine-read fields live in
bullets (``- ...`` for structured entries, ``* pattern: ...`` for slot
patterns); all other lines inside a section are author prose and are
ignored. ``|`` separates clauses inside a bullet and ``;`` separates list
items, so neither may appear in free-text descriptions.

The parser is total: malformed input produces diagnostics with line
numbers, never an exception. A document that produced any error-severity
diagnostic yields no ToolSpec.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .model import (
    COMPARATORS,
    KINDS,
    SECTION_HEADINGS,
    SECTIONS,
    VALUELESS_COMPARATORS,
    ContextRule,
    DefaultBehavior,
    Diagnostic,
    OutputFieldSpec,
    ParamSpec,
    PostProcessRule,
    RelatedToolLink,
    SlotPattern,
    SpecBundle,
    ToolSpec,
    errors,
)

_HEADER_RE = re.compile(r"^#\s*Tool\s*:\s*([A-Za-z_]\w*)\s*$", re.IGNORECASE)
_HEADING_RE = re.compile(r"^##\s+(.+?)\s*$")
_IDENT = r"[A-Za-z_]\w*"
_BULLET_FIELD_RE = re.compile(rf"^-\s*({_IDENT})\s*\(([^)]*)\)\s*:\s*(.*)$")
_PATTERN_LINE_RE = re.compile(r"^\*\s*pattern\s*:\s*(.*)$", re.IGNORECASE)
_PLACEHOLDER_RE = re.compile(rf"\{{({_IDENT})(\.\.\.)?\}}")
_QUOTED = r'"([^"]*)"'

# Accepted spellings per canonical section, lowercased and '/'-collapsed.
_HEADING_ALIASES = {
    "purpose": "purpose",
    "provider": "provider",
    "provider data source": "provider",
    "inputs": "inputs",
    "inputs arguments": "inputs",
    "outputs": "outputs",
    "slot-filling phrases": "slot_phrases",
    "slot filling phrases": "slot_phrases",
    "output post-processing": "post_processing",
    "output postprocessing": "post_processing",
    "visualization": "visualization",
    "visualization ui action": "visualization",
    "default behaviors": "defaults",
    "default behaviours": "defaults",
    "related tools": "related",
    "contextual usage": "context",
}


@dataclass
class _Section:
    section_id: str
    heading_line: int
    lines: list[tuple[int, str]] = field(default_factory=list)

    def text(self) -> str:
        return "\n".join(raw for _, raw in self.lines).strip("\n")


@dataclass
class ScanResult:
    """Raw sectional structure of one document, before semantic parsing."""

    tool_name: str | None
    header_line: int
    sections: dict[str, _Section]
    unknown_headings: list[tuple[int, str]]
    duplicate_headings: list[tuple[int, str]]
    diagnostics: list[Diagnostic]


def _normalize_heading(text: str) -> str:
    return re.sub(r"\s+", " ", re.sub(r"[()/]", " ", text)).strip().lower()


def scan_sections(source: str, filename: str = "<spec>") -> ScanResult:
    """Split *source* into header and raw sections; shared by parse and diff."""
    diags: list[Diagnostic] = []
    tool_name: str | None = None
    header_line = 0
    sections: dict[str, _Section] = {}
    unknown: list[tuple[int, str]] = []
    duplicates: list[tuple[int, str]] = []
    current: _Section | None = None
    seen_header = False

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.rstrip()
        if not seen_header:
            if not line.strip():
                continue
            m = _HEADER_RE.match(line)
            if m:
                tool_name = m.group(1)
                header_line = lineno
            else:
                diags.append(
                    Diagnostic(
                        "error",
                        filename,
                        lineno,
                        "E001",
                        "first non-blank line must be '# Tool: <name>'",
                    )
                )
            seen_header = True
            continue
        m = _HEADING_RE.match(line)
        if m:
            canonical = _HEADING_ALIASES.get(_normalize_heading(m.group(1)))
            if canonical is None:
                diags.append(
                    Diagnostic(
                        "warning",
                        filename,
                        lineno,
                        "W004",
                        f"unrecognized section heading '{m.group(1)}' ignored",
                    )
                )
                unknown.append((lineno, m.group(1)))
                current = None
            elif canonical in sections:
                duplicates.append((lineno, canonical))
                diags.append(
                    Diagnostic(
                        "warning",
                        filename,
                        lineno,
                        "W009",
                        f"duplicate '{SECTION_HEADINGS[canonical]}' heading; contents merged",
                    )
                )
                current = sections[canonical]
            else:
                current = _Section(canonical, lineno)
                sections[canonical] = current
            continue
        if current is not None:
            current.lines.append((lineno, line))

    if not seen_header:
        diags.append(Diagnostic("error", filename, 1, "E001", "empty document; expected '# Tool: <name>'"))
    return ScanResult(tool_name, header_line, sections, unknown, duplicates, diags)


def section_texts(source: str) -> tuple[str | None, dict[str, str]]:
    """Tool name and raw per-section text (trailing whitespace stripped)."""
    scan = scan_sections(source)
    return scan.tool_name, {sid: sec.text() for sid, sec in scan.sections.items()}


def _split_clauses(rest: str) -> tuple[str, list[tuple[str, str]]]:
    """Split a bullet remainder on '|' into description plus key:value clauses."""
    parts = [p.strip() for p in rest.split("|")]
    description = parts[0]
    clauses = []
    for part in parts[1:]:
        key, _, value = part.partition(":")
        clauses.append((key.strip().lower(), value.strip()))
    return description, clauses


def _split_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(";") if item.strip()]


class _DocParser:
    def __init__(self, filename: str):
        self.filename = filename
        self.diags: list[Diagnostic] = []

    def error(self, line: int, code: str, message: str) -> None:
        self.diags.append(Diagnostic("error", self.filename, line, code, message))

    def warning(self, line: int, code: str, message: str) -> None:
        self.diags.append(Diagnostic("warning", self.filename, line, code, message))

    # -- Inputs ------------------------------------------------------------

    def parse_inputs(self, section: _Section) -> list[ParamSpec]:
        params: list[ParamSpec] = []
        for lineno, raw in _bullets(section):
            m = _BULLET_FIELD_RE.match(raw)
            if not m:
                self.error(lineno, "E006", f"malformed input bullet: {raw.strip()!r}")
                continue
            name, kind_part, rest = m.group(1), m.group(2), m.group(3)
            kind, required = self._parse_kind(kind_part, lineno, allow_required=True)
            description, clauses = _split_clauses(rest)
            aliases: list[str] = []
            enum_values: list[str] = []
            for key, value in clauses:
                if key == "aliases":
                    aliases = _split_list(value)
                elif key == "values":
                    enum_values = _split_list(value)
                else:
                    self.warning(lineno, "W007", f"unknown clause '{key}' ignored")
            if any(p.name == name for p in params):
                self.error(lineno, "E002", f"duplicate parameter '{name}'")
                continue
            self._check_enum_values(kind, enum_values, name, lineno)
            params.append(ParamSpec(name, kind, required, description, aliases, enum_values, line=lineno))
        return params

    def parse_outputs(self, section: _Section) -> list[OutputFieldSpec]:
        fields: list[OutputFieldSpec] = []
        for lineno, raw in _bullets(section):
            m = _BULLET_FIELD_RE.match(raw)
            if not m:
                self.error(lineno, "E006", f"malformed output bullet: {raw.strip()!r}")
                continue
            name, kind_part, rest = m.group(1), m.group(2), m.group(3)
            kind, _ = self._parse_kind(kind_part, lineno, allow_required=False)
            description, clauses = _split_clauses(rest)
            enum_values: list[str] = []
            phrases: dict[str, list[str]] = {}
            for key, value in clauses:
                if key == "values":
                    enum_values = _split_list(value)
                elif key == "phrases":
                    phrases = self._parse_phrases(value, lineno)
                else:
                    self.warning(lineno, "W007", f"unknown clause '{key}' ignored")
            if any(f.name == name for f in fields):
                self.error(lineno, "E002", f"duplicate output field '{name}'")
                continue
            self._check_enum_values(kind, enum_values, name, lineno)
            if kind == "enum":
                unknown = [v for v in phrases if v not in enum_values]
                if unknown:
                    self.error(
                        lineno,
                        "E005",
                        f"phrases for undeclared enum values {unknown} on '{name}'",
                    )
            fields.append(OutputFieldSpec(name, kind, description, enum_values, phrases, line=lineno))
        return fields

    def _parse_kind(self, kind_part: str, lineno: int, allow_required: bool) -> tuple[str, bool]:
        pieces = [p.strip().lower() for p in kind_part.split(",") if p.strip()]
        kind = pieces[0] if pieces else ""
        required = False
        for extra in pieces[1:]:
            if extra == "required" and allow_required:
                required = True
            else:
                self.warning(lineno, "W007", f"unknown kind qualifier '{extra}' ignored")
        if kind not in KINDS:
            self.error(lineno, "E007", f"unknown kind '{kind}' (expected one of {', '.join(KINDS)})")
            kind = "string"
        return kind, required

    def _check_enum_values(self, kind: str, enum_values: list[str], name: str, lineno: int) -> None:
        if kind == "enum" and not enum_values:
            self.error(lineno, "E005", f"enum '{name}' declares no values")
        if kind != "enum" and enum_values:
            self.error(lineno, "E005", f"'{name}' is not an enum but declares values")
        if len(set(enum_values)) != len(enum_values):
            self.error(lineno, "E005", f"duplicate enum values on '{name}'")

    def _parse_phrases(self, value: str, lineno: int) -> dict[str, list[str]]:
        phrases: dict[str, list[str]] = {}
        for entry in value.split(";"):
            entry = entry.strip()
            if not entry:
                continue
            canonical, eq, synonyms = entry.partition("=")
            if not eq:
                self.error(lineno, "E006", f"malformed phrases entry {entry!r} (expected 'value = a, b')")
                continue
            phrases[canonical.strip()] = [s.strip() for s in synonyms.split(",") if s.strip()]
        return phrases

    # -- Slot patterns -----------------------------------------------------

    def parse_patterns(self, section: _Section, params: list[ParamSpec]) -> list[SlotPattern]:
        param_names = {p.name for p in params}
        patterns: list[SlotPattern] = []
        for lineno, raw in section.lines:
            stripped = raw.strip()
            if not stripped.startswith("*"):
                continue  # prose around the pattern lines
            m = _PATTERN_LINE_RE.match(stripped)
            if not m:
                self.error(lineno, "E006", f"malformed pattern line: {stripped!r}")
                continue
            text, clauses = _split_clauses(m.group(1))
            note = ""
            for key, value in clauses:
                if key == "note":
                    note = value
                else:
                    self.warning(lineno, "W007", f"unknown clause '{key}' ignored")
            placeholders = _PLACEHOLDER_RE.findall(text)
            leftover = _PLACEHOLDER_RE.sub(" ", text)
            if "{" in leftover or "}" in leftover:
                self.error(lineno, "E006", f"unbalanced braces in pattern {text!r}")
                continue
            for name, _ellipsis in placeholders:
                if name not in param_names:
                    self.error(lineno, "E003", f"pattern references undeclared parameter '{name}'")
            if not placeholders and not leftover.split():
                self.error(lineno, "E006", "pattern has neither literals nor placeholders")
                continue
            patterns.append(SlotPattern(text.strip(), note, line=lineno))
        return patterns

    # -- Post-processing ---------------------------------------------------

    def parse_post_rules(self, section: _Section, outputs: list[OutputFieldSpec]) -> list[PostProcessRule]:
        known_fields = {f.name for f in outputs}
        rules: list[PostProcessRule] = []
        for lineno, raw in _bullets(section):
            parsed = self._parse_condition_and_rest(raw, lineno)
            if parsed is None:
                continue
            fieldname, comparator, value, rest = parsed
            action = self._parse_post_action(rest, lineno)
            if action is None:
                continue
            if fieldname not in known_fields:
                self.error(lineno, "E008", f"rule references unknown output field '{fieldname}'")
                continue
            rules.append(PostProcessRule(fieldname, comparator, value, action[0], action[1], line=lineno))
        return rules

    def _parse_condition_and_rest(self, raw: str, lineno: int) -> tuple[str, str, str, str] | None:
        m = re.match(rf"^-\s*when\s+({_IDENT})\s+(\w+)\s*(.*)$", raw.strip())
        if not m:
            self.error(lineno, "E006", f"malformed rule bullet: {raw.strip()!r}")
            return None
        fieldname, comparator, rest = m.group(1), m.group(2), m.group(3)
        if comparator not in COMPARATORS:
            self.error(lineno, "E006", f"unknown comparator '{comparator}'")
            return None
        value = ""
        if comparator not in VALUELESS_COMPARATORS:
            vm = re.match(rf"^(?:{_QUOTED}|(\S+))\s*(.*)$", rest)
            if not vm:
                self.error(lineno, "E006", f"comparator '{comparator}' needs a value")
                return None
            value = vm.group(1) if vm.group(1) is not None else vm.group(2)
            rest = vm.group(3)
        return fieldname, comparator, value, rest

    def _parse_post_action(self, rest: str, lineno: int) -> tuple[str, str] | None:
        rest = rest.strip()
        m = re.match(rf"^suggest\s+({_IDENT})$", rest)
        if m:
            return ("suggest_tool", m.group(1))
        m = re.match(rf"^format\s+{_QUOTED}$", rest)
        if m:
            return ("format_template", m.group(1))
        m = re.match(rf"^note\s+{_QUOTED}$", rest)
        if m:
            return ("append_note", m.group(1))
        self.error(lineno, "E006", f"unknown rule action {rest!r} (expected suggest/format/note)")
        return None

    # -- Defaults ----------------------------------------------------------

    def parse_defaults(self, section: _Section, params: list[ParamSpec]) -> list[DefaultBehavior]:
        param_names = {p.name for p in params}
        behaviors: list[DefaultBehavior] = []
        action_map = {"ask": "ask_user", "use": "use_default", "refuse": "refuse"}
        for lineno, raw in _bullets(section):
            text = raw.strip()
            m = re.match(rf"^-\s*missing\s+({_IDENT})\s*:\s*(ask|use|refuse)\s+{_QUOTED}\s*$", text)
            if m:
                if m.group(1) not in param_names:
                    self.error(lineno, "E009", f"default behavior references unknown parameter '{m.group(1)}'")
                    continue
                behaviors.append(
                    DefaultBehavior("missing_input", m.group(1), action_map[m.group(2)], m.group(3), line=lineno)
                )
                continue
            m = re.match(rf"^-\s*empty\s+output\s*:\s*(ask|use|refuse)\s+{_QUOTED}\s*$", text)
            if m:
                behaviors.append(DefaultBehavior("empty_output", "", action_map[m.group(1)], m.group(2), line=lineno))
                continue
            self.error(lineno, "E006", f"malformed default bullet: {text!r}")
        return behaviors

    # -- Related tools -----------------------------------------------------

    def parse_related(self, section: _Section) -> list[RelatedToolLink]:
        links: list[RelatedToolLink] = []
        for lineno, raw in _bullets(section):
            text = raw.strip()
            m = re.match(rf"^-\s*(before|after)\s+({_IDENT})\s*(.*)$", text)
            if not m:
                self.error(lineno, "E006", f"malformed related bullet: {text!r}")
                continue
            direction, target, rest = m.group(1), m.group(2), m.group(3)
            condition = None
            cm = re.match(rf"^when\s+({_IDENT})\s+(\w+)\s+(?:{_QUOTED}|(\S+))\s*(.*)$", rest)
            if cm:
                comparator = cm.group(2)
                if comparator not in COMPARATORS:
                    self.error(lineno, "E006", f"unknown comparator '{comparator}'")
                    continue
                value = cm.group(3) if cm.group(3) is not None else cm.group(4)
                condition = (cm.group(1), comparator, value)
                rest = cm.group(5)
            auto = False
            if rest.startswith("[auto]"):
                auto = True
                rest = rest[len("[auto]") :].strip()
            cues: list[str] = []
            if rest.startswith("cues:"):
                cues = _split_list(rest[len("cues:") :])
                rest = ""
            if rest.strip():
                self.error(lineno, "E006", f"trailing text in related bullet: {rest.strip()!r}")
                continue
            links.append(RelatedToolLink(direction, target, cues, condition, auto, line=lineno))
        return links

    # -- Contextual usage --------------------------------------------------

    def parse_context(self, section: _Section) -> list[ContextRule]:
        rules: list[ContextRule] = []
        for lineno, raw in _bullets(section):
            text = raw.strip()
            m = re.match(rf"^-\s*when\s+query\s+matches\s+{_QUOTED}\s+(.*)$", text)
            if m:
                guard, pattern, rest = "query_matches", m.group(1), m.group(2)
            else:
                m = re.match(r"^-\s*always\s+(.*)$", text)
                if not m:
                    self.error(lineno, "E006", f"malformed context bullet: {text!r}")
                    continue
                guard, pattern, rest = "always", "", m.group(1)
            effect = self._parse_context_effect(rest.strip(), lineno)
            if effect is None:
                continue
            rules.append(ContextRule(guard, pattern, effect[0], effect[1], line=lineno))
        return rules

    def _parse_context_effect(self, rest: str, lineno: int) -> tuple[str, str] | None:
        if rest == "allow":
            return ("allow", "")
        m = re.match(rf"^deny\s+{_QUOTED}$", rest)
        if m:
            return ("deny", m.group(1))
        m = re.match(rf"^redirect\s+({_IDENT})$", rest)
        if m:
            return ("redirect", m.group(1))
        self.error(lineno, "E006", f"unknown context effect {rest!r} (expected allow/deny/redirect)")
        return None


def _bullets(section: _Section) -> list[tuple[int, str]]:
    """Dash bullets of a section; other lines are author prose."""
    return [(lineno, raw) for lineno, raw in section.lines if raw.strip().startswith("-")]


def parse_tool_spec(source: str, filename: str = "<spec>") -> tuple[ToolSpec | None, list[Diagnostic]]:
    """Parse one spec document.

    Returns ``(spec, diagnostics)``; ``spec`` is None when any diagnostic
    has error severity. Warnings accompany a successful parse.
    """
    scan = scan_sections(source, filename)
    p = _DocParser(filename)
    p.diags.extend(scan.diagnostics)
    if scan.tool_name is None:
        return None, p.diags

    def sec(section_id: str) -> _Section:
        return scan.sections.get(section_id) or _Section(section_id, 0)

    purpose = sec("purpose").text().strip()
    provider = sec("provider").text().strip()
    inputs = p.parse_inputs(sec("inputs"))
    outputs = p.parse_outputs(sec("outputs"))
    patterns = p.parse_patterns(sec("slot_phrases"), inputs)
    post_rules = p.parse_post_rules(sec("post_processing"), outputs)
    defaults = p.parse_defaults(sec("defaults"), inputs)
    related = p.parse_related(sec("related"))
    context_rules = p.parse_context(sec("context"))
    render_hint = sec("visualization").text().strip() or None

    if not purpose:
        line = scan.sections["purpose"].heading_line if "purpose" in scan.sections else scan.header_line
        p.error(line, "E004", "tool has no Purpose text")
    for section_id in SECTIONS:
        if section_id == "purpose":
            continue
        if section_id not in scan.sections:
            p.warning(
                scan.header_line,
                "W006",
                f"optional section '{SECTION_HEADINGS[section_id]}' absent",
            )

    if errors(p.diags):
        return None, p.diags
    spec = ToolSpec(
        name=scan.tool_name,
        purpose=purpose,
        provider=provider,
        inputs=inputs,
        outputs=outputs,
        slot_patterns=patterns,
        post_processing=post_rules,
        render_hint=render_hint,
        defaults=defaults,
        related=related,
        context_rules=context_rules,
        source_name=filename,
    )
    return spec, p.diags


def load_bundle(
    documents: list[tuple[str, str]],
    domain_name: str,
    version_label: str = "",
) -> tuple[SpecBundle | None, list[Diagnostic]]:
    """Parse and cross-check a set of documents into a SpecBundle.

    Documents are (name, source) pairs; bundle order follows input order.
    Any error-severity diagnostic (per-document, duplicate tool name E010,
    or a cross-document check from validate_bundle) yields no bundle.
    """
    diags: list[Diagnostic] = []
    tools: list[ToolSpec] = []
    if not documents:
        diags.append(Diagnostic("warning", "<bundle>", 0, "W011", "bundle contains no documents"))
        return SpecBundle(domain_name, [], version_label=version_label), diags

    for name, source in documents:
        spec, doc_diags = parse_tool_spec(source, filename=name)
        diags.extend(doc_diags)
        if spec is not None:
            tools.append(spec)
    if errors(diags):
        return None, diags

    seen: dict[str, ToolSpec] = {}
    for tool in tools:
        key = tool.name.lower()
        if key in seen:
            diags.append(
                Diagnostic(
                    "error",
                    tool.source_name,
                    1,
                    "E010",
                    f"duplicate tool name '{tool.name}' (also defined in {seen[key].source_name})",
                )
            )
        else:
            seen[key] = tool
    if errors(diags):
        return None, diags

    bundle = SpecBundle(domain_name, tools, version_label=version_label)
    diags.extend(validate_bundle(bundle))
    if errors(diags):
        return None, diags
    return bundle, diags


def validate_bundle(bundle: SpecBundle) -> list[Diagnostic]:
    """Cross-document checks over a structurally loaded bundle.

    Emits W020 for same-named parameters whose kind or description differ
    across tools, E021 for related-tool links to unknown tools, and W022
    for an alias claimed by differently named parameters of different
    tools. Results depend only on bundle content, not document order.
    """
    diags: list[Diagnostic] = []

    seen: dict[str, str] = {}
    for tool in bundle.tools:
        key = tool.name.lower()
        if key in seen:
            diags.append(
                Diagnostic(
                    "error",
                    tool.source_name,
                    1,
                    "E010",
                    f"duplicate tool name '{tool.name}' (also defined in {seen[key]})",
                )
            )
        seen.setdefault(key, tool.source_name)

    by_param: dict[str, list[tuple[str, ParamSpec]]] = {}
    for tool in bundle.tools:
        for param in tool.inputs:
            by_param.setdefault(param.name, []).append((tool.name, param))
    for name in sorted(by_param):
        owners = by_param[name]
        if len(owners) < 2:
            continue
        signatures = {(param.kind, param.description) for _, param in owners}
        if len(signatures) > 1:
            locations = ", ".join(
                f"{tool} ({param.kind!r} at line {param.line})" for tool, param in owners
            )
            first = owners[0][1]
            diags.append(
                Diagnostic(
                    "warning",
                    bundle.tools[0].source_name if bundle.tools else "<bundle>",
                    first.line,
                    "W020",
                    f"parameter '{name}' has diverging meaning across tools: {locations}",
                )
            )

    for tool in bundle.tools:
        for link in tool.related:
            if bundle.tool(link.target) is None:
                diags.append(
                    Diagnostic(
                        "error",
                        tool.source_name,
                        link.line,
                        "E021",
                        f"related tool '{link.target}' is not in the bundle",
                    )
                )

    alias_owners: dict[str, set[tuple[str, str]]] = {}
    alias_lines: dict[str, tuple[str, int]] = {}
    for tool in bundle.tools:
        for param in tool.inputs:
            for alias in param.aliases:
                key = alias.lower()
                alias_owners.setdefault(key, set()).add((tool.name, param.name))
                alias_lines.setdefault(key, (tool.source_name, param.line))
    for alias in sorted(alias_owners):
        param_names = {param_name for _, param_name in alias_owners[alias]}
        if len(param_names) > 1:
            claimants = ", ".join(f"{tool}.{param}" for tool, param in sorted(alias_owners[alias]))
            src, line = alias_lines[alias]
            diags.append(
                Diagnostic(
                    "warning",
                    src,
                    line,
                    "W022",
                    f"alias '{alias}' is claimed by different parameters: {claimants}",
                )
            )
    return diags
