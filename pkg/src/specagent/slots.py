"""Deterministic slot filling: pattern matching, coercion, defaults, post-processing.

Extraction is pure and rule-driven so every fill is auditable: patterns
are tried most-specific first, alias mentions ("machine 7") fill what
patterns miss, and unresolved values fall back to session carryover.
A provider-proposed argument map can be pushed through the same coercion
and default machinery, so both tiers honor one contract.

Captures absorb an alias prefix ("check if machine 7 is down" binds
machine_id to "7", not "machine"), and pronouns are never accepted as
values; anaphora must resolve from carryover.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Any, Mapping, Optional

from .model import ParamSpec, RelatedToolLink, SpecBundle, ToolSpec
from .textutil import DEFAULT_STOP_WORDS, PRONOUN_TOKENS, tokenize, tokenize_cased

_PLACEHOLDER_CHUNK_RE = re.compile(r"^\W*\{([A-Za-z_]\w*)(\.\.\.)?\}\W*$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_NUMBER_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)$")
_TRUE_WORDS = frozenset(["yes", "true", "on"])
_FALSE_WORDS = frozenset(["no", "false", "off"])

PhraseTable = Mapping[str, list[str]]


class CoercionError(ValueError):
    """Raw text does not parse under the parameter's declared kind."""

    def __init__(self, raw: str, param: ParamSpec, detail: str = ""):
        suffix = f" ({detail})" if detail else ""
        super().__init__(f"cannot read {raw!r} as {param.kind} for parameter '{param.name}'{suffix}")
        self.raw = raw
        self.param = param


@dataclass(frozen=True)
class _Item:
    literal: str = ""  # set for literal items
    param: str = ""  # set for captures
    multi: bool = False

    @property
    def is_capture(self) -> bool:
        return bool(self.param)


@dataclass
class CompiledPattern:
    tool: str
    source: str  # original pattern text; its identity in traces
    items: tuple[_Item, ...]
    literals: list[str]
    captures: list[tuple[str, bool]]  # (param, multi_token)
    index: int  # authoring order
    note: str = ""

    @property
    def specificity(self) -> int:
        return len(self.literals)


@dataclass
class SlotValue:
    raw: str
    value: Any
    origin: str  # "utterance" | "session_carryover" | "default"


@dataclass
class ExtractionResult:
    tool: str
    filled: dict[str, SlotValue] = field(default_factory=dict)
    matched_patterns: list[str] = field(default_factory=list)
    unmatched_required: list[str] = field(default_factory=list)


@dataclass
class FilledCall:
    tool: str
    args: dict[str, Any] = field(default_factory=dict)
    clarification: Optional[str] = None
    refusal: Optional[str] = None
    slots: dict[str, SlotValue] = field(default_factory=dict)

    @property
    def ready(self) -> bool:
        return self.clarification is None and self.refusal is None


@dataclass
class RenderedResult:
    text: str
    suggested_followups: list[str] = field(default_factory=list)
    auto_calls: list[FilledCall] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def coerce(
    raw: str,
    param: ParamSpec,
    phrases: Optional[PhraseTable] = None,
    today: Optional[date] = None,
) -> Any:
    """Parse *raw* into a value of the parameter's declared kind.

    Enum matching consults declared values first, then the supplied
    canonical-value phrase table, both case-insensitively. Dates accept
    ISO-8601 plus "today"/"yesterday" against the injected clock.
    """
    text = raw.strip()
    kind = param.kind
    if kind == "string":
        return text
    if kind == "integer":
        if _INT_RE.match(text):
            return int(text)
        raise CoercionError(raw, param, "expected a decimal integer")
    if kind == "number":
        if _NUMBER_RE.match(text):
            return float(text)
        raise CoercionError(raw, param, "expected a decimal number")
    if kind == "boolean":
        lowered = text.lower()
        if lowered in _TRUE_WORDS:
            return True
        if lowered in _FALSE_WORDS:
            return False
        raise CoercionError(raw, param, "expected yes/no/true/false/on/off")
    if kind == "enum":
        lowered = text.lower()
        for value in param.enum_values:
            if value.lower() == lowered:
                return value
        for canonical, synonyms in (phrases or {}).items():
            if lowered == canonical.lower() or any(lowered == s.lower() for s in synonyms):
                if param.enum_values and canonical not in param.enum_values:
                    continue
                return canonical
        raise CoercionError(raw, param, f"expected one of {', '.join(param.enum_values)}")
    if kind == "date":
        lowered = text.lower()
        base = today if today is not None else date.today()
        if lowered == "today":
            return base
        if lowered == "yesterday":
            return base - timedelta(days=1)
        try:
            return date.fromisoformat(text)
        except ValueError:
            raise CoercionError(raw, param, "expected ISO-8601 or today/yesterday") from None
    raise CoercionError(raw, param, f"unsupported kind {kind!r}")


def reserved_value_tokens(tool: ToolSpec) -> frozenset[str]:
    """Tool vocabulary that must not be mistaken for a free-string value."""
    reserved: set[str] = set()
    for pattern in tool.slot_patterns:
        skeleton = re.sub(r"\{\w+(\.\.\.)?\}", " ", pattern.pattern)
        reserved.update(tokenize(skeleton))
    for out in tool.outputs:
        for canonical, synonyms in out.value_phrases.items():
            reserved.update(tokenize(canonical))
            for synonym in synonyms:
                reserved.update(tokenize(synonym))
    return frozenset(reserved)


def param_phrase_tables(bundle: SpecBundle, tool: ToolSpec) -> dict[str, PhraseTable]:
    """Phrase table per enum param, resolved from output fields of the same name.

    The owning tool's outputs win; other tools' outputs fill the gaps, so
    a filter parameter can reuse the vocabulary its values come from.
    """
    tables: dict[str, dict[str, list[str]]] = {}
    for param in tool.inputs:
        if param.kind != "enum":
            continue
        table: dict[str, list[str]] = {}
        for candidate in [tool] + [t for t in bundle.tools if t.name != tool.name]:
            out = candidate.output(param.name)
            if out is None:
                continue
            for canonical, synonyms in out.value_phrases.items():
                table.setdefault(canonical, synonyms)
        tables[param.name] = table
    return tables


def compile_patterns(spec: ToolSpec) -> list[CompiledPattern]:
    """One CompiledPattern per slot pattern, in authoring order."""
    compiled: list[CompiledPattern] = []
    for index, pattern in enumerate(spec.slot_patterns):
        items: list[_Item] = []
        for chunk in pattern.pattern.split():
            m = _PLACEHOLDER_CHUNK_RE.match(chunk)
            if m:
                items.append(_Item(param=m.group(1), multi=m.group(2) is not None))
            else:
                items.extend(_Item(literal=tok) for tok in tokenize(chunk))
        literals = [it.literal for it in items if not it.is_capture]
        captures = [(it.param, it.multi) for it in items if it.is_capture]
        compiled.append(
            CompiledPattern(
                tool=spec.name,
                source=pattern.pattern,
                items=tuple(items),
                literals=literals,
                captures=captures,
                index=index,
                note=pattern.note,
            )
        )
    return compiled


def _alias_token_lists(param: ParamSpec) -> list[list[str]]:
    """Tokenized aliases, longest first so specific mentions win."""
    token_lists = [tokenize(alias) for alias in param.aliases]
    token_lists = [tl for tl in token_lists if tl]
    return sorted(token_lists, key=lambda tl: (-len(tl), tl))


class _Matcher:
    """Aligns one compiled pattern against the token stream."""

    def __init__(
        self,
        tokens: list[tuple[str, str]],
        params_by_name: dict[str, ParamSpec],
        phrases: Mapping[str, PhraseTable],
        stop_words: frozenset[str],
        today: Optional[date],
        reserved: frozenset[str] = frozenset(),
    ):
        self.tokens = tokens
        self.params = params_by_name
        self.phrases = phrases
        self.stop_words = stop_words
        self.today = today
        self.reserved = reserved

    def match(self, pattern: CompiledPattern) -> Optional[dict[str, SlotValue]]:
        for start in range(len(self.tokens) + 1):
            bindings = self._items(pattern.items, 0, start, {})
            if bindings is not None:
                return bindings
        return None

    def _items(
        self, items: tuple[_Item, ...], i: int, pos: int, bound: dict[str, SlotValue]
    ) -> Optional[dict[str, SlotValue]]:
        if i == len(items):
            return bound
        item = items[i]
        if not item.is_capture:
            if pos < len(self.tokens) and self.tokens[pos][1] == item.literal:
                return self._items(items, i + 1, pos + 1, bound)
            return None
        param = self.params.get(item.param)
        if param is None:
            return None
        # A capture may skip an alias mention of its own parameter
        # ("machine 7" binds the 7).
        for alias_tokens in _alias_token_lists(param):
            end = pos + len(alias_tokens)
            if [low for _, low in self.tokens[pos:end]] == alias_tokens and end < len(self.tokens):
                result = self._capture(items, i, end, bound, param)
                if result is not None:
                    return result
        return self._capture(items, i, pos, bound, param)

    def _capture(
        self,
        items: tuple[_Item, ...],
        i: int,
        pos: int,
        bound: dict[str, SlotValue],
        param: ParamSpec,
    ) -> Optional[dict[str, SlotValue]]:
        item = items[i]
        if pos >= len(self.tokens):
            return None
        if not item.multi:
            candidates = [pos + 1]
        elif i + 1 == len(items):
            candidates = [len(self.tokens)]  # trailing multi takes the remainder
        else:
            candidates = list(range(pos + 1, len(self.tokens) + 1))  # non-greedy: shortest first
        for end in candidates:
            value = self._accept(param, self.tokens[pos:end])
            if value is None:
                if not item.multi:
                    return None
                continue
            result = self._items(items, i + 1, end, {**bound, param.name: value})
            if result is not None:
                return result
        return None

    def _accept(self, param: ParamSpec, span: list[tuple[str, str]]) -> Optional[SlotValue]:
        if not span:
            return None
        lows = [low for _, low in span]
        if all(low in PRONOUN_TOKENS for low in lows):
            return None
        if param.kind == "string":
            # The tool's own vocabulary (pattern literals, value phrases)
            # is never a plausible free-string value: "machine down" talks
            # about being down, it does not name a machine "down".
            blocked = self.stop_words | PRONOUN_TOKENS | self.reserved
            if all(low in blocked for low in lows):
                return None
        raw = " ".join(orig for orig, _ in span)
        try:
            value = coerce(raw, param, self.phrases.get(param.name), self.today)
        except CoercionError:
            return None
        return SlotValue(raw=raw, value=value, origin="utterance")


def extract_slots(
    utterance: str,
    session_slots: Mapping[str, SlotValue],
    patterns: list[CompiledPattern],
    params: list[ParamSpec],
    phrases: Optional[Mapping[str, PhraseTable]] = None,
    stop_words: frozenset[str] = DEFAULT_STOP_WORDS,
    today: Optional[date] = None,
    reserved: frozenset[str] = frozenset(),
) -> ExtractionResult:
    """Fill parameters from an utterance, then aliases, then carryover.

    Patterns are tried in descending literal specificity (authoring order
    breaks ties); the first successful fill per parameter wins. Every
    pattern that matched is recorded, so conflicting fills stay auditable.
    """
    if patterns:
        tools = {p.tool for p in patterns}
        if len(tools) > 1:
            raise ValueError(f"patterns belong to multiple tools: {sorted(tools)}")
    tool = patterns[0].tool if patterns else ""
    params_by_name = {p.name: p for p in params}
    matcher = _Matcher(tokenize_cased(utterance), params_by_name, phrases or {}, stop_words, today, reserved)

    result = ExtractionResult(tool=tool)
    for pattern in sorted(patterns, key=lambda p: (-p.specificity, p.index)):
        bindings = matcher.match(pattern)
        if bindings is None:
            continue
        result.matched_patterns.append(pattern.source)
        for name, slot_value in bindings.items():
            result.filled.setdefault(name, slot_value)

    for param in params:
        if param.name in result.filled:
            continue
        fill = _alias_fill(param, matcher.tokens, matcher)
        if fill is not None:
            result.filled[param.name] = fill
            result.matched_patterns.append(f"alias:{param.name}")

    # Required params always fall back to carryover; optional ones only when
    # the utterance points back at context ("that machine", "it") — an
    # optional parameter left out is a meaningful input by itself.
    anaphoric = any(low in PRONOUN_TOKENS for _, low in matcher.tokens)
    for param in params:
        if param.name in result.filled:
            continue
        if not param.required and not anaphoric:
            continue
        carried = session_slots.get(param.name)
        if carried is None:
            continue
        try:
            value = coerce(str(carried.raw), param, (phrases or {}).get(param.name), today)
        except CoercionError:
            continue
        result.filled[param.name] = SlotValue(raw=carried.raw, value=value, origin="session_carryover")

    result.unmatched_required = [p.name for p in params if p.required and p.name not in result.filled]
    return result


def best_pattern_match(
    utterance: str,
    patterns: list[CompiledPattern],
    params: list[ParamSpec],
    phrases: Optional[Mapping[str, PhraseTable]] = None,
    stop_words: frozenset[str] = DEFAULT_STOP_WORDS,
    today: Optional[date] = None,
    reserved: frozenset[str] = frozenset(),
) -> Optional[CompiledPattern]:
    """Most specific pattern that fully aligns with the utterance, if any."""
    params_by_name = {p.name: p for p in params}
    matcher = _Matcher(tokenize_cased(utterance), params_by_name, phrases or {}, stop_words, today, reserved)
    for pattern in sorted(patterns, key=lambda p: (-p.specificity, p.index)):
        if matcher.match(pattern) is not None:
            return pattern
    return None


def _alias_fill(
    param: ParamSpec, tokens: list[tuple[str, str]], matcher: _Matcher
) -> Optional[SlotValue]:
    """Value following an alias mention, e.g. alias "machine" in "machine 7"."""
    own_alias_tokens = {tok for alias in param.aliases for tok in tokenize(alias)}
    lows = [low for _, low in tokens]
    for alias_tokens in _alias_token_lists(param):
        n = len(alias_tokens)
        for i in range(len(tokens) - n):
            if lows[i : i + n] != alias_tokens:
                continue
            candidate_low = lows[i + n]
            if candidate_low in own_alias_tokens:
                continue
            value = matcher._accept(param, tokens[i + n : i + n + 1])
            if value is not None:
                return value
    return None


def apply_defaults(extraction: ExtractionResult, spec: ToolSpec, phrases=None, today=None) -> FilledCall:
    """Resolve missing required parameters via the spec's declared behaviors.

    The first missing parameter whose behavior is ask_user (or that has no
    behavior at all) short-circuits into a clarification; refuse yields a
    refusal; use_default fills and continues.
    """
    if extraction.tool and extraction.tool != spec.name:
        raise ValueError(f"extraction is for {extraction.tool!r}, not {spec.name!r}")
    call = FilledCall(tool=spec.name)
    call.slots = dict(extraction.filled)
    call.args = {name: sv.value for name, sv in extraction.filled.items()}

    behaviors = {b.param: b for b in spec.defaults if b.trigger == "missing_input"}
    for param in spec.inputs:
        if not param.required or param.name in call.args:
            continue
        behavior = behaviors.get(param.name)
        if behavior is None:
            call.clarification = f"Which {param.name} should I use?"
            return call
        if behavior.action == "ask_user":
            call.clarification = behavior.text
            return call
        if behavior.action == "refuse":
            call.refusal = behavior.text
            return call
        # use_default
        try:
            value = coerce(behavior.text, param, (phrases or {}).get(param.name), today)
        except CoercionError:
            call.clarification = f"Which {param.name} should I use?"
            return call
        call.slots[param.name] = SlotValue(raw=behavior.text, value=value, origin="default")
        call.args[param.name] = value
    return call


def is_empty_output(fields: Mapping[str, Any]) -> bool:
    return not fields or all(v is None or v == "" or v == [] or v == {} for v in fields.values())


def _comparable_number(value: Any) -> Optional[float]:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str) and _NUMBER_RE.match(value.strip()):
        return float(value)
    return None


def evaluate_condition(field_value: Any, comparator: str, rule_value: str) -> tuple[bool, Optional[str]]:
    """(matched, warning). Numeric comparison when both sides parse as numbers."""
    if comparator == "empty":
        return (field_value is None or field_value == "" or field_value == [] or field_value == {}, None)
    if comparator == "non_empty":
        return (not (field_value is None or field_value == "" or field_value == [] or field_value == {}), None)
    left = _comparable_number(field_value)
    right = _comparable_number(rule_value)
    if comparator in ("greater_than", "less_than"):
        if left is None or right is None:
            return (False, f"comparator {comparator} needs numeric operands; got {field_value!r} vs {rule_value!r}")
        return (left > right if comparator == "greater_than" else left < right, None)
    if left is not None and right is not None:
        equal = left == right
    else:
        equal = str(field_value).strip().lower() == rule_value.strip().lower()
    return (equal if comparator == "equals" else not equal, None)


def _substitute(template: str, values: Mapping[str, Any], warnings: list[str]) -> str:
    def repl(m: re.Match) -> str:
        name = m.group(1)
        if name not in values:
            warnings.append(f"template references unknown field '{name}'")
            return m.group(0)
        value = values[name]
        if isinstance(value, float) and value == int(value):
            return str(int(value))
        if isinstance(value, date):
            return value.isoformat()
        return str(value)

    return re.sub(r"\{(\w+)\}", repl, template)


def post_process(
    result: Mapping[str, Any],
    rules: list,
    related: list[RelatedToolLink],
    *,
    call_args: Optional[Mapping[str, Any]] = None,
    bundle: Optional[SpecBundle] = None,
    today: Optional[date] = None,
) -> RenderedResult:
    """Turn raw output fields into answer text, suggestions, and auto-calls.

    Rules run in authoring order: format templates set the text, notes
    accumulate after it, suggestions collect follow-up tool names. An
    after-link with auto_invoke and a satisfied condition becomes an
    auto-call carrying the values the two tools share.
    """
    fields = dict(result)
    call_args = dict(call_args or {})
    warnings: list[str] = []
    text = "; ".join(f"{k}: {v}" for k, v in fields.items())
    notes: list[str] = []
    followups: list[str] = []

    for rule in rules:
        if rule.field not in fields:
            warnings.append(f"rule on absent field '{rule.field}' skipped")
            continue
        matched, warning = evaluate_condition(fields[rule.field], rule.comparator, rule.value)
        if warning:
            warnings.append(warning)
        if not matched:
            continue
        if rule.action == "suggest_tool":
            if rule.action_arg not in followups:
                followups.append(rule.action_arg)
        elif rule.action == "format_template":
            text = _substitute(rule.action_arg, {**call_args, **fields}, warnings)
        elif rule.action == "append_note":
            notes.append(rule.action_arg)

    auto_calls: list[FilledCall] = []
    for link in related:
        if not link.auto_invoke or link.direction != "after":
            continue
        if link.condition is not None:
            cond_field, comparator, value = link.condition
            if cond_field not in fields:
                warnings.append(f"auto-link condition on absent field '{cond_field}' skipped")
                continue
            matched, warning = evaluate_condition(fields[cond_field], comparator, value)
            if warning:
                warnings.append(warning)
            if not matched:
                continue
        shared = {**call_args, **{k: v for k, v in fields.items() if not is_empty_output({k: v})}}
        args = dict(shared)
        if bundle is not None:
            target = bundle.tool(link.target)
            if target is not None:
                phrase_tables = param_phrase_tables(bundle, target)
                args = {}
                for param in target.inputs:
                    if param.name not in shared:
                        continue
                    try:
                        args[param.name] = coerce(
                            str(shared[param.name]), param, phrase_tables.get(param.name), today
                        )
                    except CoercionError:
                        continue
        slots = {k: SlotValue(raw=str(v), value=v, origin="session_carryover") for k, v in args.items()}
        auto_calls.append(FilledCall(tool=link.target, args=args, slots=slots))

    final_text = text if not notes else text + "\n" + "\n".join(notes)
    return RenderedResult(final_text, followups, auto_calls, warnings)
