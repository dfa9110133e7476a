"""Weighted term index over spec sections, for retrieval-mode prompting.

Bag-of-words with three weight classes: parameter aliases and the tool's
own name count 3, enum value phrases count 2, everything else 1. A term
keeps the strongest class it was seen under per (tool, section), so an
alias that also appears in prose still scores 3. No embeddings: the index
must return the same ranking on every run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import SECTIONS, SpecBundle, ToolSpec
from .textutil import DEFAULT_STOP_WORDS, split_camel, tokenize

WEIGHT_NAME = 3.0
WEIGHT_ALIAS = 3.0
WEIGHT_VALUE_PHRASE = 2.0
WEIGHT_PROSE = 1.0

_SECTION_ORDER = {section: i for i, section in enumerate(("name",) + SECTIONS)}


@dataclass
class TermIndex:
    postings: dict[str, dict[tuple[str, str], float]] = field(default_factory=dict)
    section_text: dict[tuple[str, str], str] = field(default_factory=dict)
    doc_count: int = 0
    stop_words: frozenset[str] = DEFAULT_STOP_WORDS


@dataclass
class SnippetHit:
    tool: str
    section: str
    score: float
    excerpt: str

    def to_dict(self) -> dict:
        return {"tool": self.tool, "section": self.section, "score": self.score, "excerpt": self.excerpt}


def _post(index: TermIndex, term: str, tool: str, section: str, weight: float, text: str) -> None:
    if not term or term in index.stop_words:
        return
    doc = (tool, section)
    bucket = index.postings.setdefault(term, {})
    bucket[doc] = max(bucket.get(doc, 0.0), weight)
    if doc not in index.section_text:
        index.section_text[doc] = text
        index.doc_count += 1


def _section_sources(tool: ToolSpec) -> dict[str, str]:
    """Indexable text per section, rebuilt from the model."""
    sources = {
        "purpose": tool.purpose,
        "provider": tool.provider,
        "inputs": " ".join(
            f"{p.name} {p.description} {' '.join(p.aliases)} {' '.join(p.enum_values)}" for p in tool.inputs
        ),
        "outputs": " ".join(
            f"{f.name} {f.description} {' '.join(f.enum_values)} "
            + " ".join(f"{c} {' '.join(s)}" for c, s in f.value_phrases.items())
            for f in tool.outputs
        ),
        "slot_phrases": " ".join(f"{p.pattern} {p.note}" for p in tool.slot_patterns),
        "post_processing": " ".join(f"{r.field} {r.value} {r.action_arg}" for r in tool.post_processing),
        "visualization": tool.render_hint or "",
        "defaults": " ".join(b.text for b in tool.defaults),
        "related": " ".join(f"{l.target} {' '.join(l.cues)}" for l in tool.related),
        "context": " ".join(f"{r.pattern} {r.arg}" for r in tool.context_rules),
    }
    return {k: v.strip() for k, v in sources.items() if v.strip()}


def build_index(bundle: SpecBundle, stop_words: frozenset[str] = DEFAULT_STOP_WORDS) -> TermIndex:
    index = TermIndex(stop_words=stop_words)
    for tool in bundle.tools:
        name_text = tool.name
        _post(index, tool.name.lower(), tool.name, "name", WEIGHT_NAME, name_text)
        for word in split_camel(tool.name):
            _post(index, word, tool.name, "name", WEIGHT_NAME, name_text)

        sources = _section_sources(tool)
        for section, text in sources.items():
            for token in tokenize(text):
                _post(index, token, tool.name, section, WEIGHT_PROSE, text)
        for param in tool.inputs:
            for alias in param.aliases:
                for token in tokenize(alias):
                    _post(index, token, tool.name, "inputs", WEIGHT_ALIAS, sources.get("inputs", ""))
        for out in tool.outputs:
            for canonical, synonyms in out.value_phrases.items():
                for phrase in [canonical, *synonyms]:
                    for token in tokenize(phrase):
                        _post(index, token, tool.name, "outputs", WEIGHT_VALUE_PHRASE, sources.get("outputs", ""))
    return index


def query(index: TermIndex, utterance: str, k: int = 3) -> list[SnippetHit]:
    """Top-k sections by summed matched-term weight.

    Ties break by tool name, then section order. Repeated query tokens
    count once. Asking for more hits than exist returns them all.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    terms = {t for t in tokenize(utterance) if t not in index.stop_words}
    scores: dict[tuple[str, str], float] = {}
    for term in terms:
        for doc, weight in index.postings.get(term, {}).items():
            scores[doc] = scores.get(doc, 0.0) + weight
    ranked = sorted(
        scores.items(),
        key=lambda item: (-item[1], item[0][0], _SECTION_ORDER.get(item[0][1], 99)),
    )
    return [
        SnippetHit(tool, section, score, index.section_text.get((tool, section), ""))
        for (tool, section), score in ranked[:k]
    ]


def tool_scores(index: TermIndex, utterance: str, restrict: set[str] | None = None) -> dict[str, float]:
    """Per-tool relevance: each term contributes its strongest weight for that tool."""
    terms = {t for t in tokenize(utterance) if t not in index.stop_words}
    scores: dict[str, float] = {}
    for term in terms:
        best: dict[str, float] = {}
        for (tool, _section), weight in index.postings.get(term, {}).items():
            if restrict is not None and tool not in restrict:
                continue
            best[tool] = max(best.get(tool, 0.0), weight)
        for tool, weight in best.items():
            scores[tool] = scores.get(tool, 0.0) + weight
    return scores


def tools_for_hits(hits: list[SnippetHit]) -> list[str]:
    """Unique tool names in hit order; retrieval promotes sections to whole tools."""
    seen: list[str] = []
    for hit in hits:
        if hit.tool not in seen:
            seen.append(hit.tool)
    return seen
