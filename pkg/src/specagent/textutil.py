"""Shared tokenizer and stop-word handling.

Every component that matches user language against spec text (slot
patterns, routing cues, the term index) uses this one tokenizer so their
notions of "token" agree: lowercase, whitespace split, punctuation
stripped, with internal ``.`` and ``-`` kept so values like ``0.2`` and
``LINE-1`` survive as single tokens.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[0-9A-Za-z_]+(?:[.\-][0-9A-Za-z_]+)*")

# Deliberately small: articles, pronouns, auxiliaries, question words and
# connective glue, plus a few generic verbs that show up in tool names.
# Directional words like "up"/"down" are kept out because they carry
# domain meaning as output value phrases.
DEFAULT_STOP_WORDS = frozenset(
    """
    a an the and or but if then else not no
    all any some every each everything anything nothing
    i you he she it we they me him her them us
    my your his its our their this that these those
    is are was were am be been being
    do does did done have has had having
    will would shall should can could may might must
    what which who whom whose when where why how
    of at by for with about against to from in into out on onto over
    again also just please very really
    get got check show tell give
    """.split()
)

# Tokens never accepted as captured slot values; anaphora like "is it
# down?" must resolve from session carryover instead.
PRONOUN_TOKENS = frozenset(
    ["it", "that", "this", "these", "those", "they", "them", "he", "she", "one"]
)


def tokenize(text: str) -> list[str]:
    """Lowercased tokens of *text*."""
    return _TOKEN_RE.findall(text.lower())


def tokenize_cased(text: str) -> list[tuple[str, str]]:
    """(original, lowercased) token pairs, preserving source casing."""
    return [(m.group(0), m.group(0).lower()) for m in _TOKEN_RE.finditer(text)]


def split_camel(identifier: str) -> list[str]:
    """Word parts of a CamelCase / snake_case identifier, lowercased."""
    parts = re.findall(r"[A-Z]+(?=[A-Z][a-z0-9])|[A-Z]?[a-z0-9]+|[A-Z]+", identifier)
    return [p.lower() for p in parts if p]


def contains_phrase(tokens: list[str], phrase_tokens: list[str]) -> bool:
    """True if *phrase_tokens* occur contiguously inside *tokens*."""
    if not phrase_tokens:
        return False
    n = len(phrase_tokens)
    return any(tokens[i : i + n] == phrase_tokens for i in range(len(tokens) - n + 1))
