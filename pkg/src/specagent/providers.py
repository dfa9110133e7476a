"""Chat-completion providers behind one call surface.

The scripted provider is a deterministic lookup table keyed by agent role
and the last user utterance; it exists so the whole pipeline can run and
be tested with no model and no network. The http provider posts an
OpenAI-style chat-completion request (temperature 0, single choice) to a
configured endpoint. Auth tokens are read from the environment by name
and never stored, logged, or echoed into prompts or traces.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import requests

ROLE_PROMPT_PREFIXES = {
    "orchestrator": "You are the orchestrator",
    "tca": "You are the tool-calling agent",
    "gca": "You are the general chat agent",
}


class ProviderError(RuntimeError):
    """Provider could not produce a reply (transport, status, or body shape)."""


class ScriptMissError(ProviderError):
    """The scripted table has no reply for this (role, utterance) pair."""

    def __init__(self, role: str, utterance: str):
        super().__init__(f"scripted provider has no {role!r} reply for utterance {utterance!r}")
        self.role = role
        self.utterance = utterance


@dataclass
class ProviderBinding:
    kind: str  # "scripted" | "http"
    script: dict[str, dict[str, str]] = field(default_factory=dict)  # role -> utterance -> reply
    endpoint: str = ""
    model: str = ""
    token_env: str = ""  # env var NAME holding the bearer token
    timeout: float = 15.0


def scripted_provider(script: dict[str, dict[str, str]]) -> ProviderBinding:
    return ProviderBinding(kind="scripted", script=script)


def http_provider(endpoint: str, model: str, token_env: str = "", timeout: float = 15.0) -> ProviderBinding:
    return ProviderBinding(kind="http", endpoint=endpoint, model=model, token_env=token_env, timeout=timeout)


def load_script(path: str) -> ProviderBinding:
    with open(path, encoding="utf-8") as fh:
        return scripted_provider(json.load(fh))


def _role_of_prompt(system_prompt: str) -> Optional[str]:
    for role, prefix in ROLE_PROMPT_PREFIXES.items():
        if system_prompt.startswith(prefix):
            return role
    return None


def _last_user_text(messages: list[tuple[str, str]]) -> str:
    for speaker, text in reversed(messages):
        if speaker == "user":
            return text
    return ""


def provider_complete(
    binding: ProviderBinding,
    system_prompt: str,
    messages: list[tuple[str, str]],
    role: Optional[str] = None,
) -> str:
    """One completion under *system_prompt* for a (speaker, text) history.

    Scripted bindings answer by exact (role, last user utterance) lookup;
    the role is taken from the caller or recognized from the prompt's
    opening words.
    """
    if binding.kind == "scripted":
        resolved = role or _role_of_prompt(system_prompt) or "gca"
        utterance = _last_user_text(messages)
        table = binding.script.get(resolved, {})
        if utterance not in table:
            raise ScriptMissError(resolved, utterance)
        return table[utterance]
    if binding.kind == "http":
        return _http_complete(binding, system_prompt, messages)
    raise ProviderError(f"unknown provider kind {binding.kind!r}")


def _http_complete(binding: ProviderBinding, system_prompt: str, messages: list[tuple[str, str]]) -> str:
    chat = [{"role": "system", "content": system_prompt}]
    for speaker, text in messages:
        chat.append({"role": "assistant" if speaker == "assistant" else "user", "content": text})
    headers = {"Content-Type": "application/json"}
    if binding.token_env:
        token = os.environ.get(binding.token_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
    body = {"model": binding.model, "messages": chat, "temperature": 0}
    try:
        reply = requests.post(binding.endpoint, json=body, headers=headers, timeout=binding.timeout)
    except requests.RequestException as exc:
        raise ProviderError(f"provider request to {binding.endpoint} failed: {exc}") from exc
    if reply.status_code // 100 != 2:
        raise ProviderError(f"provider at {binding.endpoint} returned HTTP {reply.status_code}")
    try:
        payload = reply.json()
        return payload["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProviderError(f"provider at {binding.endpoint} returned a malformed body: {exc}") from exc
