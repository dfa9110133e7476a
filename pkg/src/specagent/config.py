"""Runtime configuration: defaults, config file, flags, environment.

Precedence (lowest to highest): built-in defaults, config file, command
line flags, environment variables. The config file is simple key = value
lines with # comments; recognized keys match the field names below.
Provider auth tokens are configured by environment-variable NAME
(provider_token_env), never by value.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .textutil import DEFAULT_STOP_WORDS

ENV_PREFIX = "SPECAGENT_"


@dataclass
class RuntimeConfig:
    spec_dir: str = ""  # empty means the bundled demo domain
    store: str = "./spec-snapshots"
    provider: str = "scripted"  # "none" | "scripted" | "http"
    provider_script: str = ""  # path to a scripted table; empty means bundled
    provider_url: str = ""
    provider_model: str = ""
    provider_token_env: str = "SPECAGENT_PROVIDER_TOKEN"
    registry: str = "in_process"  # "in_process" | "rpc"
    registry_addr: str = ""  # base URL for rpc registry mode
    fixture: str = ""  # machine table path; empty means bundled
    prompt_budget: int = 100_000
    retrieval_k: int = 3
    max_examples: int = 2
    auto_call_depth: int = 2
    stop_words_path: str = ""
    stop_words: frozenset[str] = DEFAULT_STOP_WORDS
    gca_policy: str = ""
    addr: str = "127.0.0.1:8321"
    ui_dir: str = ""

    def validate(self) -> None:
        if self.prompt_budget <= 0:
            raise ValueError("prompt budget must be positive")
        if self.auto_call_depth < 0:
            raise ValueError("auto-call depth must be >= 0")
        if self.registry == "rpc" and not self.registry_addr:
            raise ValueError("registry mode rpc requires an address")


_INT_FIELDS = {"prompt_budget", "retrieval_k", "max_examples", "auto_call_depth"}


def read_config_file(path: str | Path) -> dict[str, str]:
    """key = value pairs from a config file; unknown keys are kept for callers."""
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        values[key.strip().lower()] = value.strip().strip('"')
    return values


def load_stop_words(path: str | Path) -> frozenset[str]:
    """One stop word per line; blank lines and # comments ignored."""
    words = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        word = raw.strip().lower()
        if word and not word.startswith("#"):
            words.add(word)
    return frozenset(words)


def _apply(config: RuntimeConfig, values: dict[str, str]) -> RuntimeConfig:
    known = {f.name for f in fields(RuntimeConfig)}
    updates = {}
    for key, value in values.items():
        if key not in known or value is None:
            continue
        updates[key] = int(value) if key in _INT_FIELDS else value
    return replace(config, **updates)


def build_config(
    config_path: Optional[str] = None,
    flag_values: Optional[dict[str, str]] = None,
    env: Optional[dict[str, str]] = None,
) -> RuntimeConfig:
    """Merge defaults <- config file <- flags <- environment."""
    config = RuntimeConfig()
    if config_path:
        config = _apply(config, read_config_file(config_path))
    if flag_values:
        config = _apply(config, {k: v for k, v in flag_values.items() if v is not None})
    env = dict(os.environ if env is None else env)
    env_values = {
        key[len(ENV_PREFIX) :].lower(): value
        for key, value in env.items()
        if key.startswith(ENV_PREFIX)
    }
    config = _apply(config, env_values)
    if config.stop_words_path:
        config = replace(config, stop_words=load_stop_words(config.stop_words_path))
    config.validate()
    return config
