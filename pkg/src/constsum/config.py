"""Run configuration: a JSON file deep-merged over shipped defaults.

Every validation failure is collected and reported in one error so a bad
config can be fixed in a single pass. API keys never live in the file;
the config names an environment variable instead.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import (
    default_rules_path,
    default_stopwords_path,
    default_taxonomy_path,
)
from .pipeline import ModelTier
from .providers.pricing import ModelPrice, pricing_from_config
from .semeval import BlancConfig, JudgeSettings

CHAT_PROVIDERS = ("synthetic", "scripted", "http")
EMBEDDERS = ("mock", "sidecar")
MATCH_DIRECTIONS = ("generated_to_actual", "actual_to_generated")
TRANSCRIPT_MODES = ("record", "replay")


class ConfigError(ValueError):
    """Carries every validation failure found in one pass."""

    def __init__(self, issues: list[str]):
        self.issues = list(issues)
        lines = "\n".join(f"  - {issue}" for issue in self.issues)
        super().__init__(f"invalid configuration ({len(self.issues)} issue(s)):\n{lines}")


@dataclass(frozen=True)
class RunConfig:
    chat_provider: str
    endpoint: str | None
    api_key_env: str
    script_path: Path | None
    tiers: tuple[ModelTier, ...]
    max_output_tokens: int
    system_role: str
    pricing: dict[str, ModelPrice]
    embedder: str
    sidecar_url: str | None
    judge: JudgeSettings
    blanc: BlancConfig
    strict_parse: bool
    retry_on_violation: bool
    match_direction: str
    anonymize: bool
    transcript_mode: str
    replay_path: Path | None
    taxonomy_path: Path
    stopwords_path: Path
    rules_path: Path
    corpus_path: Path | None

    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)


def default_config_raw() -> dict:
    with resources.files("constsum.data").joinpath("default_config.json").open(
        "r", encoding="utf-8"
    ) as fh:
        return json.load(fh)


def _merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            merged[key] = _merge(base[key], value)
        else:
            merged[key] = value
    return merged


def _check_unknown(raw: dict, allowed: dict[str, tuple[str, ...]], issues: list[str]) -> None:
    for key in raw:
        if key not in allowed:
            issues.append(f"unknown top-level key {key!r}")
            continue
        section = raw[key]
        if allowed[key] and isinstance(section, dict):
            for sub in section:
                if sub not in allowed[key]:
                    issues.append(f"unknown key {key}.{sub}")


_SCHEMA = {
    "chat": ("provider", "endpoint", "api_key_env", "script_path",
             "model_tiers", "max_output_tokens", "system_role"),
    "pricing": (),
    "embedder": (),
    "sidecar_url": (),
    "judge": ("model", "temperature", "system_role", "max_output_tokens"),
    "blanc": ("mask_every", "min_token_len", "token_budget", "filler"),
    "modes": ("strict_parse", "retry_on_violation", "match_direction",
              "anonymize", "transcript"),
    "paths": ("taxonomy", "stopwords", "rules", "corpus", "replay_transcript"),
}


def _resolve_path(value, fallback: Path | None) -> Path | None:
    if value is None:
        return fallback
    return Path(value)


def parse_config(raw: dict) -> RunConfig:
    """Validate a merged raw mapping, reporting every problem at once."""
    issues: list[str] = []
    _check_unknown(raw, _SCHEMA, issues)

    chat = raw.get("chat", {})
    provider = chat.get("provider")
    if provider not in CHAT_PROVIDERS:
        issues.append(f"chat.provider must be one of {CHAT_PROVIDERS}, got {provider!r}")
    endpoint = chat.get("endpoint")
    api_key_env = chat.get("api_key_env")
    if not isinstance(api_key_env, str) or not api_key_env:
        issues.append("chat.api_key_env must be a non-empty environment variable name")
    script_path = _resolve_path(chat.get("script_path"), None)
    if provider == "http" and not endpoint:
        issues.append("chat.provider 'http' requires chat.endpoint")
    if provider == "scripted" and script_path is None:
        issues.append("chat.provider 'scripted' requires chat.script_path")
    if script_path is not None and not script_path.is_file():
        issues.append(f"chat.script_path does not exist: {script_path}")

    tiers: tuple[ModelTier, ...] = ()
    raw_tiers = chat.get("model_tiers", [])
    if not isinstance(raw_tiers, list) or not raw_tiers:
        issues.append("chat.model_tiers must be a non-empty list")
    else:
        try:
            tiers = tuple(
                ModelTier(t["model"], int(t["context_tokens"])) for t in raw_tiers)
        except (KeyError, TypeError, ValueError) as exc:
            issues.append(f"chat.model_tiers entries need model + context_tokens: {exc}")

    max_output_tokens = chat.get("max_output_tokens", 1024)
    if not isinstance(max_output_tokens, int) or max_output_tokens < 1:
        issues.append(f"chat.max_output_tokens must be a positive integer, got {max_output_tokens!r}")
    system_role = chat.get("system_role", "")
    if not system_role:
        issues.append("chat.system_role must be non-empty")

    pricing: dict[str, ModelPrice] = {}
    try:
        pricing = pricing_from_config(raw.get("pricing", {}))
    except (KeyError, TypeError, ValueError, ArithmeticError) as exc:
        issues.append(f"pricing table malformed: {exc}")
    for tier in tiers:
        if pricing and tier.model not in pricing:
            issues.append(f"pricing missing entry for tier model {tier.model!r}")

    embedder = raw.get("embedder")
    if embedder not in EMBEDDERS:
        issues.append(f"embedder must be one of {EMBEDDERS}, got {embedder!r}")
    sidecar_url = raw.get("sidecar_url")
    if embedder == "sidecar" and not sidecar_url:
        issues.append("embedder 'sidecar' requires sidecar_url")

    judge_raw = raw.get("judge", {})
    judge = JudgeSettings()
    try:
        judge = JudgeSettings(
            model=judge_raw.get("model", judge.model),
            system_role=judge_raw.get("system_role", judge.system_role),
            temperature=float(judge_raw.get("temperature", judge.temperature)),
            max_output_tokens=int(judge_raw.get("max_output_tokens", judge.max_output_tokens)),
        )
    except (TypeError, ValueError) as exc:
        issues.append(f"judge settings malformed: {exc}")

    blanc_raw = raw.get("blanc", {})
    blanc = BlancConfig()
    try:
        blanc = BlancConfig(
            mask_every=int(blanc_raw.get("mask_every", blanc.mask_every)),
            min_token_len=int(blanc_raw.get("min_token_len", blanc.min_token_len)),
            token_budget=int(blanc_raw.get("token_budget", blanc.token_budget)),
            filler=blanc_raw.get("filler", blanc.filler),
        )
    except (TypeError, ValueError) as exc:
        issues.append(f"blanc settings malformed: {exc}")

    modes = raw.get("modes", {})
    strict_parse = modes.get("strict_parse", False)
    retry_on_violation = modes.get("retry_on_violation", False)
    anonymize = modes.get("anonymize", True)
    for name, value in (("strict_parse", strict_parse),
                        ("retry_on_violation", retry_on_violation),
                        ("anonymize", anonymize)):
        if not isinstance(value, bool):
            issues.append(f"modes.{name} must be boolean, got {value!r}")
    match_direction = modes.get("match_direction", "generated_to_actual")
    if match_direction not in MATCH_DIRECTIONS:
        issues.append(
            f"modes.match_direction must be one of {MATCH_DIRECTIONS}, got {match_direction!r}")
    transcript_mode = modes.get("transcript", "record")
    if transcript_mode not in TRANSCRIPT_MODES:
        issues.append(
            f"modes.transcript must be one of {TRANSCRIPT_MODES}, got {transcript_mode!r}")

    paths = raw.get("paths", {})
    taxonomy_path = _resolve_path(paths.get("taxonomy"), default_taxonomy_path())
    stopwords_path = _resolve_path(paths.get("stopwords"), default_stopwords_path())
    rules_path = _resolve_path(paths.get("rules"), default_rules_path())
    corpus_path = _resolve_path(paths.get("corpus"), None)
    replay_path = _resolve_path(paths.get("replay_transcript"), None)
    for name, path in (("taxonomy", taxonomy_path), ("stopwords", stopwords_path),
                       ("rules", rules_path)):
        if not path.is_file():
            issues.append(f"paths.{name} does not exist: {path}")
    if corpus_path is not None and not corpus_path.is_file():
        issues.append(f"paths.corpus does not exist: {corpus_path}")
    if transcript_mode == "replay":
        if replay_path is None:
            issues.append("replay mode requires paths.replay_transcript (or --replay)")
        elif not replay_path.is_file():
            issues.append(f"paths.replay_transcript does not exist: {replay_path}")
    elif replay_path is not None:
        issues.append("paths.replay_transcript is set but modes.transcript is 'record'")

    if issues:
        raise ConfigError(issues)
    return RunConfig(
        chat_provider=provider,
        endpoint=endpoint,
        api_key_env=api_key_env,
        script_path=script_path,
        tiers=tiers,
        max_output_tokens=max_output_tokens,
        system_role=system_role,
        pricing=pricing,
        embedder=embedder,
        sidecar_url=sidecar_url,
        judge=judge,
        blanc=blanc,
        strict_parse=strict_parse,
        retry_on_violation=retry_on_violation,
        match_direction=match_direction,
        anonymize=anonymize,
        transcript_mode=transcript_mode,
        replay_path=replay_path,
        taxonomy_path=taxonomy_path,
        stopwords_path=stopwords_path,
        rules_path=rules_path,
        corpus_path=corpus_path,
    )


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge user file (if any) and CLI overrides over shipped defaults."""
    raw = default_config_raw()
    if path is not None:
        with Path(path).open("r", encoding="utf-8") as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError([f"config file is not valid JSON: {exc}"]) from None
        if not isinstance(user, dict):
            raise ConfigError(["config file must contain a JSON object"])
        raw = _merge(raw, user)
    if overrides:
        raw = _merge(raw, overrides)
    return parse_config(raw)
