"""Two-stage summarization pipeline.

Stage 1 compresses each country's topic text under a keyword-retention
constraint; Stage 2 folds the country summaries into one topic summary,
largest source first, one merge per chat call, carrying the keyword union
forward. All chat calls run at temperature 0 with a fixed system role.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Callable

from .corpus import Corpus, collect, order_countries
from .providers.base import (
    ChatProvider,
    ChatRequest,
    ParseError,
    estimate_tokens,
)

log = logging.getLogger(__name__)

STAGE1_TEMPLATE = (
    "Given the text {text}, detect keywords in the text and generate a "
    "compressed version of it based on the keywords. All keywords must "
    "appear in the compressed version of the text. Show in output the "
    "keywords and the compressed text in the following format:\n"
    "  Keywords: <list-of-keywords>\n"
    "  Compressed Text: <compressed-text>\n"
    "where <list-of-keywords> is the list of identified keywords and "
    "<compressed-text> is the generated compressed text."
)

STAGE2_TEMPLATE = (
    "Given the text:\n"
    "  {current}\n"
    "  {incoming}\n"
    "Detect redundant information into the text and reformulate it in order "
    "to have all information without redundancies. Note that you must keep "
    "the following keywords: {keywords_current}, {keywords_incoming}\n"
    "Return only the final complete text, in the following format:\n"
    "  Final Text: <final-text>\n"
    "where <final-text> is the generated text."
)

DEFAULT_SYSTEM_ROLE = "summarization expert"


class PipelineError(Exception):
    """A topic could not be completed; carries partial state for diagnosis."""

    def __init__(self, message: str, partial: object = None):
        super().__init__(message)
        self.partial = partial


class OversizePromptError(PipelineError):
    """Prompt exceeds every configured model tier."""


@dataclass(frozen=True)
class ModelTier:
    model: str
    context_tokens: int

    def __post_init__(self) -> None:
        if self.context_tokens < 1:
            raise ValueError("context_tokens must be positive")


DEFAULT_TIERS = (
    ModelTier("gpt-3.5-turbo", 4096),
    ModelTier("gpt-3.5-turbo-16k", 16384),
)


@dataclass(frozen=True)
class ChatSettings:
    tiers: tuple[ModelTier, ...] = DEFAULT_TIERS
    max_output_tokens: int = 1024
    system_role: str = DEFAULT_SYSTEM_ROLE
    strict_parse: bool = False
    retry_on_violation: bool = False
    token_estimator: Callable[[str], int] = estimate_tokens


@dataclass
class Stage1Result:
    country: str
    topic_id: str
    keywords: list[str]
    compressed_text: str
    raw_response: str
    keyword_violations: list[str] = field(default_factory=list)
    model: str = ""


@dataclass
class Stage2State:
    current_text: str
    retained_keywords: list[str]
    merged_countries: list[str]


@dataclass
class TopicSummary:
    topic_id: str
    final_text: str
    countries: list[str]
    keyword_union: list[str]
    violation_log: list[str] = field(default_factory=list)


def select_model(prompt: str, settings: ChatSettings) -> str:
    """Smallest tier whose context fits the prompt plus the output budget."""
    needed = settings.token_estimator(prompt) + settings.max_output_tokens
    for tier in sorted(settings.tiers, key=lambda t: t.context_tokens):
        if tier.context_tokens >= needed:
            return tier.model
    raise OversizePromptError(
        f"prompt needs ~{needed} tokens; largest tier holds "
        f"{max(t.context_tokens for t in settings.tiers)}")


def build_stage1_prompt(text: str) -> str:
    if not text:
        raise ValueError("stage-1 prompt needs a non-empty text")
    return STAGE1_TEMPLATE.format(text=text)


def build_stage2_prompt(
    current_summary: str,
    next_summary: str,
    keywords_current: list[str],
    keywords_next: list[str],
) -> str:
    if not (current_summary and next_summary and keywords_current and keywords_next):
        raise ValueError("stage-2 prompt needs non-empty texts and keyword lists")
    return STAGE2_TEMPLATE.format(
        current=current_summary,
        incoming=next_summary,
        keywords_current=", ".join(keywords_current),
        keywords_incoming=", ".join(keywords_next),
    )


_KEYWORDS_LINE = re.compile(r"(?m)^\s*Keywords:")
_COMPRESSED_LABEL = re.compile(r"(?m)^\s*Compressed Text:")
_FINAL_LABEL = re.compile(r"(?m)^\s*Final Text:")


def parse_stage1(response: str) -> tuple[list[str], str]:
    kw_match = _KEYWORDS_LINE.search(response)
    if not kw_match:
        raise ParseError("response lacks a 'Keywords:' line", raw=response)
    kw_line_end = response.find("\n", kw_match.end())
    if kw_line_end == -1:
        kw_line_end = len(response)
    keywords = [
        k.strip() for k in response[kw_match.end(): kw_line_end].split(",")
        if k.strip()
    ]
    text_match = _COMPRESSED_LABEL.search(response)
    if not text_match:
        raise ParseError("response lacks a 'Compressed Text:' label", raw=response)
    compressed = response[text_match.end():].strip()
    if not keywords:
        raise ParseError("empty keyword list", raw=response)
    if not compressed:
        raise ParseError("empty compressed text", raw=response)
    return keywords, compressed


def parse_stage2(response: str) -> str:
    m = _FINAL_LABEL.search(response)
    if not m:
        raise ParseError("response lacks a 'Final Text:' label", raw=response)
    final = response[m.end():].strip()
    if not final:
        raise ParseError("empty final text", raw=response)
    return final


def _normalize(text: str) -> str:
    return " ".join(text.split()).lower()


def keyword_violations(keywords: list[str], text: str) -> list[str]:
    """Keywords not contained in the text, case-insensitive, whitespace-normalized."""
    haystack = _normalize(text)
    return [k for k in keywords if _normalize(k) not in haystack]


def _ordered_union(lists: list[list[str]]) -> list[str]:
    seen: list[str] = []
    for lst in lists:
        for item in lst:
            if item not in seen:
                seen.append(item)
    return seen


def _chat(chat: ChatProvider, prompt: str, settings: ChatSettings) -> tuple[str, str]:
    model = select_model(prompt, settings)
    request = ChatRequest(
        model=model,
        system_role=settings.system_role,
        user_content=prompt,
        temperature=0.0,
        max_output_tokens=settings.max_output_tokens,
    )
    return chat.chat(request).text, model


def run_stage1(
    country: str,
    topic_id: str,
    corpus: Corpus,
    chat: ChatProvider,
    settings: ChatSettings = ChatSettings(),
) -> Stage1Result:
    text = collect(country, topic_id, corpus)
    if text is None:
        raise PipelineError(f"no portions for country {country!r}, topic {topic_id!r}")
    prompt = build_stage1_prompt(text)
    try:
        raw, model = _chat(chat, prompt, settings)
        keywords, compressed = parse_stage1(raw)
    except (ParseError, OversizePromptError) as exc:
        raise PipelineError(
            f"stage 1 failed for ({country}, {topic_id}): {exc}") from exc
    violations = keyword_violations(keywords, compressed)
    if violations and settings.retry_on_violation:
        raw, model = _chat(chat, prompt, settings)
        keywords, compressed = parse_stage1(raw)
        violations = keyword_violations(keywords, compressed)
    return Stage1Result(
        country=country,
        topic_id=topic_id,
        keywords=keywords,
        compressed_text=compressed,
        raw_response=raw,
        keyword_violations=violations,
        model=model,
    )


def run_stage2(
    topic_id: str,
    stage1_results: list[Stage1Result],
    chat: ChatProvider,
    settings: ChatSettings = ChatSettings(),
) -> TopicSummary:
    """Fold country summaries in the order given (largest source first).

    k results issue exactly k-1 chat calls; the single-country case passes
    its compressed text through untouched.
    """
    if not stage1_results:
        raise PipelineError(f"no stage-1 results for topic {topic_id!r}")
    first = stage1_results[0]
    state = Stage2State(
        current_text=first.compressed_text,
        retained_keywords=list(first.keywords),
        merged_countries=[first.country],
    )
    violation_log = [
        f"stage1:{r.country}:{kw}" for r in stage1_results
        for kw in r.keyword_violations
    ]
    for incoming in stage1_results[1:]:
        prompt = build_stage2_prompt(
            state.current_text,
            incoming.compressed_text,
            state.retained_keywords,
            list(incoming.keywords),
        )
        try:
            raw, _ = _chat(chat, prompt, settings)
            state.current_text = parse_stage2(raw)
        except (ParseError, OversizePromptError) as exc:
            raise PipelineError(
                f"stage 2 failed for topic {topic_id!r} while merging "
                f"{incoming.country}: {exc}", partial=state) from exc
        state.retained_keywords = _ordered_union(
            [state.retained_keywords, list(incoming.keywords)])
        state.merged_countries.append(incoming.country)
    for kw in keyword_violations(state.retained_keywords, state.current_text):
        violation_log.append(f"stage2:{topic_id}:{kw}")
    return TopicSummary(
        topic_id=topic_id,
        final_text=state.current_text,
        countries=list(state.merged_countries),
        keyword_union=list(state.retained_keywords),
        violation_log=violation_log,
    )


def summarize_topic(
    topic_id: str,
    corpus: Corpus,
    chat: ChatProvider,
    settings: ChatSettings = ChatSettings(),
) -> tuple[TopicSummary, list[Stage1Result]]:
    """Stage 1 for every participating country, then the Stage-2 fold.

    A country whose Stage-1 response cannot be parsed is dropped from the
    topic with a logged error; the topic fails only if no country survives.
    """
    countries = order_countries(topic_id, corpus)
    if not countries:
        raise PipelineError(f"no countries hold portions for topic {topic_id!r}")
    results = []
    for country in countries:
        try:
            results.append(run_stage1(country, topic_id, corpus, chat, settings))
        except PipelineError as exc:
            log.error("skipping country %s for topic %s: %s", country, topic_id, exc)
    if not results:
        raise PipelineError(f"every country failed stage 1 for topic {topic_id!r}")
    summary = run_stage2(topic_id, results, chat, settings)
    return summary, results
