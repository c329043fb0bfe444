"""Semantic and model-backed evaluation criteria.

Embedding cosine, BLANC-help orchestration (BLANC-tune is delegated to the
sidecar service), the five-criterion LLM judge, and the reference-summary
evaluation mode. Lexical metrics come from lexmetrics; this module adds
everything that needs a provider.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np

from . import lexmetrics as lm
from .corpus import ReferenceSummary
from .providers.base import (
    ChatProvider,
    ChatRequest,
    Embedder,
    MaskedLM,
    MaskedSequence,
    ParseError,
    ProviderError,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlancConfig:
    mask_every: int = 4
    min_token_len: int = 4
    token_budget: int = 512
    filler: str = "."

    def __post_init__(self) -> None:
        if self.mask_every < 1:
            raise ValueError("mask_every must be >= 1")
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")
        if self.token_budget < 1:
            raise ValueError("token_budget must be >= 1")
        if not self.filler:
            raise ValueError("filler must be non-empty")


@dataclass(frozen=True)
class QualityRating:
    informative: int
    quality: int
    coherence: int
    attributable: int
    overall: int

    def __post_init__(self) -> None:
        for name in ("informative", "quality", "coherence", "attributable", "overall"):
            value = getattr(self, name)
            if not (1 <= value <= 5):
                raise ValueError(f"{name} rating {value} outside [1, 5]")


@dataclass(frozen=True)
class JudgeSettings:
    model: str = "gpt-3.5-turbo"
    system_role: str = "evaluation expert"
    temperature: float = 0.0
    max_output_tokens: int = 256


def embedding_similarity(source: str, summary: str, embedder: Embedder) -> float:
    vec_a, vec_b = embedder.embed([source, summary])
    return float(np.dot(vec_a, vec_b))


def _mask_positions(tokens: list[str], offset: int, cfg: BlancConfig) -> list[int]:
    return [
        i for i, tok in enumerate(tokens)
        if i % cfg.mask_every == offset and len(tok) >= cfg.min_token_len
    ]


def blanc_help(
    document: str,
    summary: str,
    provider: MaskedLM,
    cfg: BlancConfig = BlancConfig(),
) -> float | None:
    """Masked-token accuracy gain from prepending the summary as context.

    The summary is truncated to cfg.token_budget tokens (the budget covers
    the summary only). Every document sentence is masked once per offset in
    [0, mask_every): positions congruent to the offset whose token is at
    least min_token_len long. The helped pass prepends the summary tokens;
    the base pass prepends the filler repeated to the same token count.
    Returns accuracy_help - accuracy_base, or None when no token in the
    document is maskable (the metric is blank, not zero).
    """
    if not summary:
        raise ValueError("blanc_help needs a non-empty summary")
    summary_tokens = provider.tokenize(summary)[: cfg.token_budget]
    help_context = " ".join(summary_tokens)
    base_context = " ".join([cfg.filler] * len(summary_tokens))
    total = 0
    correct_help = 0
    correct_base = 0
    for sentence in lm.split_sentences(document):
        tokens = provider.tokenize(sentence)
        if not tokens:
            continue
        for offset in range(cfg.mask_every):
            positions = _mask_positions(tokens, offset, cfg)
            if not positions:
                continue
            seq = MaskedSequence(tuple(tokens), tuple(positions))
            predicted_help = provider.fill_mask(seq, help_context)
            predicted_base = provider.fill_mask(seq, base_context)
            for pos, p_help, p_base in zip(positions, predicted_help, predicted_base):
                total += 1
                if p_help == tokens[pos]:
                    correct_help += 1
                if p_base == tokens[pos]:
                    correct_base += 1
    if total == 0:
        return None
    return correct_help / total - correct_base / total


JUDGE_TEMPLATE = (
    "Rate the following summary on a scale 1(worst)-5(best) according to "
    "five criteria.\n"
    "Criteria:\n"
    "Informative - a summary is informative if it encapsulates the crucial "
    "details from the source, offering a precise and concise presentation.\n"
    "Quality - a summary has an high quality if it is understandable and "
    "comprehensible.\n"
    "Coherence - a summary is coherent if it demonstrates a sound structure "
    "and organization.\n"
    "Attributable - all the information in the summary are attributable to "
    "the source.\n"
    "Overall Preference - the summary should succinctly, logically, and "
    "coherently convey the primary ideas presented in the source.\n"
    "Source:\n"
    "{source}\n"
    "Summary:\n"
    "{summary}\n"
    "Answer with exactly five lines, one line per criterion, in the format:\n"
    "<Criterion>: <integer 1-5>"
)

_RATING_LINE = re.compile(
    r"(?mi)^\s*(Informative|Quality|Coherence|Attributable|Overall(?:\s+Preference)?)"
    r"\s*:\s*([0-9]+)\s*$")

_CRITERION_KEY = {
    "informative": "informative",
    "quality": "quality",
    "coherence": "coherence",
    "attributable": "attributable",
    "overall": "overall",
    "overall preference": "overall",
}


def build_judge_prompt(source: str, summary: str) -> str:
    return JUDGE_TEMPLATE.format(source=source, summary=summary)


def parse_rating(response: str) -> QualityRating:
    found: dict[str, int] = {}
    for m in _RATING_LINE.finditer(response):
        key = _CRITERION_KEY[" ".join(m.group(1).lower().split())]
        value = int(m.group(2))
        if not (1 <= value <= 5):
            raise ParseError(f"rating {key}={value} outside [1, 5]", raw=response)
        found[key] = value
    missing = [k for k in ("informative", "quality", "coherence",
                           "attributable", "overall") if k not in found]
    if missing:
        raise ParseError(f"missing criterion ratings: {missing}", raw=response)
    return QualityRating(**found)


def qualitative_rate(
    source: str,
    summary: str,
    chat: ChatProvider,
    settings: JudgeSettings = JudgeSettings(),
) -> QualityRating:
    """One judge chat call; the judge sees only the source and the summary."""
    request = ChatRequest(
        model=settings.model,
        system_role=settings.system_role,
        user_content=build_judge_prompt(source, summary),
        temperature=settings.temperature,
        max_output_tokens=settings.max_output_tokens,
    )
    return parse_rating(chat.chat(request).text)


def lexical_columns(source: str, summary: str, stopwords: frozenset[str] | set[str]) -> dict:
    source_words = lm.word_set(source, stopwords)
    summary_words = lm.word_set(summary, stopwords)
    return {
        "cr": lm.compression_ratio(source, summary),
        "r1": lm.rouge(source, summary, "R1"),
        "r2": lm.rouge(source, summary, "R2"),
        "rl": lm.rouge(source, summary, "RL"),
        "rlsum": lm.rouge(source, summary, "RLSum"),
        "novelty": lm.novelty(source_words, summary_words),
        "jaccard": lm.jaccard(source_words, summary_words),
        "dice": lm.dice(source_words, summary_words),
        "tfidf_sim": lm.tfidf_cosine(source, summary, stopwords),
    }


def compute_metric_row(
    topic_id: str,
    num_countries: int,
    source: str,
    summary: str,
    stopwords: frozenset[str] | set[str],
    embedder: Embedder | None = None,
    masked_lm: MaskedLM | None = None,
    blanc_cfg: BlancConfig = BlancConfig(),
    blanc_tuner=None,
) -> lm.MetricRow:
    """Assemble the full per-topic row; model-backed columns stay blank
    whenever their provider is unavailable or fails."""
    columns = lexical_columns(source, summary, stopwords)
    sbert_sim = None
    if embedder is not None:
        sbert_sim = embedding_similarity(source, summary, embedder)
    bh = None
    if masked_lm is not None:
        try:
            bh = blanc_help(source, summary, masked_lm, blanc_cfg)
        except ProviderError as exc:
            log.warning("blanc_help unavailable for %s: %s", topic_id, exc)
    bt = None
    if blanc_tuner is not None:
        try:
            bt = blanc_tuner.blanc_tune(source, summary)
        except ProviderError as exc:
            log.warning("blanc_tune unavailable for %s: %s", topic_id, exc)
    return lm.MetricRow(
        topic_id=topic_id,
        num_countries=num_countries,
        sbert_sim=sbert_sim,
        blanc_help=bh,
        blanc_tune=bt,
        **columns,
    )


def evaluate_against_reference(
    reference: ReferenceSummary,
    summary: str,
    stopwords: frozenset[str] | set[str],
    num_countries: int = 1,
) -> lm.MetricRow:
    """Non-LLM columns with the reference text standing in for the source."""
    if not reference.text:
        raise ValueError(f"reference for {reference.topic_id!r} is empty")
    columns = lexical_columns(reference.text, summary, stopwords)
    return lm.MetricRow(
        topic_id=reference.topic_id,
        num_countries=num_countries,
        **columns,
    )
