"""Topic-awareness probe: ask the model to enumerate topics for a macro-topic,
parse the numbered list, and match every generated topic against the actual
taxonomy by embedding cosine."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np

from .corpus import MacroTopic, Taxonomy, Topic
from .providers.base import ChatProvider, ChatRequest, Embedder, ParseError

log = logging.getLogger(__name__)

PROBE_TEMPLATE = (
    "Describe the topic {macro} based on what is written in the constitutions "
    "of European countries. Provide a list of as many arguments as possible "
    "that are related to this topic, with the associated description. The "
    "list must be structured as a number, followed by the argument name, "
    "followed by the description."
)

DIRECTIONS = ("generated_to_actual", "actual_to_generated")


@dataclass(frozen=True)
class GeneratedTopic:
    index: int
    name: str
    description: str

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("index must be >= 1")
        if not self.name:
            raise ValueError("name must be non-empty")


@dataclass(frozen=True)
class TopicMatch:
    generated: GeneratedTopic
    actual_topic_id: str
    similarity: float

    def __post_init__(self) -> None:
        if not (-1.0 - 1e-9 <= self.similarity <= 1.0 + 1e-9):
            raise ValueError("similarity outside [-1, 1]")


@dataclass(frozen=True)
class ProbeReport:
    macro_id: str
    n_actual: int
    n_generated: int
    matches: tuple[TopicMatch, ...]
    min_sim: float
    max_sim: float
    mean_sim: float


def build_probe_prompt(macro: MacroTopic) -> str:
    return PROBE_TEMPLATE.format(macro=macro.name)


_ITEM_LINE = re.compile(r"^\s*(\d+)\s*[.)]\s*(.+)$")
_NAME_SEP = re.compile(r":|\s-\s")


def parse_topic_list(response: str, strict: bool = False) -> list[GeneratedTopic]:
    """Parse `<number>. <name>: <description>` lines into GeneratedTopics.

    Non-matching lines are skipped with a logged warning (strict mode turns
    them into errors); zero parsed items is always an error.
    """
    items: list[GeneratedTopic] = []
    for line in response.splitlines():
        if not line.strip():
            continue
        m = _ITEM_LINE.match(line)
        if not m:
            if strict:
                raise ParseError(f"unparsable topic line: {line!r}", raw=response)
            log.warning("skipping unparsable topic line: %r", line)
            continue
        index = int(m.group(1))
        rest = m.group(2).strip()
        sep = _NAME_SEP.search(rest)
        if sep is None:
            if strict:
                raise ParseError(f"topic line lacks a name separator: {line!r}",
                                 raw=response)
            log.warning("skipping topic line without name separator: %r", line)
            continue
        name = rest[: sep.start()].strip()
        description = rest[sep.end():].strip()
        if not name:
            if strict:
                raise ParseError(f"topic line has an empty name: {line!r}", raw=response)
            log.warning("skipping topic line with empty name: %r", line)
            continue
        items.append(GeneratedTopic(index=index, name=name, description=description))
    if not items:
        raise ParseError("no topic items parsed from response", raw=response)
    return items


def render_generated(topic: GeneratedTopic) -> str:
    return f"{topic.name}: {topic.description}" if topic.description else topic.name


def render_actual(topic: Topic) -> str:
    return f"{topic.name}: {topic.description}" if topic.description else topic.name


def match_topics(
    generated: list[GeneratedTopic],
    macro: MacroTopic,
    taxonomy: Taxonomy,
    embedder: Embedder,
    direction: str = "generated_to_actual",
) -> list[TopicMatch]:
    """Best-match pairs by embedding cosine.

    generated_to_actual: each generated item finds its best actual topic
    (one match per generated item). actual_to_generated reverses the argmax
    (one match per actual topic). Ties break toward taxonomy / list order.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown match direction: {direction!r}")
    actual = taxonomy.topics_for_macro(macro.id)
    if not actual:
        raise ValueError(f"macro {macro.id} has no topics")
    if not generated:
        raise ValueError("no generated topics to match")
    gen_vecs = embedder.embed([render_generated(g) for g in generated])
    act_vecs = embedder.embed([render_actual(t) for t in actual])
    sims = np.array([[float(np.dot(g, a)) for a in act_vecs] for g in gen_vecs])
    matches = []
    if direction == "generated_to_actual":
        for i, g in enumerate(generated):
            j = int(np.argmax(sims[i]))
            matches.append(TopicMatch(g, actual[j].id, float(sims[i, j])))
    else:
        for j, t in enumerate(actual):
            i = int(np.argmax(sims[:, j]))
            matches.append(TopicMatch(generated[i], t.id, float(sims[i, j])))
    return matches


def summarize_probe(
    matches: list[TopicMatch],
    macro: MacroTopic,
    taxonomy: Taxonomy,
    n_generated: int | None = None,
) -> ProbeReport:
    if not matches:
        raise ValueError("cannot summarize zero matches")
    sims = [m.similarity for m in matches]
    return ProbeReport(
        macro_id=macro.id,
        n_actual=len(taxonomy.topics_for_macro(macro.id)),
        n_generated=len(matches) if n_generated is None else n_generated,
        matches=tuple(matches),
        min_sim=min(sims),
        max_sim=max(sims),
        mean_sim=sum(sims) / len(sims),
    )


def run_probe(
    macro: MacroTopic,
    taxonomy: Taxonomy,
    chat: ChatProvider,
    embedder: Embedder,
    *,
    model: str,
    system_role: str = "summarization expert",
    max_output_tokens: int = 1024,
    strict: bool = False,
    direction: str = "generated_to_actual",
) -> ProbeReport:
    """Full probe for one macro-topic: prompt, parse, match, summarize."""
    request = ChatRequest(
        model=model,
        system_role=system_role,
        user_content=build_probe_prompt(macro),
        temperature=0.0,
        max_output_tokens=max_output_tokens,
    )
    response = chat.chat(request)
    generated = parse_topic_list(response.text, strict=strict)
    matches = match_topics(generated, macro, taxonomy, embedder, direction=direction)
    return summarize_probe(matches, macro, taxonomy, n_generated=len(generated))
