"""Deterministic offline providers.

Four providers live here:
  ScriptedChatProvider   request-keyed canned responses (fixture scripts)
  SyntheticChatProvider  rule-based responses for every pipeline prompt shape
  HashEmbedder           hashing bag-of-words sentence embedder
  MockMaskedLM           most-frequent-token fill-mask model

All of them are pure functions of their inputs, so any run driven by them is
byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np

from .base import (
    BudgetExceededError,
    ChatProvider,
    ChatRequest,
    ChatResponse,
    Embedder,
    MaskedLM,
    MaskedSequence,
    ScriptMissError,
    estimate_tokens,
)
from .pricing import CostLedger


def request_digest(request: ChatRequest) -> str:
    """Stable identity of a chat request (model, role, content, temperature)."""
    payload = json.dumps(
        {
            "model": request.model,
            "system_role": request.system_role,
            "user_content": request.user_content,
            "temperature": request.temperature,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _respond(request: ChatRequest, text: str, ledger: CostLedger | None) -> ChatResponse:
    response = ChatResponse(
        text=text,
        prompt_tokens=estimate_tokens(request.system_role) + estimate_tokens(request.user_content),
        completion_tokens=estimate_tokens(text),
    )
    if ledger is not None:
        ledger.add(request.model, response.prompt_tokens, response.completion_tokens)
    return response


class ScriptedChatProvider(ChatProvider):
    """Replays canned responses keyed by the full request.

    Fixtures are dicts with keys: name, model, system_role, user_content,
    temperature, response. Misses raise ScriptMissError naming the known
    fixtures so drifted prompts are caught immediately.
    """

    def __init__(self, fixtures: list[dict], ledger: CostLedger | None = None):
        self._responses: dict[str, str] = {}
        self._names: dict[str, str] = {}
        self.ledger = ledger
        self.requests: list[ChatRequest] = []
        for fx in fixtures:
            request = ChatRequest(
                model=fx["model"],
                system_role=fx["system_role"],
                user_content=fx["user_content"],
                temperature=fx.get("temperature", 0.0),
            )
            digest = request_digest(request)
            self._responses[digest] = fx["response"]
            self._names[digest] = fx.get("name", digest[:12])

    @classmethod
    def from_json(cls, path: str | Path, ledger: CostLedger | None = None) -> "ScriptedChatProvider":
        fixtures = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(fixtures, ledger=ledger)

    def chat(self, request: ChatRequest) -> ChatResponse:
        self.requests.append(request)
        digest = request_digest(request)
        if digest not in self._responses:
            known = ", ".join(sorted(self._names.values())) or "none"
            raise ScriptMissError(
                f"no scripted response for request digest {digest[:12]} "
                f"(model={request.model!r}, content starts "
                f"{request.user_content[:60]!r}); known fixtures: {known}")
        return _respond(request, self._responses[digest], self.ledger)


_WORD = re.compile(r"\w+")


class HashEmbedder(Embedder):
    """Bag-of-words embedding: each token hashes to one of `dimension` buckets."""

    def __init__(self, dimension: int = 256):
        self.dimension = dimension

    def _one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension)
        for token in _WORD.findall(text.lower()):
            digest = hashlib.md5(token.encode("utf-8")).digest()
            vec[int.from_bytes(digest[:4], "big") % self.dimension] += 1.0
        if not vec.any():
            vec[0] = 1.0
        return vec / np.linalg.norm(vec)

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        if not texts:
            raise ValueError("embed needs at least one text")
        return [self._one(t) for t in texts]


_MLM_TOKEN = re.compile(r"\w+|[^\w\s]")


class MockMaskedLM(MaskedLM):
    """Predicts the most frequent visible token, ties broken by first occurrence."""

    def __init__(self, token_limit: int = 512):
        self.token_limit = token_limit

    def tokenize(self, text: str) -> list[str]:
        return _MLM_TOKEN.findall(text)

    def fill_mask(self, seq: MaskedSequence, context: str) -> list[str]:
        context_tokens = self.tokenize(context)
        total = len(context_tokens) + len(seq.tokens)
        if total > self.token_limit:
            raise BudgetExceededError(
                f"context + sequence is {total} tokens, over the "
                f"{self.token_limit}-token limit; truncate the input")
        if not seq.mask_positions:
            return []
        masked = set(seq.mask_positions)
        visible = context_tokens + [
            t for i, t in enumerate(seq.tokens) if i not in masked
        ]
        if not visible:
            prediction = "."
        else:
            counts: dict[str, int] = {}
            first_seen: dict[str, int] = {}
            for i, tok in enumerate(visible):
                counts[tok] = counts.get(tok, 0) + 1
                first_seen.setdefault(tok, i)
            prediction = max(counts, key=lambda t: (counts[t], -first_seen[t]))
        return [prediction] * len(seq.mask_positions)


_STAGE1_HEAD = "Given the text "
_STAGE1_TAIL = ", detect keywords in the text and generate a compressed"
_STAGE2_HEAD = "Given the text:\n"
_PROBE_HEAD = "Describe the topic "
_PROBE_TAIL = " based on what is written"
_JUDGE_MARK = "Rate the following summary"

_PROBE_ASPECTS = [
    "guarantees", "scope", "limitations", "remedies", "duties",
    "protection", "procedure", "equality", "access", "participation",
    "security", "review", "oversight", "compensation", "education",
]


def _sentences(text: str) -> list[str]:
    parts = re.split(r"(?<=[.!?])\s+", text.replace("\n", " "))
    return [p.strip() for p in parts if p.strip()]


class SyntheticChatProvider(ChatProvider):
    """Generates plausible well-formed responses for every pipeline prompt.

    Used to drive end-to-end runs offline and to record replayable
    transcripts; every response is a pure function of the prompt text.
    """

    def __init__(self, ledger: CostLedger | None = None):
        self.ledger = ledger
        self.requests: list[ChatRequest] = []

    def chat(self, request: ChatRequest) -> ChatResponse:
        self.requests.append(request)
        prompt = request.user_content
        if prompt.startswith(_PROBE_HEAD) and _PROBE_TAIL in prompt:
            text = self._probe(prompt)
        elif prompt.startswith(_STAGE2_HEAD):
            text = self._stage2(prompt)
        elif prompt.startswith(_STAGE1_HEAD) and _STAGE1_TAIL in prompt:
            text = self._stage1(prompt)
        elif _JUDGE_MARK in prompt:
            text = self._judge(prompt)
        else:
            raise ScriptMissError(
                f"synthetic provider has no rule for prompt starting "
                f"{prompt[:60]!r}")
        return _respond(request, text, self.ledger)

    def _probe(self, prompt: str) -> str:
        macro = prompt[len(_PROBE_HEAD): prompt.index(_PROBE_TAIL)]
        seed = int.from_bytes(hashlib.sha256(macro.encode()).digest()[:4], "big")
        count = 8 + seed % 8
        lines = []
        for i in range(count):
            aspect = _PROBE_ASPECTS[(seed + i) % len(_PROBE_ASPECTS)]
            lines.append(
                f"{i + 1}. {macro} {aspect}: Constitutional provisions on "
                f"{aspect} related to {macro.lower()}.")
        return "\n".join(lines)

    def _keywords(self, text: str) -> list[str]:
        seen = []
        for tok in _WORD.findall(text.lower()):
            if len(tok) >= 6 and tok not in seen:
                seen.append(tok)
            if len(seen) == 5:
                break
        if not seen:
            tokens = _WORD.findall(text.lower())
            seen = [tokens[0]] if tokens else ["text"]
        return seen

    def _stage1(self, prompt: str) -> str:
        text = prompt[len(_STAGE1_HEAD): prompt.index(_STAGE1_TAIL)]
        keywords = self._keywords(text)
        sentences = _sentences(text)
        compressed = " ".join(sentences[:2])
        missing = [k for k in keywords if k not in compressed.lower()]
        if missing:
            compressed = f"{compressed} Key aspects include {', '.join(missing)}."
        return f"Keywords: {', '.join(keywords)}\nCompressed Text: {compressed}"

    def _stage2(self, prompt: str) -> str:
        body = prompt[len(_STAGE2_HEAD):]
        lines = body.split("\n")
        current = lines[0].strip()
        incoming = lines[1].strip()
        marker = "Note that you must keep the following keywords: "
        start = prompt.index(marker) + len(marker)
        end = prompt.index("\nReturn only", start)
        keywords = [k.strip() for k in prompt[start:end].split(",") if k.strip()]
        merged_sentences = _sentences(current)
        for sent in _sentences(incoming):
            if sent not in merged_sentences:
                merged_sentences.append(sent)
        merged = " ".join(merged_sentences)
        missing = [k for k in keywords if k.lower() not in merged.lower()]
        if missing:
            merged = f"{merged} Key aspects include {', '.join(missing)}."
        return f"Final Text: {merged}"

    def _judge(self, prompt: str) -> str:
        digest = hashlib.sha256(prompt.encode("utf-8")).digest()
        labels = ["Informative", "Quality", "Coherence", "Attributable",
                  "Overall Preference"]
        return "\n".join(
            f"{label}: {3 + digest[i] % 3}" for i, label in enumerate(labels))
