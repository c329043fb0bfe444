"""Tiny deterministic models behind the inference endpoints.

Nothing here is trained offline: the embedder derives token vectors from a
hash seed, the masked LM counts bigrams over a bundled seed corpus, and
projection is plain PCA. Small on purpose — the service contract is about
protocol behavior (determinism, cardinality, bounds), not model quality.
"""

from __future__ import annotations

import hashlib
import re
import threading
from collections import Counter, defaultdict

import numpy as np

TOKEN_RE = re.compile(r"\w+|[^\w\s]")
WORD_RE = re.compile(r"\w+")
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")

START = "<s>"
_EMPTY = "\x00empty"
DYNAMIC_BOOST = 4


class ModelLoadError(RuntimeError):
    """The seed corpus is unusable; the service must refuse to start."""


def tokenize(text: str) -> list[str]:
    return TOKEN_RE.findall(text)


def split_sentences(text: str) -> list[str]:
    return [s for s in _SENTENCE_RE.split(text) if s.strip()]


class SeededEmbedder:
    """Mean-pooled bag of hash-seeded unit token vectors, L2-normalized."""

    def __init__(self, dimension: int = 64):
        if dimension < 2:
            raise ValueError("dimension must be at least 2")
        self.dimension = dimension
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._cache.get(token)
        if cached is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            vec = rng.standard_normal(self.dimension)
            cached = vec / np.linalg.norm(vec)
            self._cache[token] = cached
        return cached

    def embed_one(self, text: str) -> np.ndarray:
        words = WORD_RE.findall(text.lower())
        if not words:
            return self._token_vector(_EMPTY)
        pooled = np.mean([self._token_vector(w) for w in words], axis=0)
        norm = np.linalg.norm(pooled)
        if norm < 1e-12:
            # pathological cancellation; fall back to a fixed direction
            return self._token_vector(_EMPTY)
        return pooled / norm

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed_one(t) for t in texts]


class BigramMaskedLM:
    """Cloze prediction from bigram counts, boosted by per-request context.

    Counts are over surface forms so predictions can match original casing.
    """

    def __init__(self, unigrams: Counter, bigrams: dict[str, Counter]):
        if not unigrams:
            raise ModelLoadError("seed corpus yielded no tokens")
        self.unigrams = unigrams
        self.bigrams = bigrams

    @classmethod
    def from_corpus(cls, corpus_text: str) -> "BigramMaskedLM":
        unigrams: Counter = Counter()
        bigrams: dict[str, Counter] = defaultdict(Counter)
        for line in corpus_text.splitlines():
            if line.lstrip().startswith("#"):
                continue
            for sentence in split_sentences(line) or ([line] if line.strip() else []):
                tokens = tokenize(sentence)
                if not tokens:
                    continue
                unigrams.update(tokens)
                prev = START
                for tok in tokens:
                    bigrams[prev][tok] += 1
                    prev = tok
        if not unigrams:
            raise ModelLoadError("seed corpus yielded no tokens")
        return cls(unigrams, bigrams)

    def copy(self) -> "BigramMaskedLM":
        clone_bi: dict[str, Counter] = defaultdict(Counter)
        for prev, counter in self.bigrams.items():
            clone_bi[prev] = Counter(counter)
        return BigramMaskedLM(Counter(self.unigrams), clone_bi)

    def learn(self, text: str, weight: int = 1) -> None:
        if weight < 1:
            raise ValueError("weight must be a positive integer")
        for sentence in split_sentences(text) or ([text] if text.strip() else []):
            tokens = tokenize(sentence)
            if not tokens:
                continue
            for tok in tokens:
                self.unigrams[tok] += weight
            prev = START
            for tok in tokens:
                self.bigrams[prev][tok] += weight
                prev = tok

    @staticmethod
    def _dynamic_counts(
        seq_tokens: list[str], masked: set[int], context_tokens: list[str]
    ) -> tuple[Counter, dict[str, Counter]]:
        uni = Counter(context_tokens)
        uni.update(t for i, t in enumerate(seq_tokens) if i not in masked)
        bi: dict[str, Counter] = defaultdict(Counter)
        for a, b in zip(context_tokens, context_tokens[1:]):
            bi[a][b] += 1
        for i in range(len(seq_tokens) - 1):
            if i not in masked and (i + 1) not in masked:
                bi[seq_tokens[i]][seq_tokens[i + 1]] += 1
        return uni, bi

    @staticmethod
    def _best(scores: Counter) -> str | None:
        positive = [(token, n) for token, n in scores.items() if n > 0]
        if not positive:
            return None
        # highest count wins; ties go to the lexicographically smallest token
        return min(positive, key=lambda kv: (-kv[1], kv[0]))[0]

    def predict(
        self,
        seq_tokens: list[str],
        mask_positions: list[int],
        context_tokens: list[str],
    ) -> list[str]:
        masked = set(mask_positions)
        dyn_uni, dyn_bi = self._dynamic_counts(seq_tokens, masked, context_tokens)
        fallback_scores = Counter(self.unigrams)
        for tok, n in dyn_uni.items():
            fallback_scores[tok] += DYNAMIC_BOOST * n
        fallback = self._best(fallback_scores)
        out = []
        for pos in mask_positions:
            if pos == 0:
                prev = START
            elif (pos - 1) in masked:
                prev = None
            else:
                prev = seq_tokens[pos - 1]
            choice = None
            if prev is not None:
                scores = Counter(self.bigrams.get(prev, ()))
                for tok, n in dyn_bi.get(prev, {}).items():
                    scores[tok] += DYNAMIC_BOOST * n
                choice = self._best(scores)
            out.append(choice if choice is not None else fallback)
        return out


TUNE_DEFAULTS = {"mask_every": 4, "min_token_len": 4, "weight": 4}


def blanc_tune_score(
    base: BigramMaskedLM,
    document: str,
    summary: str,
    mask_every: int = 4,
    min_token_len: int = 4,
    weight: int = 4,
) -> float:
    """Masked-token accuracy gain after learning the summary's counts."""
    if mask_every < 1 or min_token_len < 1:
        raise ValueError("mask_every and min_token_len must be positive")
    tuned = base.copy()
    tuned.learn(summary, weight=weight)
    total = 0
    correct_base = 0
    correct_tuned = 0
    for sentence in split_sentences(document):
        tokens = tokenize(sentence)
        if not tokens:
            continue
        for offset in range(mask_every):
            positions = [
                i for i, tok in enumerate(tokens)
                if i % mask_every == offset and len(tok) >= min_token_len
            ]
            if not positions:
                continue
            from_base = base.predict(tokens, positions, [])
            from_tuned = tuned.predict(tokens, positions, [])
            for pos, b, t in zip(positions, from_base, from_tuned):
                total += 1
                correct_base += b == tokens[pos]
                correct_tuned += t == tokens[pos]
    if total == 0:
        return 0.0
    return (correct_tuned - correct_base) / total


def project_2d(vectors: list[list[float]]) -> list[tuple[float, float]]:
    """PCA onto the first two components, with a fixed sign convention."""
    matrix = np.asarray(vectors, dtype=float)
    centered = matrix - matrix.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2]
    if components.shape[0] < 2:
        components = np.vstack(
            [components, np.zeros((2 - components.shape[0], matrix.shape[1]))])
    fixed = []
    for comp in components:
        peak = comp[np.argmax(np.abs(comp))]
        fixed.append(-comp if peak < 0 else comp)
    coords = centered @ np.vstack(fixed).T
    return [(float(x), float(y)) for x, y in coords]


# Fine-tuning mutates a model copy; one at a time per worker.
TUNE_LOCK = threading.Lock()
