"""Lexical evaluation criteria.

Compression ratio, novelty/Jaccard/Dice over stopword-free word sets, TF.IDF
cosine, and ROUGE-1/2/L/LSum, plus the tokenization helpers they share. All
operations here are pure; anything LLM-backed lives in semeval.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import _lcskernels
from .stemming import stem

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")
_SENT_SPLIT = re.compile(r"[.!?\n]")


def tokenize(text: str) -> list[str]:
    """Case-fold and split on runs of non-alphanumeric characters."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def split_sentences(text: str) -> list[str]:
    """Split on '.', '!', '?' and newline; drop segments with no tokens."""
    return [s for s in _SENT_SPLIT.split(text) if tokenize(s)]


def word_set(text: str, stopwords: frozenset[str] | set[str]) -> set[str]:
    return {t for t in tokenize(text) if t not in stopwords}


def compression_ratio(source: str, summary: str) -> float:
    if len(source) == 0:
        raise ValueError("compression ratio needs a non-empty source text")
    return 100.0 * len(summary) / len(source)


def novelty(source_words: set[str], summary_words: set[str]) -> float:
    if not summary_words:
        raise ValueError("novelty needs a non-empty summary word set")
    return 100.0 * len(summary_words - source_words) / len(summary_words)


def jaccard(source_words: set[str], summary_words: set[str]) -> float:
    union = source_words | summary_words
    if not union:
        raise ValueError("jaccard needs a non-empty union of word sets")
    return len(source_words & summary_words) / len(union)


def dice(source_words: set[str], summary_words: set[str]) -> float:
    if not (source_words | summary_words):
        raise ValueError("dice needs a non-empty union of word sets")
    inter = len(source_words & summary_words)
    return 2.0 * inter / (len(source_words) + len(summary_words))


def _tfidf_terms(text: str, stopwords: frozenset[str] | set[str]) -> list[str]:
    return [stem(t) for t in tokenize(text) if t not in stopwords]


def tfidf_cosine(
    source: str, summary: str, stopwords: frozenset[str] | set[str]
) -> float:
    """Cosine of TF.IDF vectors fitted on exactly these two documents.

    Terms are the stemmed stopword-free tokens; IDF uses the smoothed form
    ln((1 + n) / (1 + df)) + 1 with n = 2 documents, and vectors are
    L2-normalized before the dot product.
    """
    terms_a = _tfidf_terms(source, stopwords)
    terms_b = _tfidf_terms(summary, stopwords)
    if not terms_a or not terms_b:
        raise ValueError("tfidf cosine needs at least one term per text")
    counts_a = Counter(terms_a)
    counts_b = Counter(terms_b)
    vocab = sorted(set(counts_a) | set(counts_b))
    n_docs = 2
    vec_a = np.zeros(len(vocab))
    vec_b = np.zeros(len(vocab))
    for idx, term in enumerate(vocab):
        df = (term in counts_a) + (term in counts_b)
        idf = math.log((1 + n_docs) / (1 + df)) + 1.0
        vec_a[idx] = counts_a.get(term, 0) * idf
        vec_b[idx] = counts_b.get(term, 0) * idf
    vec_a /= np.linalg.norm(vec_a)
    vec_b /= np.linalg.norm(vec_b)
    return float(np.dot(vec_a, vec_b))


def _fmeasure(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ngram_f1(ref: list[str], cand: list[str], n: int) -> float:
    ref_grams = Counter(tuple(ref[i : i + n]) for i in range(len(ref) - n + 1))
    cand_grams = Counter(tuple(cand[i : i + n]) for i in range(len(cand) - n + 1))
    if not ref_grams or not cand_grams:
        return 0.0
    hits = sum(min(count, cand_grams[gram]) for gram, count in ref_grams.items())
    return _fmeasure(hits / sum(cand_grams.values()), hits / sum(ref_grams.values()))


def _encode(vocab: dict[str, int], tokens: list[str]) -> np.ndarray:
    ids = np.empty(len(tokens), dtype=np.int64)
    for i, tok in enumerate(tokens):
        ids[i] = vocab.setdefault(tok, len(vocab))
    return ids


def _lcs_f1(ref: list[str], cand: list[str]) -> float:
    if not ref or not cand:
        return 0.0
    vocab: dict[str, int] = {}
    length = _lcskernels.lcs_length(_encode(vocab, ref), _encode(vocab, cand))
    return _fmeasure(length / len(cand), length / len(ref))


def _union_lcs_f1(ref_sents: list[list[str]], cand_sents: list[list[str]]) -> float:
    ref_total = sum(len(s) for s in ref_sents)
    cand_total = sum(len(s) for s in cand_sents)
    if ref_total == 0 or cand_total == 0:
        return 0.0
    vocab: dict[str, int] = {}
    ref_ids = [_encode(vocab, s) for s in ref_sents]
    cand_ids = [_encode(vocab, s) for s in cand_sents]
    # Token budgets clip repeated hits so a token matched in several sentence
    # pairs is only credited as often as it occurs in each text.
    ref_budget = Counter(t for s in ref_sents for t in s)
    cand_budget = Counter(t for s in cand_sents for t in s)
    hits = 0
    for sent, ids in zip(ref_sents, ref_ids):
        in_union = np.zeros(len(ids), dtype=bool)
        for cand in cand_ids:
            in_union |= _lcskernels.lcs_hit_mask(ids, cand)
        for pos in np.flatnonzero(in_union):
            tok = sent[pos]
            if ref_budget[tok] > 0 and cand_budget[tok] > 0:
                hits += 1
                ref_budget[tok] -= 1
                cand_budget[tok] -= 1
    return _fmeasure(hits / cand_total, hits / ref_total)


ROUGE_VARIANTS = ("R1", "R2", "RL", "RLSum")


def rouge(reference: str, candidate: str, variant: str) -> float:
    """ROUGE F1 for a single reference/candidate pair."""
    if variant == "R1":
        return _ngram_f1(tokenize(reference), tokenize(candidate), 1)
    if variant == "R2":
        return _ngram_f1(tokenize(reference), tokenize(candidate), 2)
    if variant == "RL":
        return _lcs_f1(tokenize(reference), tokenize(candidate))
    if variant == "RLSum":
        ref_sents = [tokenize(s) for s in split_sentences(reference)]
        cand_sents = [tokenize(s) for s in split_sentences(candidate)]
        return _union_lcs_f1(ref_sents, cand_sents)
    raise ValueError(f"unknown rouge variant: {variant!r}")


@dataclass
class MetricRow:
    """One evaluated topic summary; mirrors the per-topic results table."""

    topic_id: str
    num_countries: int
    cr: float
    r1: float
    r2: float
    rl: float
    rlsum: float
    novelty: float
    jaccard: float
    dice: float
    tfidf_sim: float
    sbert_sim: float | None = None
    blanc_help: float | None = None
    blanc_tune: float | None = None
    extras: dict = field(default_factory=dict)

    _BOUNDS = {
        "r1": (0.0, 1.0),
        "r2": (0.0, 1.0),
        "rl": (0.0, 1.0),
        "rlsum": (0.0, 1.0),
        "jaccard": (0.0, 1.0),
        "dice": (0.0, 1.0),
        "novelty": (0.0, 100.0),
        "tfidf_sim": (-1.0, 1.0),
        "sbert_sim": (-1.0, 1.0),
    }

    def __post_init__(self) -> None:
        if self.num_countries < 1:
            raise ValueError("num_countries must be >= 1")
        if self.cr < 0:
            raise ValueError("cr must be non-negative")
        for name, (lo, hi) in self._BOUNDS.items():
            value = getattr(self, name)
            if value is None:
                continue
            if not (lo - 1e-9 <= value <= hi + 1e-9):
                raise ValueError(f"{name}={value} outside [{lo}, {hi}]")
