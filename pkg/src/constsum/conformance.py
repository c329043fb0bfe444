"""Provider conformance checks shared by the mocks and the model service.

The protocol is the contract: anything claiming to embed, fill masks, score
summaries, or project vectors must pass the same checks whether it is an
in-process mock or the HTTP service. Each check returns a list of failure
descriptions; an empty list means conformant.
"""

from __future__ import annotations

import math

from .providers.base import Embedder, MaskedLM, MaskedSequence

FIXTURE_TEXTS = (
    "Everyone has the right to life and personal liberty.",
    "No one shall be subjected to torture or degrading treatment.",
    "Slavery and forced labour are prohibited in every form.",
    "Human dignity shall be inviolable and must be protected.",
    "All citizens contribute to public expenditure according to their means.",
    "The death penalty is abolished and may not be reintroduced.",
    "Education is a right and primary schooling is compulsory.",
    "Property entails obligations and its use shall serve the public good.",
    "Judges are independent and subject only to the law.",
    "Every person may address petitions to the public authorities.",
)

UNIT_NORM_TOL = 1e-6


def check_embedder(embedder: Embedder, texts: tuple[str, ...] = FIXTURE_TEXTS) -> list[str]:
    failures = []
    vectors = embedder.embed(list(texts))
    if len(vectors) != len(texts):
        return [f"embed returned {len(vectors)} vectors for {len(texts)} texts"]
    dimension = len(vectors[0])
    for i, vec in enumerate(vectors):
        if len(vec) != dimension:
            failures.append(f"vector {i} has dimension {len(vec)}, expected {dimension}")
        norm = math.sqrt(sum(float(x) * float(x) for x in vec))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            failures.append(f"vector {i} norm {norm!r} is not 1 within {UNIT_NORM_TOL}")
    again = embedder.embed(list(texts))
    for i, (a, b) in enumerate(zip(vectors, again)):
        if any(abs(float(x) - float(y)) > UNIT_NORM_TOL for x, y in zip(a, b)):
            failures.append(f"embed of text {i} is not deterministic")
    twins = embedder.embed([texts[0], texts[0]])
    if any(float(x) != float(y) for x, y in zip(twins[0], twins[1])):
        failures.append("identical texts embedded to different vectors")
    return failures


def check_masked_lm(mlm: MaskedLM, texts: tuple[str, ...] = FIXTURE_TEXTS) -> list[str]:
    failures = []
    for i, text in enumerate(texts[:3]):
        tokens = mlm.tokenize(text)
        if not tokens:
            failures.append(f"tokenize returned nothing for text {i}")
            continue
        if mlm.tokenize(text) != tokens:
            failures.append(f"tokenize of text {i} is not deterministic")
        positions = tuple(range(0, len(tokens), 3))
        seq = MaskedSequence(tokens=tuple(tokens), mask_positions=positions)
        predictions = mlm.fill_mask(seq, context="")
        if len(predictions) != len(positions):
            failures.append(
                f"fill_mask returned {len(predictions)} predictions for "
                f"{len(positions)} positions (text {i})")
        if mlm.fill_mask(seq, context="") != predictions:
            failures.append(f"fill_mask on text {i} is not deterministic")
        empty = MaskedSequence(tokens=tuple(tokens), mask_positions=())
        if mlm.fill_mask(empty, context="") != []:
            failures.append(f"fill_mask with zero positions is not empty (text {i})")
    return failures


def check_tuner(tuner, document: str, summary: str) -> list[str]:
    failures = []
    score = tuner.blanc_tune(document, summary)
    if not (-1.0 <= score <= 1.0):
        failures.append(f"blanc_tune score {score!r} outside [-1, 1]")
    if tuner.blanc_tune(document, summary) != score:
        failures.append("blanc_tune is not deterministic")
    return failures


def check_projector(projector, embedder: Embedder,
                    texts: tuple[str, ...] = FIXTURE_TEXTS[:5]) -> list[str]:
    failures = []
    vectors = embedder.embed(list(texts))
    coords = projector.project(vectors)
    if len(coords) != len(vectors):
        failures.append(f"project returned {len(coords)} points for {len(vectors)} vectors")
    for i, point in enumerate(coords):
        if len(point) != 2:
            failures.append(f"projected point {i} has {len(point)} components, expected 2")
    again = projector.project(vectors)
    if [tuple(map(float, p)) for p in coords] != [tuple(map(float, p)) for p in again]:
        failures.append("project is not deterministic")
    return failures


def run_conformance(
    embedder: Embedder | None = None,
    masked_lm: MaskedLM | None = None,
    tuner=None,
    projector=None,
    texts: tuple[str, ...] = FIXTURE_TEXTS,
) -> list[str]:
    """Run every applicable check; returns all failures found."""
    failures = []
    if embedder is not None:
        failures += check_embedder(embedder, texts)
    if masked_lm is not None:
        failures += check_masked_lm(masked_lm, texts)
    if tuner is not None:
        failures += check_tuner(tuner, texts[0], texts[1])
    if projector is not None and embedder is not None:
        failures += check_projector(projector, embedder, texts[:5])
    return failures
