"""Probe checks: prompt shape, list parsing, embedding-based matching."""

import warnings

import numpy as np
import pytest

from constsum import corpus as cp
from constsum import probe
from constsum.providers import ChatRequest, HashEmbedder, ParseError, ScriptedChatProvider


@pytest.fixture(scope="module")
def taxonomy():
    return cp.load_taxonomy(cp.default_taxonomy_path())


def test_probe_prompt_for_m4(taxonomy):
    prompt = probe.build_probe_prompt(taxonomy.macros["M4"])
    assert prompt.startswith(
        "Describe the topic Citizen Duties based on what is written")
    assert prompt.endswith(
        "followed by the argument name, followed by the description.")


def test_probe_prompt_deterministic(taxonomy):
    a = probe.build_probe_prompt(taxonomy.macros["M1"])
    b = probe.build_probe_prompt(taxonomy.macros["M1"])
    assert a == b


def test_parse_topic_list_basic():
    items = probe.parse_topic_list(
        "1. Duty to pay taxes: Citizens have a duty to contribute.\n"
        "2. Military service - Compulsory service may be required.")
    assert items[0].index == 1
    assert items[0].name == "Duty to pay taxes"
    assert items[0].description == "Citizens have a duty to contribute."
    assert items[1].name == "Military service"


def test_parse_topic_list_skips_preamble():
    items = probe.parse_topic_list(
        "Here are the topics:\n1. Right to life: protected by law")
    assert len(items) == 1


def test_parse_topic_list_fifteen_items():
    response = "\n".join(
        f"{i}. Topic {i}: description number {i}" for i in range(1, 16))
    assert len(probe.parse_topic_list(response)) == 15


def test_parse_topic_list_strict_mode():
    with pytest.raises(ParseError):
        probe.parse_topic_list("preamble\n1. A: b", strict=True)


def test_parse_topic_list_empty_is_error():
    with pytest.raises(ParseError) as exc_info:
        probe.parse_topic_list("no numbered lines here")
    assert exc_info.value.raw == "no numbered lines here"


def test_parse_topic_list_parenthesis_numbering():
    items = probe.parse_topic_list("3) Equality: all are equal")
    assert items[0].index == 3


def test_match_identical_rendering_is_exact(taxonomy):
    embedder = HashEmbedder()
    macro = taxonomy.macros["M4"]
    actual = taxonomy.topics_for_macro(macro.id)[0]
    generated = [probe.GeneratedTopic(1, actual.name, actual.description)]
    matches = probe.match_topics(generated, macro, taxonomy, embedder)
    assert matches[0].actual_topic_id == actual.id
    assert matches[0].similarity == pytest.approx(1.0)


def test_match_singleton_macro(tmp_path):
    p = tmp_path / "t.tsv"
    p.write_text("M1\t\tA\td\nonly\tM1\tOnly topic\tdesc\n")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        taxonomy = cp.load_taxonomy(p)
    generated = [probe.GeneratedTopic(i, f"thing {i}", "words") for i in range(1, 4)]
    matches = probe.match_topics(generated, taxonomy.macros["M1"], taxonomy,
                                 HashEmbedder())
    assert [m.actual_topic_id for m in matches] == ["only"] * 3


def brute_force_matches(generated, actual, embedder):
    pairs = {}
    for g in generated:
        best = None
        for t in actual:
            sim = float(np.dot(
                embedder.embed([probe.render_generated(g)])[0],
                embedder.embed([probe.render_actual(t)])[0]))
            if best is None or sim > best[1] + 1e-12:
                best = (t.id, sim)
        pairs[g.index] = best
    return pairs


def test_match_equals_brute_force_3x4(taxonomy):
    embedder = HashEmbedder()
    macro = taxonomy.macros["M4"]
    actual = taxonomy.topics_for_macro(macro.id)
    assert len(actual) >= 3
    generated = [
        probe.GeneratedTopic(1, "Payment of taxes", "duty to contribute to public finances"),
        probe.GeneratedTopic(2, "Army service", "serving in the armed forces"),
        probe.GeneratedTopic(3, "Work", "the duty to work for society"),
    ]
    matches = probe.match_topics(generated, macro, taxonomy, embedder)
    expected = brute_force_matches(generated, actual, embedder)
    for m in matches:
        want_id, want_sim = expected[m.generated.index]
        assert m.actual_topic_id == want_id
        assert m.similarity == pytest.approx(want_sim, abs=1e-9)


def test_match_similarity_dominates_rescoring(taxonomy):
    embedder = HashEmbedder()
    macro = taxonomy.macros["M1"]
    generated = [probe.GeneratedTopic(i, f"right number {i}",
                                      "protection of the person") for i in range(1, 6)]
    matches = probe.match_topics(generated, macro, taxonomy, embedder)
    for m in matches:
        g_vec = embedder.embed([probe.render_generated(m.generated)])[0]
        for t in taxonomy.topics_for_macro(macro.id):
            t_vec = embedder.embed([probe.render_actual(t)])[0]
            assert m.similarity >= float(np.dot(g_vec, t_vec)) - 1e-9


def test_match_reversed_direction(taxonomy):
    embedder = HashEmbedder()
    macro = taxonomy.macros["M4"]
    generated = [probe.GeneratedTopic(1, "Taxes", "paying taxes"),
                 probe.GeneratedTopic(2, "Service", "military service")]
    matches = probe.match_topics(generated, macro, taxonomy, embedder,
                                 direction="actual_to_generated")
    assert len(matches) == len(taxonomy.topics_for_macro("M4"))
    assert {m.actual_topic_id for m in matches} == {"milserv", "taxes", "work"}


def test_summarize_probe_stats(taxonomy):
    macro = taxonomy.macros["M1"]
    g1 = probe.GeneratedTopic(1, "a", "b")
    g2 = probe.GeneratedTopic(2, "c", "d")
    matches = [probe.TopicMatch(g1, "life", 0.5), probe.TopicMatch(g2, "torture", 0.7)]
    report = probe.summarize_probe(matches, macro, taxonomy)
    assert (report.min_sim, report.max_sim, report.mean_sim) == (0.5, 0.7, 0.6)
    assert report.n_actual == 6
    assert report.n_generated == 2


def test_summarize_probe_single_match(taxonomy):
    macro = taxonomy.macros["M1"]
    match = probe.TopicMatch(probe.GeneratedTopic(1, "a", "b"), "life", 0.9)
    report = probe.summarize_probe([match], macro, taxonomy)
    assert report.min_sim == report.max_sim == report.mean_sim == 0.9


def test_summarize_probe_permutation_invariant(taxonomy):
    macro = taxonomy.macros["M1"]
    gs = [probe.GeneratedTopic(i, f"g{i}", "") for i in range(1, 4)]
    matches = [probe.TopicMatch(gs[0], "life", 0.2),
               probe.TopicMatch(gs[1], "torture", 0.9),
               probe.TopicMatch(gs[2], "slave", 0.4)]
    a = probe.summarize_probe(matches, macro, taxonomy)
    b = probe.summarize_probe(list(reversed(matches)), macro, taxonomy)
    assert (a.min_sim, a.max_sim, a.mean_sim) == (b.min_sim, b.max_sim, b.mean_sim)


def test_summarize_probe_empty_error(taxonomy):
    with pytest.raises(ValueError):
        probe.summarize_probe([], taxonomy.macros["M1"], taxonomy)


def test_run_probe_end_to_end(taxonomy):
    macro = taxonomy.macros["M4"]
    prompt = probe.build_probe_prompt(macro)
    response = (
        "1. Duty to pay taxes: Citizens have a duty to contribute.\n"
        "2. Military service: Compulsory service may be required.\n"
        "3. Duty to work: Work is a social duty.")
    provider = ScriptedChatProvider([{
        "name": "probe_M4",
        "model": "gpt-3.5-turbo",
        "system_role": "summarization expert",
        "user_content": prompt,
        "response": response,
    }])
    report = probe.run_probe(macro, taxonomy, provider, HashEmbedder(),
                             model="gpt-3.5-turbo")
    assert report.n_actual == 3
    assert report.n_generated == 3
    assert report.min_sim <= report.mean_sim <= report.max_sim
    request = provider.requests[0]
    assert isinstance(request, ChatRequest)
    assert request.temperature == 0.0
